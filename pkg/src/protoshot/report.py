"""Deterministic JSON emission for reports.

Floats are rendered with 17 significant digits so that re-parsing recovers
the exact double and repeated runs produce byte-identical documents; keys
keep insertion order and non-ASCII characters are escaped.
"""

from __future__ import annotations

import json
import math
import sys

import numpy as np


def _render(value, parts: list[str]) -> None:
    if isinstance(value, np.generic):
        value = value.item()
    if value is None:
        parts.append("null")
    elif value is True:
        parts.append("true")
    elif value is False:
        parts.append("false")
    elif isinstance(value, str):
        parts.append(json.dumps(value, ensure_ascii=True))
    elif isinstance(value, bool):
        parts.append("true" if value else "false")
    elif isinstance(value, int):
        parts.append(str(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite number {value!r}")
        parts.append(format(value, ".17g"))
    elif isinstance(value, dict):
        parts.append("{")
        for i, (key, item) in enumerate(value.items()):
            if i:
                parts.append(",")
            parts.append(json.dumps(str(key), ensure_ascii=True))
            parts.append(":")
            _render(item, parts)
        parts.append("}")
    elif isinstance(value, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(value):
            if i:
                parts.append(",")
            _render(item, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def render_json(doc) -> str:
    parts: list[str] = []
    _render(doc, parts)
    return "".join(parts)


def emit_report(doc, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(render_json(doc))
    stream.write("\n")
    stream.flush()
