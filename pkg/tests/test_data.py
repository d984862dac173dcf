import numpy as np
import pytest

from protoshot import DatasetSplit, EmbeddingSet, load_embeddings, load_splits
from protoshot.data import parse_embeddings, save_embeddings, save_splits
from protoshot.exceptions import EmbeddingFormatError, SplitError

GOOD = "id,label,e0,e1,e2,e3\nr1,cat,0.1,0.2,0.3,0.4\nr2,dog,1,2,3,4\nr3,cat,-1,-2,-3,-4\n"


class TestParseEmbeddings:
    def test_basic(self):
        data = parse_embeddings(GOOD)
        assert data.dim == 4
        assert len(data) == 3
        assert data.label_set == {"cat", "dog"}
        np.testing.assert_array_equal(data.by_label["cat"], [0, 2])

    def test_short_row_names_line(self):
        bad = "id,label,e0,e1\nr1,cat,0.1\n"
        with pytest.raises(EmbeddingFormatError, match=":2:"):
            parse_embeddings(bad)

    def test_nan_rejected(self):
        bad = "id,label,e0\nr1,cat,NaN\n"
        with pytest.raises(EmbeddingFormatError, match="non-finite"):
            parse_embeddings(bad)

    def test_inf_rejected(self):
        bad = "id,label,e0\nr1,cat,inf\n"
        with pytest.raises(EmbeddingFormatError, match="non-finite"):
            parse_embeddings(bad)

    def test_garbage_value_names_line(self):
        bad = "id,label,e0\nr1,cat,zero\n"
        with pytest.raises(EmbeddingFormatError, match=":2:"):
            parse_embeddings(bad)

    def test_duplicate_id(self):
        bad = "id,label,e0\nr1,cat,0.1\nr1,dog,0.2\n"
        with pytest.raises(EmbeddingFormatError, match="duplicate id"):
            parse_embeddings(bad)

    def test_empty_label(self):
        bad = "id,label,e0\nr1,,0.1\n"
        with pytest.raises(EmbeddingFormatError, match="empty label"):
            parse_embeddings(bad)

    def test_bad_header(self):
        with pytest.raises(EmbeddingFormatError, match="header"):
            parse_embeddings("ident,label,e0\nr1,cat,0.1\n")
        with pytest.raises(EmbeddingFormatError, match="header"):
            parse_embeddings("id,label,x0\nr1,cat,0.1\n")

    def test_crlf_accepted(self):
        data = parse_embeddings(GOOD.replace("\n", "\r\n"))
        assert len(data) == 3

    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        original = EmbeddingSet.from_arrays(
            ids=[f"r{i}" for i in range(7)],
            labels=["a", "b", "a", "c", "b", "c", "a"],
            vectors=rng.standard_normal((7, 5)),
        )
        path = tmp_path / "e.csv"
        save_embeddings(original, path)
        back = load_embeddings(path)
        assert back.ids == original.ids
        assert back.labels == original.labels
        np.testing.assert_array_equal(back.vectors, original.vectors)

    def test_missing_file(self, tmp_path):
        with pytest.raises(EmbeddingFormatError, match="cannot read"):
            load_embeddings(tmp_path / "absent.csv")


class TestSplits:
    def test_valid(self):
        split = DatasetSplit.from_mapping(
            {"base": ["a", "b"], "val": ["c"], "novel": ["d"]}
        )
        assert split.base == ("a", "b")
        assert split.part("novel") == ("d",)

    def test_overlap_names_label(self):
        with pytest.raises(SplitError, match="'a'"):
            DatasetSplit.from_mapping(
                {"base": ["a", "b"], "val": ["c"], "novel": ["a"]}
            )

    def test_missing_key(self):
        with pytest.raises(SplitError, match="missing"):
            DatasetSplit.from_mapping({"base": ["a"], "val": ["b"]})

    def test_unknown_key(self):
        with pytest.raises(SplitError, match="unknown keys"):
            DatasetSplit.from_mapping(
                {"base": ["a"], "val": ["b"], "novel": ["c"], "test": ["d"]}
            )

    def test_unknown_label_against_data(self):
        data = parse_embeddings(GOOD)
        split = DatasetSplit.from_mapping(
            {"base": ["cat"], "val": ["dog"], "novel": ["fox"]}
        )
        with pytest.raises(SplitError, match="'fox'"):
            split.validate_against(data.label_set)

    def test_file_roundtrip(self, tmp_path):
        split = DatasetSplit.from_mapping(
            {"base": ["a", "b"], "val": ["c"], "novel": ["d", "e"]}
        )
        path = tmp_path / "s.json"
        save_splits(split, path)
        assert load_splits(path) == split

    def test_bad_json_names_position(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text("{broken", encoding="utf-8")
        with pytest.raises(SplitError, match="invalid JSON"):
            load_splits(path)
