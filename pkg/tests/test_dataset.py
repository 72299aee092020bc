import numpy as np
import pytest

from granapprox.dataset import DatasetError, LabeledDataset


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestCsvLoading:
    def test_basic(self, tmp_path):
        path = write(tmp_path, "id,x,y,label\na,0.1,2,red\nb,0.9,3,blue\n")
        ds = LabeledDataset.from_csv(path, "label", id_column="id")
        assert ds.ids == ("a", "b")
        assert ds.table.names == ("x", "y")
        assert np.allclose(ds.table.values, [[0.1, 2.0], [0.9, 3.0]])
        assert ds.classes == ("blue", "red")

    def test_row_index_ids_when_unnamed(self, tmp_path):
        path = write(tmp_path, "x,label\n0.1,red\n0.9,blue\n")
        ds = LabeledDataset.from_csv(path, "label")
        assert ds.ids == ("0", "1")

    def test_quoted_cells(self, tmp_path):
        path = write(tmp_path, 'id,x,label\nu1,"0.5","red, dark"\nu2,0.7,blue\n')
        ds = LabeledDataset.from_csv(path, "label", id_column="id")
        assert ds.labels[0] == "red, dark"

    def test_missing_label_column(self, tmp_path):
        path = write(tmp_path, "x,y\n0.1,0.2\n")
        with pytest.raises(DatasetError, match="label column"):
            LabeledDataset.from_csv(path, "label")

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "")
        with pytest.raises(DatasetError, match="empty"):
            LabeledDataset.from_csv(path, "label")

    def test_header_only(self, tmp_path):
        path = write(tmp_path, "x,label\n")
        with pytest.raises(DatasetError, match="no data rows"):
            LabeledDataset.from_csv(path, "label")

    def test_ragged_row(self, tmp_path):
        path = write(tmp_path, "x,y,label\n0.1,0.2,red\n0.3,blue\n")
        with pytest.raises(DatasetError, match="row 3"):
            LabeledDataset.from_csv(path, "label")

    def test_non_numeric_attribute(self, tmp_path):
        path = write(tmp_path, "x,label\nhigh,red\n")
        with pytest.raises(DatasetError, match="non-numeric"):
            LabeledDataset.from_csv(path, "label")

    def test_duplicate_ids(self, tmp_path):
        path = write(tmp_path, "id,x,label\nu1,0.1,red\nu1,0.2,blue\n")
        with pytest.raises(DatasetError, match="unique"):
            LabeledDataset.from_csv(path, "label", id_column="id")

    def test_no_attribute_columns(self, tmp_path):
        path = write(tmp_path, "id,label\nu1,red\n")
        with pytest.raises(DatasetError, match="no numeric attribute"):
            LabeledDataset.from_csv(path, "label", id_column="id")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="cannot read"):
            LabeledDataset.from_csv(tmp_path / "missing.csv", "label")

    def test_non_finite_rejected(self, tmp_path):
        path = write(tmp_path, "x,label\nnan,red\n0.3,blue\n")
        with pytest.raises(DatasetError, match="non-finite"):
            LabeledDataset.from_csv(path, "label")


class TestFromArrays:
    def test_single_class_allowed(self):
        ds = LabeledDataset.from_arrays([[0.1], [0.2]], ["a", "a"])
        assert ds.n_classes == 1

    def test_label_shape_mismatch(self):
        with pytest.raises(DatasetError):
            LabeledDataset.from_arrays([[0.1], [0.2]], ["a"])

    def test_declared_ranges(self):
        ds = LabeledDataset.from_arrays([[0.4], [0.6]], ["a", "b"],
                                        ranges=[1.0])
        assert ds.table.ranges[0] == 1.0
