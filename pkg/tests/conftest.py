import numpy as np
import pytest

from granapprox import AttributeTable, ResidualTriplet, triangular_similarity
from granapprox.dataset import LabeledDataset


@pytest.fixture
def luk():
    return ResidualTriplet.from_names("lukasiewicz")


@pytest.fixture
def luk_square():
    return ResidualTriplet.from_names("lukasiewicz", "square")


def random_labeled_table(rng, n, n_classes=3, n_attrs=1, grid=None):
    """Random dataset with at least two nonempty classes.

    With ``grid`` set to an integer k, attribute values are multiples of 1/k
    with 0 and 1 forced to appear, so the triangular relations (and hence the
    constraint bounds) land on a lattice commensurable with the oracle grid.
    """
    if grid is None:
        vals = rng.uniform(size=(n, n_attrs))
    else:
        vals = rng.integers(0, grid + 1, size=(n, n_attrs)) / grid
        vals[0, 0] = 0.0
        vals[1 % n, 0] = 1.0
    labels = rng.choice([f"c{i}" for i in range(n_classes)], size=n)
    while len(set(labels.tolist())) < min(2, n_classes):
        labels = rng.choice([f"c{i}" for i in range(n_classes)], size=n)
    ranges = [1.0] * n_attrs if grid is not None else None
    table = AttributeTable.from_array(vals, ranges=ranges)
    return table, np.asarray(labels, dtype=object)


def random_similarity(rng, n, gamma=1.0, n_attrs=1, grid=None, n_classes=3):
    table, labels = random_labeled_table(rng, n, n_classes=n_classes,
                                         n_attrs=n_attrs, grid=grid)
    return triangular_similarity(table, gamma), labels


def iris_petal():
    from sklearn.datasets import load_iris
    d = load_iris()
    X = d.data[:, 2:4]
    y = np.asarray([d.target_names[t] for t in d.target], dtype=object)
    return X, y


def iris_dataset():
    X, y = iris_petal()
    return LabeledDataset.from_arrays(
        X, y, attribute_names=("petal_length", "petal_width"))
