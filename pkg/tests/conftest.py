import numpy as np
import pytest

from constraint_automl.data import Dataset, make_blobs
from constraint_automl.search_space import build_default_space


@pytest.fixture(scope="session")
def tree():
    return build_default_space()


@pytest.fixture(scope="session")
def blobs():
    # well separated, two classes, with a sensitive attribute
    return make_blobs(200, 3, 2, 0.6, seed=3, sensitive=True, name="sep_blobs")


def toy_dataset(X, y, n_classes=None, sensitive=None, name="toy"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    return Dataset(X, y, (False,) * X.shape[1], n_classes or int(y.max()) + 1, name, sensitive)


# acceptance verdicts, printed together at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
