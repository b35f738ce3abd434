from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean per-class recall over the classes present in ``y_true``."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if len(y_true) != len(y_pred):
        raise InvalidInputError("y_true and y_pred lengths differ")
    if len(y_true) == 0:
        raise InvalidInputError("balanced accuracy needs at least one label")
    classes = np.unique(y_true)
    recalls = [np.mean(y_pred[y_true == c] == c) for c in classes]
    return float(np.mean(recalls))


def equal_opportunity(y_true, y_pred, sensitive, positive: int = 1) -> float:
    """1 - |TPR(group 0) - TPR(group 1)|, TPR being recall of ``positive``.

    Defined as 1.0 when either group has no positive rows.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    s = np.asarray(sensitive)
    if not (len(y_true) == len(y_pred) == len(s)):
        raise InvalidInputError("y_true, y_pred and sensitive lengths differ")
    if len(s) and not np.isin(s, (0, 1)).all():
        raise InvalidInputError("sensitive attribute must be binary (0/1)")
    tprs = []
    for g in (0, 1):
        pos = (s == g) & (y_true == positive)
        if not pos.any():
            return 1.0
        tprs.append(np.mean(y_pred[pos] == positive))
    return float(1.0 - abs(tprs[0] - tprs[1]))
