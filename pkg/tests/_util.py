"""Helpers shared by the test modules."""
import numpy as np
from scipy.optimize import linear_sum_assignment


def multiset_distance(a, b) -> float:
    """Largest deviation under the best one-to-one matching of two eigenvalue lists."""
    a, b = np.asarray(a), np.asarray(b)
    assert a.shape == b.shape, (a.shape, b.shape)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max(initial=0.0))


# one (number, title, passed, detail) entry per acceptance criterion, printed at session end
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def acceptance_line(number: int, title: str, passed: bool, detail: str) -> str:
    return f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
