"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

import numpy as np

# Published cross-validation rows: T, n_miss, MN, diff_MN, SD, diff_SD, L1, L2, pcc, pval.
CV_TABLE = [
    (0.00, 0, 10.83, 2.15, 3.80, -0.97, 1.56, 2.77, 0.05, 0.02),
    (0.25, 0, 10.80, 2.11, 3.82, -0.94, 1.53, 2.67, 0.05, 0.03),
    (0.50, 0, 10.73, 2.05, 3.91, -0.85, 1.45, 2.46, 0.04, 0.10),
    (0.75, 0, 10.62, 1.93, 4.18, -0.59, 1.26, 2.04, 0.04, 0.06),
    (1.00, 0, 10.25, 1.56, 4.54, -0.22, 0.89, 1.25, 0.03, 0.15),
    (1.25, 1, 9.93, 1.25, 4.87, 0.10, 0.67, 0.78, 0.05, 0.02),
    (1.50, 49, 9.11, 0.44, 5.58, 0.81, 0.63, 0.42, 0.05, 0.04),
]

# Published horizon-profile rows: T, h, ..., diff_MN, diff_SD, L1, L2 (subset of columns).
PROFILE_TABLE = [
    (1.5, 0, 0.82, 0.10, 0.46, 0.34),
    (1.5, 1, 1.07, -1.81, 1.44, 2.21),
    (1.5, 2, 1.79, -1.62, 1.71, 2.92),
    (1.5, 5, 1.50, -2.24, 1.87, 3.62),
    (0.0, 0, 2.19, -1.15, 1.67, 3.07),
    (0.0, 1, 1.19, -2.75, 1.97, 4.48),
    (0.0, 2, 1.85, -2.76, 2.31, 5.52),
    (0.0, 5, 1.42, -3.01, 2.21, 5.53),
]


def permutation_shapley(value, players):
    """Shapley values as the average marginal contribution over all orderings."""
    players = list(players)
    perms = list(itertools.permutations(players))
    out = {p: Fraction(0) for p in players}
    for order in perms:
        seen = frozenset()
        for p in order:
            out[p] += Fraction(value(seen | {p})) - Fraction(value(seen))
            seen = seen | {p}
    return {p: v / len(perms) for p, v in out.items()}


def normal_equations_wls(y, X, w):
    """beta = (X'WX)^-1 X'Wy solved directly."""
    W = np.diag(w)
    return np.linalg.solve(X.T @ W @ X, X.T @ W @ y)


def decimal_rate(rate: float) -> str:
    """Reference formatter: half-even rounding of the exact binary value."""
    q = Decimal("1") if abs(rate) > 10 else Decimal("0.1")
    text = str(Decimal(rate).quantize(q, rounding=ROUND_HALF_EVEN))
    if text.startswith("-") and Decimal(text) == 0:
        text = text[1:]
    return text + "%"


def weighted_sd_oracle(x, w):
    """Frequency-weight SD with the sum(w)/(sum(w)-1) correction."""
    x, w = np.asarray(x, float), np.asarray(w, float)
    m = np.sum(w * x) / np.sum(w)
    return float(np.sqrt(np.sum(w * (x - m) ** 2) / (np.sum(w) - 1)))
