"""Regenerate the synthetic data fixtures shipped in ``src/synthsurvey/assets``.

The real ONS and survey series are not redistributed. These stand-ins are
constructed so that the derived quantities used in the experiments (three
month averages before each survey month, pre-Oct-2021 averages, group
differences) come out at the published conditioning values.

    python tools/make_fixtures.py
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from synthsurvey.dataio import month_index, month_label, quarter_of
from synthsurvey.domain import BASKET_SHARES

ASSETS = Path(__file__).resolve().parents[1] / "src" / "synthsurvey" / "assets"

START, CUTOFF, END = "1989-01", "2021-09", "2024-02"

# component: (pre-cutoff mean, wave amplitude, CV window mean, main window mean, Feb 2024 value)
TARGETS = {
    "food": (2.4, 2.2, 15.0, 17.0, 5.0),
    "restaurants": (3.8, 1.1, 8.1, 9.8, 6.0),
    "energy": (4.2, 7.5, 76.0, 88.0, -16.0),
    "other": (1.7, 1.0, 6.0, 5.0, 3.5),
    "headline": (2.6, 1.1, 9.0, 9.1, 3.8),
}
# Realised headline values at the two survey months.
HEADLINE_POINTS = {"2022-11": 9.3, "2023-02": 9.2}
CV_WINDOW = ("2022-08", "2022-09", "2022-10")
MAIN_WINDOW = ("2022-11", "2022-12", "2023-01")


def component_series() -> dict[str, dict[int, float]]:
    out = {}
    m0, mc, m1 = month_index(START), month_index(CUTOFF), month_index(END)
    for k, (comp, (mean, amp, cv, main, last)) in enumerate(TARGETS.items()):
        pre = np.arange(m0, mc + 1)
        wave = amp * np.sin(2 * np.pi * (pre - m0) / (37 + 5 * k)) + 0.6 * amp * np.cos(2 * np.pi * (pre - m0) / 113)
        wave -= wave.mean()
        vals = {int(m): float(mean + w) for m, w in zip(pre, wave)}
        anchors = {mc: vals[mc]}
        for window, target in ((CV_WINDOW, cv), (MAIN_WINDOW, main)):
            for off, month in zip((-0.4, 0.0, 0.4), window):
                anchors[month_index(month)] = target + off
        if comp == "headline":
            for month, v in HEADLINE_POINTS.items():
                anchors[month_index(month)] = v
        anchors[m1] = last
        keys = sorted(anchors)
        post = np.arange(mc + 1, m1 + 1)
        interp = np.interp(post, keys, [anchors[x] for x in keys])
        for m, v in zip(post, interp):
            vals[int(m)] = float(anchors.get(int(m), v))
        out[comp] = vals
    return out


def write_series(series) -> None:
    with open(ASSETS / "component_series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "component", "yoy"])
        for comp, vals in series.items():
            for m in sorted(vals):
                w.writerow([month_label(m), comp, f"{vals[m]:.4f}"])


def write_ias_aggregate(series) -> None:
    """Quarterly mean perceptions whose 2011Q2-2021Q2 fit has coefficients (0.32, 0.05, 0.11)."""
    quarters: dict[str, dict[str, list[float]]] = {}
    for comp, vals in series.items():
        for m, v in vals.items():
            quarters.setdefault(quarter_of(month_label(m)), {}).setdefault(comp, []).append(v)
    qs = [q for q in sorted(quarters) if "2001Q1" <= q <= "2021Q2"]
    wf, wr = BASKET_SHARES["food"], BASKET_SHARES["restaurants"]
    X = []
    for q in qs:
        c = {k: float(np.mean(v)) for k, v in quarters[q].items()}
        X.append([1.0, (wf * c["food"] + wr * c["restaurants"]) / (wf + wr), c["energy"], c["other"]])
    X = np.array(X)
    beta = np.array([2.2, 0.32, 0.05, 0.11])
    rng = np.random.default_rng(2021)
    noise = rng.normal(0, 0.35, size=len(qs))
    fit = np.array([q >= "2011Q2" for q in qs])
    Xf = X[fit]
    proj = Xf @ np.linalg.solve(Xf.T @ Xf, Xf.T @ noise[fit])
    noise[fit] = noise[fit] - proj
    y = X @ beta + noise
    with open(ASSETS / "ias_aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quarter", "value"])
        for q, v in zip(qs, y):
            w.writerow([q, f"{v:.10f}"])


def write_group_estimates() -> None:
    base = 9.2
    rows = []
    direct = {
        "housing": {"Social rented from Council": 0.0, "Owners Owned outright": -1.39,
                    "Buying with a mortgage": -1.54, "Registered Social Landlord": -0.27, "Private rented": -0.27},
        "region": {"Scotland": 0.0, **{g: 0.09 for g in ("North East", "North West", "Yorkshire and The Humber", "Northern Ireland")},
                   **{g: 0.03 for g in ("East Midlands", "West Midlands", "East")},
                   "South West": 0.02, "Wales": 0.02, "London": 0.30, "South East": 0.30},
        "education": {"Aged 16": 0.0, "Aged 17 and under 19": 0.06, "Aged 19 and under 22": 0.08, "Aged 22 or over": 0.0},
        "social_class": {"Routine": 0.0, "Lower supervisory": -0.14, "Semi-routine": -0.14,
                         "Lower managerial and professional": -0.52, "Intermediate": -0.52, "Small employers": -0.52,
                         "Large employers and higher managerial": -0.62, "Higher professional": -0.62},
    }
    for cat, groups in direct.items():
        for g, d in groups.items():
            rows.append((cat, g, base + d))
    # Age: least-squares fit of four ONS groups to five class differences.
    # Columns: Less than 30, 30 to 49, 50 to 64, 65 to 74.
    A = np.array([
        [1, 0, 0, 0],
        [4 / 7, 3 / 7, 0, 0],
        [0, 1, 0, 0],
        [0, 3 / 7, 4 / 7, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ])
    target = np.array([0.0, -0.12, -0.28, -0.46, -0.58, -0.39])
    # Differences relative to the 16-24 class; anchor "Less than 30" at zero.
    sol, *_ = np.linalg.lstsq(A[:, 1:], target, rcond=None)
    for g, d in zip(("Less than 30", "30 to 49", "50 to 64", "65 to 74"), [0.0, *sol]):
        rows.append(("age_band", g, base + d))
    # Income: minimum-norm exact solution for the four class differences.
    deciles = ["Second decile", "Third decile", "Fourth decile", "Fifth decile", "Sixth decile",
               "Seventh decile", "Eighth decile", "Ninth decile", "Highest ten"]
    L = np.zeros((4, 9))
    L[0, [0, 1]] = [1, 0.5]
    L[1, [1, 2, 3]] = [0.5, 1, 1]
    L[2, [4, 5]] = [1, 0.5]
    L[3, [5, 6, 7, 8]] = [0.5, 1, 1, 1]
    den = np.array([1.7, 2.5, 1.5, 3.5])
    target = np.array([0.16, -0.20, -0.35, -0.68])
    sol = np.linalg.pinv(L) @ (target * den)
    rows.append(("income_band", "Lowest ten", base))
    for g, d in zip(deciles, sol):
        rows.append(("income_band", g, base + d))
    with open(ASSETS / "group_estimates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["category", "ons_group", "value", "period"])
        for cat, g, v in rows:
            w.writerow([cat, g, f"{v:.10f}", "2023-02"])


if __name__ == "__main__":
    s = component_series()
    write_series(s)
    write_ias_aggregate(s)
    write_group_estimates()
    print("fixtures written to", ASSETS)
