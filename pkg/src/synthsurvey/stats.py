"""Weighted moments, calibration loss, correlations and WLS demographic regressions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .domain import CATEGORIES, DemographicProfile


class InsufficientDataError(ValueError):
    pass


def _as_float(values) -> np.ndarray:
    return np.array([np.nan if v is None else float(v) for v in values], dtype=float)


def _usable(values, weights) -> tuple[np.ndarray, np.ndarray]:
    y = _as_float(values)
    w = np.ones_like(y) if weights is None else _as_float(weights)
    if y.shape != w.shape:
        raise ValueError("values and weights differ in length")
    keep = ~np.isnan(y) & ~np.isnan(w)
    return y[keep], w[keep]


def weighted_mean(values, weights=None) -> float:
    """Sum(w*y)/sum(w) over pairs where the value is present."""
    y, w = _usable(values, weights)
    if y.size == 0 or w.sum() <= 0:
        raise InsufficientDataError("no usable (value, weight) pairs")
    return float(np.dot(w, y) / w.sum())


def weighted_sd(values, weights=None, corrected: bool = True) -> float:
    """Weighted standard deviation.

    The corrected variant applies the frequency-weight factor sum(w)/(sum(w)-1)
    and so reduces to the ordinary sample SD for unit weights; it needs
    sum(w) > 1. The uncorrected variant is invariant to rescaling the weights.
    """
    y, w = _usable(values, weights)
    if y.size < 2:
        raise InsufficientDataError("need at least two usable pairs")
    sw = w.sum()
    mu = np.dot(w, y) / sw
    var = np.dot(w, (y - mu) ** 2) / sw
    if corrected:
        if sw <= 1:
            raise InsufficientDataError("corrected weighted SD needs sum of weights > 1")
        var *= sw / (sw - 1)
    return float(math.sqrt(max(var, 0.0)))


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    sd: float
    n: int
    n_miss: int
    weights_used: bool


def summarize(values, weights=None, corrected: bool = True) -> DistributionSummary:
    y = _as_float(values)
    n_miss = int(np.isnan(y).sum())
    return DistributionSummary(
        weighted_mean(values, weights),
        weighted_sd(values, weights, corrected),
        int(y.size - n_miss),
        n_miss,
        weights is not None,
    )


def calibration_loss(gpt: DistributionSummary, ias: DistributionSummary, l: int = 1) -> float:
    """Equal-weighted L1 (l=1) or L2 (l=2) loss on the mean and SD gaps."""
    if l not in (1, 2):
        raise ValueError("l must be 1 or 2")
    return 0.5 * abs(gpt.mean - ias.mean) ** l + 0.5 * abs(gpt.sd - ias.sd) ** l


def pearson(x, y) -> tuple[float, float]:
    """Unweighted Pearson r with a two-sided t-test p-value (n-2 df)."""
    a, b = _as_float(x), _as_float(y)
    if a.shape != b.shape:
        raise ValueError("x and y differ in length")
    keep = ~np.isnan(a) & ~np.isnan(b)
    a, b = a[keep], b[keep]
    n = a.size
    if n < 3:
        raise InsufficientDataError("need at least three complete pairs")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = math.sqrt(np.dot(da, da)), math.sqrt(np.dot(db, db))
    if sa == 0 or sb == 0:
        raise InsufficientDataError("zero variance")
    r = float(np.clip(np.dot(da, db) / (sa * sb), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return r, float(2 * sps.t.sf(abs(t), n - 2))


def cross_horizon_matrix(responses: Mapping[int, Sequence]) -> tuple[list[int], np.ndarray]:
    """Pairwise Pearson r across horizons; degenerate cells are NaN."""
    horizons = sorted(responses)
    if len(horizons) < 2:
        raise ValueError("need at least two horizons")
    k = len(horizons)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                r, _ = pearson(responses[horizons[i]], responses[horizons[j]])
            except InsufficientDataError:
                r = float("nan")
            mat[i, j] = mat[j, i] = r
    return horizons, mat


# --------------------------------------------------------------------------
# Demographic regressions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisSpec:
    """Base class and non-base classes per category, with expected coefficient signs.

    Respondents in a class that is neither the base nor listed get all-zero
    dummies for that category.
    """

    categories: tuple[tuple[str, str, tuple[str, ...]], ...]
    expected_sign: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for cat, base, others in self.categories:
            allowed = CATEGORIES.get(cat)
            if allowed is None:
                raise ValueError(f"unknown category {cat!r}")
            for v in (base, *others):
                if v not in allowed:
                    raise ValueError(f"{v!r} is not a {cat} class")
            if base in others:
                raise ValueError(f"base class {base!r} listed as non-base")

    @property
    def column_names(self) -> list[str]:
        return [coef_name(cat, v) for cat, _, others in self.categories for v in others]

    def sign(self, name: str) -> int:
        return self.expected_sign.get(name, -1)

    def base(self, category: str) -> str:
        for cat, base, _ in self.categories:
            if cat == category:
                return base
        raise KeyError(category)


def coef_name(category: str, value: str) -> str:
    return f"{category}[{value}]"


# Base classes are the groups hypothesised to face the highest inflation;
# every other coefficient is expected to be negative.
DEFAULT_HYPOTHESIS = HypothesisSpec(
    (
        ("income_band", "<9999", ("10000-19999", "20000-34999", "35000-44999", ">45000")),
        ("housing", "council", ("rent", "mortgage", "outright")),
        ("age_band", "16-24", ("25-34", "35-44", "45-54", "55-64", "65-75")),
        ("social_class", "working", ("skilled_working", "lower_middle", "upper_middle", "pensioner")),
        ("education", "gcse", ("a_level", "degree")),
        ("region", "scotland", ("north", "west_wales", "midlands", "south_east")),
    )
)


def build_dummy_design(
    profiles: Sequence[DemographicProfile], spec: HypothesisSpec
) -> tuple[np.ndarray, list[str]]:
    """Intercept plus one 0/1 column per non-base class; all-zero columns are dropped."""
    names = ["const"]
    cols = [np.ones(len(profiles))]
    for cat, _, others in spec.categories:
        vals = [p.get(cat) for p in profiles]
        for v in others:
            col = np.array([1.0 if x == v else 0.0 for x in vals])
            name = coef_name(cat, v)
            if not col.any():
                warnings.warn(f"class {name} absent from sample; column dropped", stacklevel=2)
                continue
            names.append(name)
            cols.append(col)
    return np.column_stack(cols), names


@dataclass(frozen=True)
class RegressionResult:
    names: tuple[str, ...]
    coefficients: np.ndarray
    robust_se: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    stars: tuple[str, ...]
    r2: float
    r2_adj: float
    n_obs: int
    df_resid: int
    cov_type: str = "HC1"

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {n: float(c) for n, c in zip(self.names, self.coefficients)}

    @property
    def intercept(self) -> float:
        return self.coef("const")

    def conf_int(self, level: float = 0.95) -> np.ndarray:
        q = sps.t.ppf(0.5 + level / 2, self.df_resid)
        return np.column_stack([self.coefficients - q * self.robust_se, self.coefficients + q * self.robust_se])


def significance_stars(p: float) -> str:
    if not np.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def wls_fit(y, X, weights=None, names: Sequence[str] | None = None, cov_type: str = "HC1") -> RegressionResult:
    """Weighted least squares with heteroskedasticity-robust (HC0/HC1) errors.

    Rows with a missing response are dropped. The weights enter the
    sandwich as w_i^2 e_i^2 x_i x_i'.
    """
    if cov_type not in ("HC0", "HC1"):
        raise ValueError("cov_type must be HC0 or HC1")
    yv = _as_float(y)
    X = np.asarray(X, dtype=float)
    w = np.ones_like(yv) if weights is None else _as_float(weights)
    if X.ndim != 2 or X.shape[0] != yv.size or w.size != yv.size:
        raise ValueError("shape mismatch between y, X and weights")
    keep = ~np.isnan(yv) & ~np.isnan(w) & (w > 0)
    yv, X, w = yv[keep], X[keep], w[keep]
    n, k = X.shape
    if n <= k:
        raise InsufficientDataError(f"{n} observations for {k} columns")
    sw = np.sqrt(w)
    Xw, yw = X * sw[:, None], yv * sw
    if np.linalg.matrix_rank(Xw) < k:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = yv - X @ beta
    bread = np.linalg.inv(Xw.T @ Xw)
    u = (w * resid)[:, None] * X
    cov = bread @ (u.T @ u) @ bread
    df = n - k
    if cov_type == "HC1":
        cov *= n / df
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    pvals = 2 * sps.t.sf(np.abs(tvals), df)
    ssr = float(np.dot(w, resid**2))
    ybar = np.dot(w, yv) / w.sum()
    sst = float(np.dot(w, (yv - ybar) ** 2))
    has_const = bool(np.any(np.all(X == 1.0, axis=0)))
    if not has_const:
        sst = float(np.dot(w, yv**2))
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    dfm = n - 1 if has_const else n
    r2_adj = 1.0 - (1.0 - r2) * dfm / df
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))
    return RegressionResult(
        names, beta, se, tvals, pvals, tuple(significance_stars(p) for p in pvals),
        float(r2), float(r2_adj), n, df, cov_type,
    )


def coef_similarity(beta_a: Mapping[str, float], beta_b: Mapping[str, float]) -> tuple[float, float]:
    """Pearson r and cosine similarity over the shared coefficient names."""
    common = [k for k in beta_a if k in beta_b]
    if not common:
        raise ValueError("no coefficients in common")
    a = np.array([beta_a[k] for k in common], dtype=float)
    b = np.array([beta_b[k] for k in common], dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    cosine = float(np.dot(a, b) / (na * nb)) if na > 0 and nb > 0 else float("nan")
    if len(common) < 2 or np.std(a) == 0 or np.std(b) == 0:
        r = float("nan")
    else:
        r = float(np.corrcoef(a, b)[0, 1])
    return r, cosine


@dataclass(frozen=True)
class Verdict:
    name: str
    coefficient: float
    expected_sign: int
    sign_matches: bool
    p_one_sided: float
    verdict: str


def hypothesis_report(result: RegressionResult, spec: HypothesisSpec, alpha: float = 0.05) -> list[Verdict]:
    """Sign check and one-sided test of each coefficient against its expected direction."""
    out = []
    for i, name in enumerate(result.names):
        if name == "const":
            continue
        b, t = float(result.coefficients[i]), float(result.t_values[i])
        s = spec.sign(name)
        # H: s*beta > 0, i.e. beta < 0 when the expected sign is negative.
        p = float(sps.t.sf(s * t, result.df_resid)) if np.isfinite(t) else (0.0 if s * t > 0 else 1.0)
        if b == 0:
            verdict = "neutral"
        elif np.sign(b) == s:
            verdict = "consistent, significant" if p < alpha else "consistent"
        else:
            verdict = "inconsistent"
        out.append(Verdict(name, b, s, b != 0 and np.sign(b) == s, p, verdict))
    return out


def ons_reference_diffs(group_estimates, spec: HypothesisSpec, strict: bool = True) -> dict[str, float]:
    """Group estimate minus base-class estimate for every non-base class in ``spec``.

    ``group_estimates`` is a :class:`~synthsurvey.dataio.GroupEstimateTable`
    or a nested mapping category -> class -> value.
    """
    est = getattr(group_estimates, "estimates", group_estimates)
    out = {}
    for cat, base, others in spec.categories:
        table = est.get(cat, {})
        for v in others:
            if v not in table or base not in table:
                if strict:
                    raise KeyError(f"group estimate missing for {cat}/{v if v not in table else base}")
                continue
            out[coef_name(cat, v)] = table[v] - table[base]
    return out


def responsiveness_regression(
    target: Mapping[str, float],
    components: Mapping[str, Mapping[str, float]],
    fit_range: tuple[str, str] | None = None,
    cov_type: str = "HC1",
) -> RegressionResult:
    """OLS of an aggregate series on component series over common periods.

    Periods are compared as strings (``YYYYQn`` sorts chronologically).
    """
    periods = sorted(set(target).intersection(*[set(s) for s in components.values()]))
    if fit_range is not None:
        lo, hi = fit_range
        periods = [p for p in periods if lo <= p <= hi]
    names = list(components)
    if len(periods) <= len(names) + 1:
        raise InsufficientDataError(f"only {len(periods)} overlapping periods")
    X = np.column_stack([np.ones(len(periods))] + [[components[c][p] for p in periods] for c in names])
    y = [target[p] for p in periods]
    return wls_fit(y, X, None, ["const", *names], cov_type)


def linear_contributions(result: RegressionResult, inputs: Mapping[str, float]) -> dict[str, float]:
    """Shapley value of each regressor in a linear model against a zero reference."""
    return {k: result.coef(k) * float(v) for k, v in inputs.items()}
