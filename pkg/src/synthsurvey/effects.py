"""Treatment effects, exact grouped Shapley decomposition and sensitivity scans.

A *response function* maps ``(persona, treatment) -> float | None``; it can
be a live model behind :mod:`synthsurvey.gateway` or any deterministic
stand-in. Aggregates are survey-weighted means over personas with a
non-missing answer.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .domain import BASKET_SHARES, GroupingScheme, Persona, Scenario, SurveySample, TreatmentVector

Respond = Callable[[Persona, TreatmentVector], "float | None"]
MAX_PLAYERS = 12


class NoUsablePairsError(ValueError):
    pass


@dataclass(frozen=True)
class EffectEstimate:
    kind: str  # individual | average | naive | shapley
    component: str
    value: float
    n_used: int
    baseline: str = ""


@dataclass(frozen=True)
class ShapleyReport:
    players: tuple[tuple[str, float], ...]
    baseline_value: float
    total_value: float
    evaluation_count: int
    mode: str = "aggregate"

    def as_dict(self) -> dict[str, float]:
        return dict(self.players)

    @property
    def efficiency_gap(self) -> float:
        return sum(v for _, v in self.players) + self.baseline_value - self.total_value


@dataclass(frozen=True)
class SensitivityCurve:
    component: str
    grid: tuple[tuple[float, float], ...]
    offset: float
    holding: TreatmentVector

    @property
    def x(self) -> np.ndarray:
        return np.array([g[0] for g in self.grid])

    @property
    def y(self) -> np.ndarray:
        return np.array([g[1] for g in self.grid])


class Evaluator:
    """Memoised evaluation of a response function over (persona, treatment).

    Each distinct configuration is requested once per persona; ``calls``
    counts the underlying response-function invocations.
    """

    def __init__(self, respond: Respond, sample: SurveySample, max_workers: int = 1, weighted: bool = True):
        self.respond = respond
        self.sample = sample
        self.max_workers = max_workers
        self.weighted = weighted
        self._memo: dict[tuple[str, Hashable], float | None] = {}
        self.calls = 0

    def values(self, t: TreatmentVector) -> list[float | None]:
        key = t.key()
        todo = [p for p in self.sample.personas if (p.id, key) not in self._memo]
        if todo:
            if self.max_workers > 1:
                with ThreadPoolExecutor(self.max_workers) as pool:
                    results = list(pool.map(lambda p: self.respond(p, t), todo))
            else:
                results = [self.respond(p, t) for p in todo]
            self.calls += len(todo)
            for p, v in zip(todo, results):
                self._memo[(p.id, key)] = v
        return [self._memo[(p.id, key)] for p in self.sample.personas]

    def aggregate(self, t: TreatmentVector) -> float:
        vals = self.values(t)
        num = den = 0.0
        for p, v in zip(self.sample.personas, vals):
            if v is None or (isinstance(v, float) and math.isnan(v)):
                continue
            w = p.weight if self.weighted else 1.0
            num += w * v
            den += w
        if den <= 0:
            raise NoUsablePairsError("no usable responses for configuration")
        return num / den

    @property
    def distinct_configurations(self) -> int:
        return len({k for _, k in self._memo})


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def individual_effect(respond: Respond, persona: Persona, t1: TreatmentVector, t0: TreatmentVector) -> float | None:
    a, b = respond(persona, t1), respond(persona, t0)
    if _is_missing(a) or _is_missing(b):
        return None
    return a - b


def average_effect(
    respond: Respond,
    sample: SurveySample,
    t1: TreatmentVector,
    t0: TreatmentVector,
    weighted: bool = True,
    component: str = "all",
) -> EffectEstimate:
    num = den = 0.0
    n = 0
    for p in sample.personas:
        e = individual_effect(respond, p, t1, t0)
        if e is None:
            continue
        w = p.weight if weighted else 1.0
        num += w * e
        den += w
        n += 1
    if n == 0 or den <= 0:
        raise NoUsablePairsError("no usable pairs")
    return EffectEstimate("average", component, num / den, n, "t0")


def coalition_weight(coalition_size: int, K: int) -> Fraction:
    """|S|!(K-|S|-1)!/K! as an exact fraction."""
    if K < 1 or not 0 <= coalition_size <= K - 1:
        raise ValueError(f"coalition size {coalition_size} out of range for K={K}")
    return Fraction(math.factorial(coalition_size) * math.factorial(K - coalition_size - 1), math.factorial(K))


def shapley_values(value: Callable[[frozenset], object], players: Sequence[Hashable]) -> dict:
    """Exact Shapley values of a set function by coalition enumeration.

    ``value`` is called once per coalition. Works with Fractions (exact) or
    floats.
    """
    K = len(players)
    if K == 0:
        return {}
    if K > MAX_PLAYERS:
        raise ValueError(f"{K} players exceeds exact-enumeration limit {MAX_PLAYERS}")
    cache: dict[frozenset, object] = {}

    def v(s: frozenset):
        if s not in cache:
            cache[s] = value(s)
        return cache[s]

    out = {}
    for k in players:
        others = [p for p in players if p != k]
        total = 0
        for size in range(K):
            w = coalition_weight(size, K)
            for combo in itertools.combinations(others, size):
                s = frozenset(combo)
                total += w * (v(s | {k}) - v(s))
        out[k] = total
    return out


def coalition_treatment(scenario: Scenario, grouping: GroupingScheme, coalition: Iterable[str]) -> TreatmentVector:
    """Members take scenario values, everyone else the baseline values."""
    comps = set()
    for name in coalition:
        comps |= grouping.members(name)
    return scenario.baseline.combine(scenario.treatment, comps)


def shapley_decompose(
    respond: Respond,
    sample: SurveySample,
    scenario: Scenario,
    grouping: GroupingScheme,
    mode: str = "aggregate",
    weighted: bool = True,
    max_workers: int = 1,
    evaluator: Evaluator | None = None,
) -> ShapleyReport:
    """Exact grouped Shapley decomposition of the scenario against its baseline.

    ``mode="aggregate"`` decomposes the weighted-mean response;
    ``mode="per_persona"`` decomposes each respondent and averages the
    attributions over respondents with complete answers.
    """
    grouping.check_partition(scenario.treatment.active_components)
    K = len(grouping)
    if K > MAX_PLAYERS:
        raise ValueError(f"{K} players exceeds exact-enumeration limit {MAX_PLAYERS}")
    ev = evaluator or Evaluator(respond, sample, max_workers, weighted)
    names = grouping.names
    configs = {}
    for size in range(K + 1):
        for combo in itertools.combinations(names, size):
            configs[frozenset(combo)] = coalition_treatment(scenario, grouping, combo)

    if mode == "aggregate":
        phi = shapley_values(lambda s: ev.aggregate(configs[s]), names)
        base = ev.aggregate(configs[frozenset()])
        total = ev.aggregate(configs[frozenset(names)])
    elif mode == "per_persona":
        per_config = {s: ev.values(t) for s, t in configs.items()}
        acc = dict.fromkeys(names, 0.0)
        base = total = den = 0.0
        for i, p in enumerate(sample.personas):
            if any(_is_missing(per_config[s][i]) for s in configs):
                continue
            w = p.weight if weighted else 1.0
            phi_i = shapley_values(lambda s: per_config[s][i], names)
            for k in names:
                acc[k] += w * phi_i[k]
            base += w * per_config[frozenset()][i]
            total += w * per_config[frozenset(names)][i]
            den += w
        if den <= 0:
            raise NoUsablePairsError("no persona answered every configuration")
        phi = {k: acc[k] / den for k in names}
        base, total = base / den, total / den
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ShapleyReport(
        tuple((k, float(phi[k])) for k in names), float(base), float(total),
        len(configs) * len(sample), mode,
    )


def naive_effect(
    respond: Respond,
    sample: SurveySample,
    component: str,
    scenario: Scenario,
    grouping: GroupingScheme | None = None,
    weighted: bool = True,
    evaluator: Evaluator | None = None,
) -> EffectEstimate:
    """Aggregate response with only ``component`` at its scenario value, minus all-baseline."""
    ev = evaluator or Evaluator(respond, sample, weighted=weighted)
    if grouping is not None and component in grouping.names:
        comps = grouping.members(component)
    else:
        comps = frozenset([component])
    if not comps <= set(scenario.treatment.active_components):
        raise ValueError(f"{component!r} is not active in scenario {scenario.name!r}")
    t1 = scenario.baseline.combine(scenario.treatment, comps)
    t0 = scenario.baseline
    n_used = sum(not _is_missing(v) for v in ev.values(t1))
    return EffectEstimate("naive", component, ev.aggregate(t1) - ev.aggregate(t0), n_used, scenario.name)


def scan_treatment(
    component: str,
    x: float,
    scenario: Scenario,
    grouping: GroupingScheme | None = None,
) -> tuple[TreatmentVector, float]:
    """Treatment for one scan point and its x-axis position.

    For a grouped player the first member varies, the others track it at
    their scenario ratio, and the x-axis is the basket-weighted mean.
    """
    if grouping is not None and component in grouping.names:
        members = [c for c in ("food", "restaurants", "energy", "other") if c in grouping.members(component)]
    else:
        members = [component]
    lead = members[0]
    lead_value = scenario.treatment.value(lead)
    values = {}
    for c in members:
        if c == lead:
            values[c] = x
        else:
            ratio = scenario.treatment.value(c) / lead_value if lead_value else 0.0
            values[c] = x * ratio
    t = scenario.baseline.with_values(**values)
    wsum = sum(BASKET_SHARES[c] for c in members)
    xpos = sum(BASKET_SHARES[c] * values[c] for c in members) / wsum
    return t, xpos


def sensitivity_scan(
    respond: Respond,
    sample: SurveySample,
    component: str,
    grid: Sequence[float],
    scenario: Scenario,
    grouping: GroupingScheme | None = None,
    weighted: bool = True,
    evaluator: Evaluator | None = None,
) -> SensitivityCurve:
    """Offset-subtracted aggregate response as one component varies, others at baseline."""
    if len(grid) == 0:
        raise ValueError("empty grid")
    ev = evaluator or Evaluator(respond, sample, weighted=weighted)
    t0, _ = scan_treatment(component, 0.0, scenario, grouping)
    offset = ev.aggregate(t0)
    points = []
    for x in sorted(float(g) for g in grid):
        t, xpos = scan_treatment(component, x, scenario, grouping)
        points.append((xpos, ev.aggregate(t) - offset))
    return SensitivityCurve(component, tuple(points), offset, scenario.baseline)


def slope_and_ratio(
    curve: SensitivityCurve, linear_range: tuple[float, float], basket_weight: float
) -> tuple[float, float]:
    """OLS slope over the points inside ``linear_range`` and its ratio to the basket weight."""
    lo, hi = linear_range
    pts = [(x, y) for x, y in curve.grid if lo <= x <= hi]
    xs = np.array([p[0] for p in pts])
    if len(pts) < 2 or np.ptp(xs) == 0:
        raise ValueError("need at least two distinct grid points inside the linear range")
    ys = np.array([p[1] for p in pts])
    slope = float(np.dot(xs - xs.mean(), ys - ys.mean()) / np.dot(xs - xs.mean(), xs - xs.mean()))
    if basket_weight == 0:
        raise ValueError("basket weight must be nonzero")
    return slope, slope / basket_weight


def player_weight(player: str, grouping: GroupingScheme | None = None) -> float:
    if grouping is not None and player in grouping.names:
        return sum(BASKET_SHARES[c] for c in grouping.members(player))
    return BASKET_SHARES[player]


def player_input(player: str, t: TreatmentVector, grouping: GroupingScheme | None = None) -> float:
    """Basket-weighted mean input of a (possibly grouped) player."""
    comps = grouping.members(player) if grouping is not None and player in grouping.names else {player}
    wsum = sum(BASKET_SHARES[c] for c in comps)
    return sum(BASKET_SHARES[c] * t.value(c) for c in comps) / wsum
