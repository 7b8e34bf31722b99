"""Ingestion of price-index series, survey microdata and group-level estimates.

All formats are plain comma-separated text with a header row:

* component series: ``date,component,yoy`` (date as ``YYYY-MM``)
* microdata: ``id,sex,age,income,housing,social_class,education,region,work,weight``
  followed by one ``resp_h<horizon>`` column per horizon (1-based option index)
* group estimates: ``category,ons_group,value,period``
* quarterly aggregates: ``quarter,value`` (quarter as ``YYYYQn``)
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import (
    CATEGORIES,
    COMPONENTS,
    PENSION_AGE,
    AnswerScale,
    DemographicProfile,
    Persona,
    Scenario,
    SurveySample,
    TreatmentVector,
    default_answer_scale,
    impute_pensioner,
)

SERIES_COMPONENTS = COMPONENTS + ("headline",)
HORIZONS = (0, 1, 2, 5)
MICRODATA_COLUMNS = {
    "sex": "sex",
    "age": "age_band",
    "income": "income_band",
    "housing": "housing",
    "social_class": "social_class",
    "education": "education",
    "region": "region",
    "work": "work",
}
_NA = {"", "nan", "na", "none"}


class DataFormatError(ValueError):
    """Malformed input file; ``errors`` holds one message per bad row."""

    def __init__(self, message: str, errors: Sequence[str] = ()):
        self.errors = list(errors) or [message]
        super().__init__(message if not errors else message + ":\n  " + "\n  ".join(errors))


def asset_path(name: str) -> Path:
    return Path(str(resources.files("synthsurvey") / "assets" / name))


# --------------------------------------------------------------------------
# Months and quarters
# --------------------------------------------------------------------------


def month_index(month: str) -> int:
    year, mon = month.strip().split("-")[:2]
    m = int(mon)
    if not 1 <= m <= 12:
        raise ValueError(f"bad month {month!r}")
    return int(year) * 12 + m - 1


def month_label(index: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


def quarter_of(month: str) -> str:
    i = month_index(month)
    return f"{i // 12}Q{(i % 12) // 3 + 1}"


def quarter_index(quarter: str) -> int:
    year, q = quarter.strip().upper().split("Q")
    if not 1 <= int(q) <= 4:
        raise ValueError(f"bad quarter {quarter!r}")
    return int(year) * 4 + int(q) - 1


# --------------------------------------------------------------------------
# Demographic map
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DemographicEntry:
    category: str
    code: str  # "" for no survey code, "NaN" for the missing-value code
    key: str
    wording: str
    ias_wording: str = ""


class DemographicMap:
    """Survey codes and prompt wordings per category value."""

    def __init__(self, entries: Iterable[DemographicEntry]):
        self.entries = tuple(entries)
        self._by_code: dict[tuple[str, str], str] = {}
        self._wording: dict[tuple[str, str], str] = {}
        self._code: dict[tuple[str, str], str] = {}
        for e in self.entries:
            if e.category not in CATEGORIES or e.key not in CATEGORIES[e.category]:
                raise ValueError(f"demographic map entry {e.category}/{e.key} is not a known category value")
            if e.code:
                self._by_code[(e.category, _norm_code(e.code))] = e.key
            self._wording.setdefault((e.category, e.key), e.wording)
            self._code.setdefault((e.category, e.key), e.code)
        missing = [(c, k) for c, keys in CATEGORIES.items() for k in keys if (c, k) not in self._wording]
        if missing:
            raise ValueError(f"demographic map lacks wording for {missing}")

    def wording(self, category: str, key: str) -> str:
        return self._wording[(category, key)]

    def decode(self, category: str, code: str) -> str | None:
        """Category key for a survey code; ``None`` if the code is blank and has no mapping."""
        norm = _norm_code(code)
        if (category, norm) in self._by_code:
            return self._by_code[(category, norm)]
        if norm == "nan":
            return None
        raise KeyError(f"unmapped {category} code {code!r}")

    def encode(self, category: str, key: str) -> str:
        return self._code[(category, key)]


def _norm_code(code) -> str:
    s = str(code).strip()
    if s.lower() in _NA:
        return "nan"
    try:
        f = float(s)
        if f.is_integer():
            return str(int(f))
    except ValueError:
        pass
    return s


def load_demographic_map(path: str | Path | None = None) -> DemographicMap:
    path = path or asset_path("demographic_map.csv")
    with open(path, newline="", encoding="utf-8") as fh:
        entries = [
            DemographicEntry(
                row["category"].strip(),
                row["code"].strip(),
                row["key"].strip(),
                row["wording"].strip(),
                (row.get("ias_wording") or "").strip(),
            )
            for row in csv.DictReader(fh)
        ]
    return DemographicMap(entries)


# --------------------------------------------------------------------------
# Component series
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ComponentSeries:
    component: str
    observations: tuple[tuple[str, float], ...]

    def __post_init__(self):
        idx = [month_index(m) for m, _ in self.observations]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"{self.component}: dates must be strictly increasing")

    def as_dict(self) -> dict[str, float]:
        return dict(self.observations)

    def window(self, start: str | None = None, end: str | None = None) -> list[float]:
        lo = month_index(start) if start else -math.inf
        hi = month_index(end) if end else math.inf
        return [v for m, v in self.observations if lo <= month_index(m) <= hi]


def load_component_series(path: str | Path) -> dict[str, ComponentSeries]:
    rows: dict[str, dict[int, float]] = defaultdict(dict)
    errors = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"date", "component", "yoy"}
        if not need <= set(reader.fieldnames or ()):
            raise DataFormatError(f"{path}: expected columns {sorted(need)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            comp = (row["component"] or "").strip()
            if comp not in SERIES_COMPONENTS:
                errors.append(f"line {lineno}: unknown component {comp!r}")
                continue
            try:
                m = month_index(row["date"])
            except (ValueError, AttributeError):
                errors.append(f"line {lineno}: bad date {row['date']!r}")
                continue
            try:
                yoy = float(row["yoy"])
                if not math.isfinite(yoy):
                    raise ValueError
            except (TypeError, ValueError):
                errors.append(f"line {lineno}: non-numeric yoy {row['yoy']!r}")
                continue
            if m in rows[comp]:
                raise DataFormatError(f"{path}: duplicate month {month_label(m)} for {comp} (line {lineno})")
            rows[comp][m] = yoy
    if errors:
        raise DataFormatError(f"{path}: malformed rows", errors)
    return {
        comp: ComponentSeries(comp, tuple((month_label(m), v) for m, v in sorted(obs.items())))
        for comp, obs in rows.items()
    }


def write_component_series(series: Mapping[str, ComponentSeries], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "component", "yoy"])
        for comp in SERIES_COMPONENTS:
            if comp in series:
                for m, v in series[comp].observations:
                    w.writerow([m, comp, f"{v:.4f}"])


def three_month_avg(series: ComponentSeries, survey_month: str) -> float:
    """Mean yoy over the three months preceding ``survey_month``."""
    obs = {month_index(m): v for m, v in series.observations}
    m = month_index(survey_month)
    want = [m - 3, m - 2, m - 1]
    absent = [month_label(i) for i in want if i not in obs]
    if absent:
        raise DataFormatError(f"{series.component}: missing months {absent} before {survey_month}")
    return sum(obs[i] for i in want) / 3


def historical_average(series: ComponentSeries, start: str | None = None, end: str | None = "2021-09") -> float:
    vals = series.window(start, end)
    if not vals:
        raise DataFormatError(f"{series.component}: no observations in window {start}..{end}")
    return float(np.mean(vals))


def percentile_band(series: ComponentSeries, lower: float = 5, upper: float = 95,
                    start: str | None = None, end: str | None = "2021-09") -> tuple[float, float]:
    vals = series.window(start, end)
    if not vals:
        raise DataFormatError(f"{series.component}: no observations in window {start}..{end}")
    lo, hi = np.percentile(vals, [lower, upper])
    return float(lo), float(hi)


def build_scenario(
    series: Mapping[str, ComponentSeries],
    survey_month: str,
    name: str,
    baseline_window: tuple[str | None, str | None] = (None, "2021-09"),
    decimals: int | None = 1,
) -> Scenario:
    """Scenario from three-month averages, with historical averages as baseline.

    ``decimals`` rounds the derived inputs the way conditioning tables are
    reported; pass ``None`` to keep full precision.
    """
    missing = [c for c in COMPONENTS if c not in series]
    if missing:
        raise DataFormatError(f"component series missing for {missing}")

    def r(x: float) -> float:
        return round(x, decimals) if decimals is not None else x

    treat = {c: r(three_month_avg(series[c], survey_month)) for c in COMPONENTS}
    base = {c: r(historical_average(series[c], *baseline_window)) for c in COMPONENTS}
    return Scenario(name, TreatmentVector(**treat), survey_month, TreatmentVector(**base))


def quarterly_means(series: ComponentSeries) -> dict[str, float]:
    groups: dict[str, list[float]] = defaultdict(list)
    for m, v in series.observations:
        groups[quarter_of(m)].append(v)
    return {q: float(np.mean(v)) for q, v in groups.items() if len(v) == 3}


def load_quarterly_series(path: str | Path) -> dict[str, float]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                quarter_index(row["quarter"])
                out[row["quarter"].strip().upper()] = float(row["value"])
            except (ValueError, KeyError, AttributeError) as exc:
                raise DataFormatError(f"{path}: line {lineno}: bad row") from exc
    return out


# --------------------------------------------------------------------------
# Microdata
# --------------------------------------------------------------------------


def load_microdata(
    path: str | Path,
    demo_map: DemographicMap | None = None,
    scale: AnswerScale | None = None,
    master_seed: int = 0,
    label: str | None = None,
    pension_age: int = PENSION_AGE,
) -> tuple[SurveySample, dict[int, list[float | None]]]:
    """Decode a microdata file into a sample plus benchmark responses per horizon."""
    demo_map = demo_map or load_demographic_map()
    scale = scale or default_answer_scale()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        required = ["id", "weight", *MICRODATA_COLUMNS]
        absent = [c for c in required if c not in cols]
        if absent:
            raise DataFormatError(f"{path}: missing columns {absent}")
        horizons = [h for h in HORIZONS if f"resp_h{h}" in cols]
        personas, errors = [], []
        responses: dict[int, list[float | None]] = {h: [] for h in horizons}
        for lineno, row in enumerate(reader, start=2):
            values = {}
            try:
                for col, cat in MICRODATA_COLUMNS.items():
                    key = demo_map.decode(cat, row[col])
                    if key is None:
                        if cat == "social_class":
                            key = "__unset__"
                        else:
                            raise KeyError(f"unmapped {cat} code {row[col]!r}")
                    values[cat] = key
                weight = float(row["weight"])
            except (KeyError, ValueError) as exc:
                errors.append(f"line {lineno}: {exc}")
                continue
            profile = impute_pensioner(DemographicProfile(**values), pension_age)
            if profile.social_class == "__unset__":
                errors.append(f"line {lineno}: blank social class for a respondent not of pension age")
                continue
            personas.append(Persona(row["id"].strip(), profile, weight))
            for h in horizons:
                code = (row[f"resp_h{h}"] or "").strip()
                if code.lower() in _NA:
                    responses[h].append(None)
                    continue
                try:
                    responses[h].append(scale.options[int(code) - 1].value)
                except (ValueError, IndexError):
                    errors.append(f"line {lineno}: bad response code {code!r} for horizon {h}")
    if errors:
        raise DataFormatError(f"{path}: rows could not be decoded", errors)
    sample = SurveySample(tuple(personas), label if label is not None else Path(path).stem, master_seed)
    return sample, responses


def write_microdata(
    sample: SurveySample,
    responses: Mapping[int, Sequence[float | None]],
    path: str | Path | None = None,
    demo_map: DemographicMap | None = None,
    scale: AnswerScale | None = None,
) -> str:
    """Emit microdata in the survey schema; returns the CSV text."""
    demo_map = demo_map or load_demographic_map()
    scale = scale or default_answer_scale()
    value_code = {o.value: str(i) for i, o in enumerate(scale.options, start=1) if not o.missing}
    horizons = sorted(responses)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", *MICRODATA_COLUMNS, "weight", *[f"resp_h{h}" for h in horizons]])
    for i, p in enumerate(sample.personas):
        codes = [demo_map.encode(cat, p.profile.get(cat)) for cat in MICRODATA_COLUMNS.values()]
        resp = []
        for h in horizons:
            v = responses[h][i]
            resp.append("" if v is None else value_code[v])
        w.writerow([p.id, *codes, f"{p.weight:.6f}", *resp])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# Response model for synthetic benchmark answers (p.p. offsets on the latent).
SYNTH_HORIZON_MEAN = {0: 8.6, 1: 5.1, 2: 3.8, 5: 3.9}
SYNTH_OFFSETS = {
    ("age_band", "25-34"): 1.5,
    ("age_band", "35-44"): 2.5,
    ("age_band", "45-54"): 4.0,
    ("age_band", "55-64"): 5.0,
    ("age_band", "65-75"): 4.9,
    ("income_band", ">45000"): -0.3,
    ("housing", "outright"): -0.6,
    ("social_class", "skilled_working"): -0.9,
    ("social_class", "pensioner"): -1.4,
}


def _uniform_marginals() -> dict[str, dict[str, float]]:
    out = {}
    for cat, keys in CATEGORIES.items():
        keys = [k for k in keys if k != "pensioner"]
        out[cat] = {k: 1 / len(keys) for k in keys}
    return out


def synth_microdata(
    n: int,
    seed: int,
    marginals: Mapping[str, Mapping[str, float]] | None = None,
    path: str | Path | None = None,
    horizons: Sequence[int] = HORIZONS,
    noise_sd: float = 4.0,
    na_rate: float = 0.02,
    pension_age: int = PENSION_AGE,
) -> str:
    """Deterministic synthetic microdata in the survey schema.

    Categories are drawn independently from ``marginals`` (uniform by
    default); benchmark answers come from a persona-level latent plus
    horizon-specific noise, snapped to the answer scale.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    margs = _uniform_marginals()
    for cat, dist in (marginals or {}).items():
        if cat not in CATEGORIES:
            raise ValueError(f"unknown category {cat!r}")
        bad = set(dist) - set(CATEGORIES[cat])
        total = sum(dist.values())
        if bad or any(p < 0 for p in dist.values()) or not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"invalid marginals for {cat}")
        margs[cat] = dict(dist)
    rng = np.random.default_rng(seed)
    scale = default_answer_scale()
    draws = {cat: rng.choice(list(d), size=n, p=list(d.values())) for cat, d in margs.items()}
    weights = np.round(rng.uniform(0.3, 2.5, size=n), 6)
    persona_effect = rng.normal(0.0, noise_sd * 0.6, size=n)
    personas = []
    responses: dict[int, list[float | None]] = {h: [] for h in horizons}
    for i in range(n):
        profile = DemographicProfile(**{cat: str(draws[cat][i]) for cat in CATEGORIES})
        profile = impute_pensioner(profile, pension_age)
        personas.append(Persona(f"S{i + 1:06d}", profile, float(weights[i])))
        offset = sum(SYNTH_OFFSETS.get((cat, profile.get(cat)), 0.0) for cat in CATEGORIES)
        for h in horizons:
            shrink = 1.0 if h == 0 else 0.6
            latent = SYNTH_HORIZON_MEAN[h] + shrink * (offset + persona_effect[i]) + rng.normal(0, noise_sd * 0.8)
            if rng.uniform() < na_rate:
                responses[h].append(None)
            else:
                responses[h].append(scale.snap(latent).value)
    sample = SurveySample(tuple(personas), "synthetic", seed)
    return write_microdata(sample, responses, path, scale=scale)


# --------------------------------------------------------------------------
# Group-level experienced inflation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OnsMapping:
    category: str
    key: str
    ons_group: str
    fraction: Fraction


def load_ons_map(path: str | Path | None = None) -> list[OnsMapping]:
    path = path or asset_path("ons_map.csv")
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            OnsMapping(r["category"].strip(), r["key"].strip(), r["ons_group"].strip(), Fraction(r["fraction"].strip()))
            for r in csv.DictReader(fh)
        ]


@dataclass(frozen=True)
class GroupEstimateTable:
    estimates: dict[str, dict[str, float]]
    period: str = ""

    def get(self, category: str, key: str) -> float:
        return self.estimates[category][key]


def allocate_group_estimates(
    ons_values: Mapping[tuple[str, str], float],
    mapping: Sequence[OnsMapping],
    period: str = "",
) -> GroupEstimateTable:
    """Fraction-weighted mean of ONS group estimates for every mapped survey class."""
    totals: dict[tuple[str, str], Fraction] = defaultdict(Fraction)
    for m in mapping:
        totals[(m.category, m.ons_group)] += m.fraction
    for (cat, grp), tot in totals.items():
        if tot != 1:
            warnings.warn(f"fractions for ONS group {cat}/{grp} sum to {tot}, not 1", stacklevel=2)
    absent = sorted({f"{m.category}/{m.ons_group}" for m in mapping if (m.category, m.ons_group) not in ons_values})
    if absent:
        raise DataFormatError("group estimates missing for ONS groups", absent)
    num: dict[tuple[str, str], float] = defaultdict(float)
    den: dict[tuple[str, str], float] = defaultdict(float)
    for m in mapping:
        num[(m.category, m.key)] += float(m.fraction) * ons_values[(m.category, m.ons_group)]
        den[(m.category, m.key)] += float(m.fraction)
    est: dict[str, dict[str, float]] = defaultdict(dict)
    for (cat, key), d in den.items():
        est[cat][key] = num[(cat, key)] / d
    return GroupEstimateTable(dict(est), period)


def load_group_estimates(path: str | Path, ons_map: Sequence[OnsMapping] | None = None) -> GroupEstimateTable:
    ons_map = list(ons_map) if ons_map is not None else load_ons_map()
    values: dict[tuple[str, str], float] = {}
    periods = set()
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                values[(row["category"].strip(), row["ons_group"].strip())] = float(row["value"])
            except (KeyError, ValueError, AttributeError) as exc:
                raise DataFormatError(f"{path}: line {lineno}: bad row") from exc
            periods.add((row.get("period") or "").strip())
    return allocate_group_estimates(values, ons_map, ",".join(sorted(p for p in periods if p)))
