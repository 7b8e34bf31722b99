"""Shared domain types and the categorical <-> numeric mappings.

Everything here is an immutable value object. Category lists are closed;
the prompt wording and survey codes for each category value live in the
demographic map asset (see :mod:`synthsurvey.dataio`).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

COMPONENTS: tuple[str, ...] = ("food", "restaurants", "energy", "other")

CATEGORIES: dict[str, tuple[str, ...]] = {
    "sex": ("male", "female", "other", "undisclosed"),
    "age_band": ("16-24", "25-34", "35-44", "45-54", "55-64", "65-75"),
    "income_band": ("<9999", "10000-19999", "20000-34999", "35000-44999", ">45000", "undisclosed"),
    "housing": ("outright", "mortgage", "council", "rent"),
    "social_class": ("upper_middle", "lower_middle", "skilled_working", "working", "pensioner"),
    "education": ("gcse", "a_level", "degree", "unshared"),
    "region": ("scotland", "north", "midlands", "west_wales", "south_east"),
    "work": ("working", "not_working"),
}

# Lower bound of each age band, used by the pensioner rule.
AGE_BAND_START = {band: int(band.split("-")[0]) for band in CATEGORIES["age_band"]}
PENSION_AGE = 65


class UnknownOptionError(KeyError):
    """Raised when a label is not part of an answer scale."""


# --------------------------------------------------------------------------
# Respondents
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DemographicProfile:
    sex: str
    age_band: str
    income_band: str
    housing: str
    social_class: str
    education: str
    region: str
    work: str

    def get(self, category: str) -> str:
        return getattr(self, category)

    def as_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def problems(self, pension_age: int = PENSION_AGE) -> list[str]:
        """Invariant violations of this profile (empty when valid)."""
        out = []
        for category, allowed in CATEGORIES.items():
            value = getattr(self, category)
            if value not in allowed:
                out.append(f"invalid {category} value {value!r}")
        if (
            self.social_class == "pensioner"
            and self.age_band in AGE_BAND_START
            and AGE_BAND_START[self.age_band] < pension_age
        ):
            out.append(f"pensioner class not allowed for age band {self.age_band}")
        return out


def impute_pensioner(profile: DemographicProfile, pension_age: int = PENSION_AGE) -> DemographicProfile:
    """Assign the pensioner class to non-working respondents of pension age."""
    if AGE_BAND_START.get(profile.age_band, 0) >= pension_age and profile.work == "not_working":
        return replace(profile, social_class="pensioner")
    return profile


@dataclass(frozen=True)
class Persona:
    id: str
    profile: DemographicProfile
    weight: float = 1.0


@dataclass(frozen=True)
class SurveySample:
    personas: tuple[Persona, ...]
    label: str = ""
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "personas", tuple(self.personas))

    def __len__(self) -> int:
        return len(self.personas)

    def __iter__(self):
        return iter(self.personas)

    @property
    def weights(self) -> list[float]:
        return [p.weight for p in self.personas]

    def subsample(self, n: int) -> "SurveySample":
        return replace(self, personas=self.personas[:n])


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # "duplicate-id" | "negative-weight" | "invalid-category" | "empty" | "zero-weights"
    persona_id: str | None
    message: str


def validate_sample(sample: SurveySample, pension_age: int = PENSION_AGE) -> list[ValidationIssue]:
    """List every invariant violation in ``sample``; an empty list means valid."""
    issues: list[ValidationIssue] = []
    if not sample.personas:
        return [ValidationIssue("empty", None, "sample has no personas")]
    seen: set[str] = set()
    for p in sample.personas:
        if p.id in seen:
            issues.append(ValidationIssue("duplicate-id", p.id, f"duplicate persona id {p.id!r}"))
        seen.add(p.id)
        if not (p.weight >= 0):
            issues.append(ValidationIssue("negative-weight", p.id, f"weight {p.weight} < 0"))
        for msg in p.profile.problems(pension_age):
            issues.append(ValidationIssue("invalid-category", p.id, msg))
    if all(p.weight == 0 for p in sample.personas):
        issues.append(ValidationIssue("zero-weights", None, "all weights are zero"))
    return issues


# --------------------------------------------------------------------------
# Treatments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TreatmentVector:
    """Component inflation rates in % year-on-year plus presence flags.

    A component with ``active`` False is left out of the prompt entirely.
    """

    food: float = 0.0
    restaurants: float = 0.0
    energy: float = 0.0
    other: float = 0.0
    active: tuple[bool, bool, bool, bool] = (True, True, True, True)

    def __post_init__(self):
        for name in COMPONENTS:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "active", tuple(bool(a) for a in self.active))
        if len(self.active) != len(COMPONENTS):
            raise ValueError("active must have one flag per component")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float], active: Iterable[str] | None = None) -> "TreatmentVector":
        act = set(COMPONENTS) if active is None else set(active)
        return cls(
            **{c: float(values.get(c, 0.0)) for c in COMPONENTS},
            active=tuple(c in act for c in COMPONENTS),
        )

    @classmethod
    def unconditioned(cls) -> "TreatmentVector":
        return cls(active=(False, False, False, False))

    @classmethod
    def zeros(cls) -> "TreatmentVector":
        return cls()

    def value(self, component: str) -> float:
        return getattr(self, component)

    def is_active(self, component: str) -> bool:
        return self.active[COMPONENTS.index(component)]

    @property
    def active_components(self) -> tuple[str, ...]:
        return tuple(c for c, a in zip(COMPONENTS, self.active) if a)

    def as_dict(self) -> dict[str, float]:
        return {c: getattr(self, c) for c in COMPONENTS}

    def key(self) -> tuple:
        """Hashable identity used for memoising evaluations."""
        return tuple((getattr(self, c) if a else None) for c, a in zip(COMPONENTS, self.active))

    def with_values(self, **values: float) -> "TreatmentVector":
        act = list(self.active)
        for name in values:
            act[COMPONENTS.index(name)] = True
        return replace(self, **values, active=tuple(act))

    def combine(self, other: "TreatmentVector", take_from_other: Iterable[str]) -> "TreatmentVector":
        """Copy of ``self`` with the named components (value and flag) taken from ``other``."""
        take = set(take_from_other)
        vals = {c: (other.value(c) if c in take else self.value(c)) for c in COMPONENTS}
        act = tuple(other.is_active(c) if c in take else self.is_active(c) for c in COMPONENTS)
        return TreatmentVector(**vals, active=act)


@dataclass(frozen=True)
class Scenario:
    name: str
    treatment: TreatmentVector
    reference_period: str = ""  # YYYY-MM
    baseline: TreatmentVector = field(default_factory=TreatmentVector.zeros)

    def with_baseline(self, baseline: TreatmentVector) -> "Scenario":
        return replace(self, baseline=baseline)


# Conditioning values and basket shares for the two survey samples.
MAIN_TREATMENT = TreatmentVector(food=17.0, restaurants=9.8, energy=88.0, other=5.0)
CV_TREATMENT = TreatmentVector(food=15.0, restaurants=8.1, energy=76.0, other=6.0)
HISTORICAL_AVERAGES = TreatmentVector(food=2.4, restaurants=3.8, energy=4.2, other=1.7)
BASKET_SHARES = {"food": 0.096, "restaurants": 0.074, "energy": 0.041, "other": 0.789}

SCENARIOS = {
    "main": Scenario("main", MAIN_TREATMENT, "2023-02", TreatmentVector.zeros()),
    "cv": Scenario("cv", CV_TREATMENT, "2022-11", TreatmentVector.zeros()),
}
BASELINES = {
    "zero": TreatmentVector.zeros(),
    "averages": HISTORICAL_AVERAGES,
}


@dataclass(frozen=True)
class GroupingScheme:
    """Partition of treatment components into Shapley players."""

    players: tuple[tuple[str, frozenset[str]], ...]

    def __post_init__(self):
        players = tuple((name, frozenset(members)) for name, members in self.players)
        object.__setattr__(self, "players", players)
        if not players:
            raise ValueError("grouping needs at least one player")
        names = [n for n, _ in players]
        if len(set(names)) != len(names):
            raise ValueError("player names must be unique")
        seen: set[str] = set()
        for name, members in players:
            if not members:
                raise ValueError(f"player {name!r} has no components")
            unknown = members - set(COMPONENTS)
            if unknown:
                raise ValueError(f"player {name!r} has unknown components {sorted(unknown)}")
            if members & seen:
                raise ValueError(f"player {name!r} overlaps another player")
            seen |= members

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Iterable[str]]) -> "GroupingScheme":
        return cls(tuple((name, frozenset(m)) for name, m in mapping.items()))

    @classmethod
    def singletons(cls, components: Sequence[str] = COMPONENTS) -> "GroupingScheme":
        return cls(tuple((c, frozenset([c])) for c in components))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.players]

    @property
    def components(self) -> frozenset[str]:
        return frozenset().union(*(m for _, m in self.players))

    def members(self, player: str) -> frozenset[str]:
        for name, members in self.players:
            if name == player:
                return members
        raise KeyError(player)

    def __len__(self) -> int:
        return len(self.players)

    def check_partition(self, components: Iterable[str]) -> None:
        want = frozenset(components)
        if self.components != want:
            raise ValueError(
                f"grouping covers {sorted(self.components)} but active components are {sorted(want)}"
            )


FOOD_REST_GROUPING = GroupingScheme.from_mapping(
    {"food_rest": ("food", "restaurants"), "energy": ("energy",), "other": ("other",)}
)


# --------------------------------------------------------------------------
# Answer scale
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleOption:
    """One answer option.

    ``low``/``high`` bound the bin; ``None`` on one side marks an open-ended
    bin. ``missing`` options ("no idea") carry no value.
    """

    label: str
    low: float | None = None
    high: float | None = None
    missing: bool = False

    @property
    def value(self) -> float | None:
        if self.missing:
            return None
        if self.low is not None and self.high is not None:
            return (self.low + self.high) / 2
        if self.low is not None:
            return self.low + 0.5
        if self.high is not None:
            return self.high - 0.5
        raise ValueError(f"option {self.label!r} has no bounds")


@dataclass(frozen=True)
class AnswerScale:
    options: tuple[ScaleOption, ...]

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate option labels")
        values = [o.value for o in self.options if not o.missing]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("non-missing options must be strictly increasing in value")

    @property
    def labels(self) -> list[str]:
        return [o.label for o in self.options]

    def option(self, label: str) -> ScaleOption:
        for o in self.options:
            if o.label == label:
                return o
        raise UnknownOptionError(f"{label!r} is not an option of this scale")

    def valued_options(self) -> list[ScaleOption]:
        return [o for o in self.options if not o.missing]

    def snap(self, x: float) -> ScaleOption:
        """Option whose value is nearest to ``x`` (ties go to the lower option)."""
        best = None
        for o in self.valued_options():
            d = abs(o.value - x)
            if best is None or d < best[0]:
                best = (d, o)
        return best[1]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "low", "high"])
            for o in self.options:
                if o.missing:
                    w.writerow([o.label, "missing", ""])
                else:
                    w.writerow([o.label, _fmt_bound(o.low), _fmt_bound(o.high)])


def _fmt_bound(x: float | None) -> str:
    if x is None:
        return ""
    return str(int(x)) if float(x).is_integer() else repr(x)


def map_option_to_value(label: str, scale: AnswerScale) -> float | None:
    """Numeric value of an option: bin midpoint, open bins 0.5 beyond the
    boundary, ``None`` for don't-know options.

    Raises :class:`UnknownOptionError` for labels outside the scale, so a
    caller can tell "not in scale" from "maps to missing".
    """
    return scale.option(label).value


def load_answer_scale(path: str | Path) -> AnswerScale:
    options = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            label = row["label"].strip()
            low = (row.get("low") or "").strip()
            high = (row.get("high") or "").strip()
            if low.lower() == "missing":
                options.append(ScaleOption(label, missing=True))
                continue
            try:
                lo = float(low) if low else None
                hi = float(high) if high else None
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad bin bound") from exc
            if lo is None and hi is None:
                raise ValueError(f"{path}:{lineno}: option {label!r} needs a bound or 'missing'")
            options.append(ScaleOption(label, lo, hi))
    return AnswerScale(tuple(options))


def default_answer_scale() -> AnswerScale:
    """Perception/expectation scale used by all default experiments."""
    ref = resources.files("synthsurvey") / "assets" / "answer_scale.csv"
    with resources.as_file(ref) as path:
        return load_answer_scale(path)


# --------------------------------------------------------------------------
# Questions and responses
# --------------------------------------------------------------------------

PREAMBLE = "You are going to be asked questions about your perception of current and future inflation."

# Only the perception wording is documented; the expectation wordings are
# unverified placeholders and can be overridden from the experiment config.
QUESTION_WORDING = {
    0: "Which of these options best describes how prices have changed over the last 12 months?",
    1: "Which of these options best describes how you would expect prices to change over the next 12 months?",
    2: "Which of these options best describes how you would expect prices to change over the 12 months after that, in two years' time?",
    5: "Which of these options best describes how you would expect prices to change per year over the longer term, say in five years' time?",
}


@dataclass(frozen=True)
class SurveyQuestion:
    horizon_years: int
    wording: str
    scale: AnswerScale

    def __post_init__(self):
        if self.horizon_years not in (0, 1, 2, 5):
            raise ValueError("horizon must be one of 0, 1, 2, 5")

    @classmethod
    def for_horizon(cls, horizon: int, scale: AnswerScale | None = None,
                    wording: Mapping[int, str] | None = None) -> "SurveyQuestion":
        if horizon not in QUESTION_WORDING:
            raise ValueError(f"horizon must be one of {sorted(QUESTION_WORDING)}")
        text = (wording or {}).get(horizon) or QUESTION_WORDING[horizon]
        return cls(horizon, text, scale or default_answer_scale())


@dataclass(frozen=True)
class ResponseRecord:
    persona_id: str
    horizon_years: int
    raw_text: str
    value: float | None
    model_id: str
    temperature: float
    option_permutation_seed: int
    timestamp: str = ""
    error: str = ""
