"""Experiment configuration files (YAML)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .dataio import asset_path
from .domain import BASELINES, SCENARIOS, GroupingScheme, FOOD_REST_GROUPING
from .gateway import MockParams, ModelConfig
from .stats import DEFAULT_HYPOTHESIS, HypothesisSpec


@dataclass(frozen=True)
class ScanSpec:
    grid: tuple[float, ...]
    linear_range: tuple[float, float]


@dataclass
class ExperimentConfig:
    label: str = "experiment"
    master_seed: int = 0
    sample_file: Path | None = None
    synthetic: Mapping[str, Any] = field(default_factory=lambda: {"n": 300, "seed": 1})
    scenario: str = "main"
    series_file: Path = field(default_factory=lambda: asset_path("component_series.csv"))
    survey_month: str | None = None
    baseline: str = "averages"
    decompose_baselines: tuple[str, ...] = ("zero", "averages")
    decompose_mode: str = "aggregate"
    horizons: tuple[int, ...] = (0, 1, 2, 5)
    temperatures: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
    temperature: float = 0.0
    profile_temperatures: tuple[float, ...] = (1.5, 0.0)
    backend: str = "mock"
    model: ModelConfig = field(default_factory=ModelConfig)
    mock: MockParams = field(default_factory=MockParams)
    grouping: GroupingScheme = FOOD_REST_GROUPING
    hypothesis: HypothesisSpec = DEFAULT_HYPOTHESIS
    scan: dict[str, ScanSpec] = field(default_factory=dict)
    group_estimates_file: Path | None = field(default_factory=lambda: asset_path("group_estimates.csv"))
    ias_aggregate_file: Path | None = field(default_factory=lambda: asset_path("ias_aggregate.csv"))
    fit_range: tuple[str, str] = ("2011Q2", "2021Q2")
    regress_horizon: int = 0
    regress_temperatures: tuple[float, ...] = (1.5, 0.0)
    probe_model_ids: tuple[str, ...] = ()
    probe_subsample: int = 200
    probe_permutations: int = 9
    question_wording: dict[int, str] = field(default_factory=dict)
    draws: int = 1
    fail_fast: bool = False

    def model_at(self, temperature: float) -> ModelConfig:
        return self.model.with_temperature(temperature)


def _grid(spec) -> tuple[float, ...]:
    if isinstance(spec, Mapping):
        start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        n = int(round((stop - start) / step)) + 1
        return tuple(float(round(start + i * step, 10)) for i in range(n))
    return tuple(float(x) for x in spec)


def _baseline_name(value) -> str:
    if value not in BASELINES:
        raise ValueError(f"unknown baseline {value!r}; choose from {sorted(BASELINES)}")
    return value


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    return config_from_mapping(raw, path.parent)


def config_from_mapping(raw: Mapping[str, Any], root: str | Path = ".") -> ExperimentConfig:
    root = Path(root)

    def resolve(p):
        if p is None:
            return None
        p = str(p)
        if p.startswith("asset:"):
            return asset_path(p[len("asset:"):])
        q = Path(p)
        return q if q.is_absolute() else (root / q)

    cfg = ExperimentConfig()
    cfg.label = str(raw.get("label", cfg.label))
    cfg.master_seed = int(raw.get("master_seed", cfg.master_seed))

    sample = raw.get("sample", {}) or {}
    if "file" in sample:
        cfg.sample_file = resolve(sample["file"])
    if "synthetic" in sample:
        cfg.synthetic = dict(sample["synthetic"])

    scen = raw.get("scenario", "main")
    if isinstance(scen, Mapping):
        cfg.scenario = str(scen.get("name", cfg.label))
        if "series" in scen:
            cfg.series_file = resolve(scen["series"])
        cfg.survey_month = scen.get("survey_month")
    else:
        if scen not in SCENARIOS:
            raise ValueError(f"unknown scenario {scen!r}; give a name from {sorted(SCENARIOS)} or a series file")
        cfg.scenario = scen
    if "series" in raw:
        cfg.series_file = resolve(raw["series"])
    cfg.baseline = _baseline_name(raw.get("baseline", cfg.baseline))
    dec = raw.get("decompose", {}) or {}
    cfg.decompose_baselines = tuple(_baseline_name(b) for b in dec.get("baselines", cfg.decompose_baselines))
    cfg.decompose_mode = dec.get("mode", cfg.decompose_mode)
    if cfg.decompose_mode not in ("aggregate", "per_persona"):
        raise ValueError("decompose.mode must be 'aggregate' or 'per_persona'")

    cfg.horizons = tuple(int(h) for h in raw.get("horizons", cfg.horizons))
    cfg.temperatures = tuple(float(t) for t in raw.get("temperatures", cfg.temperatures))
    cfg.temperature = float(raw.get("temperature", cfg.temperature))
    prof = raw.get("profile", {}) or {}
    cfg.profile_temperatures = tuple(float(t) for t in prof.get("temperatures", cfg.profile_temperatures))

    model = dict(raw.get("model", {}) or {})
    cfg.backend = model.pop("backend", cfg.backend)
    if cfg.backend not in ("mock", "http"):
        raise ValueError("model.backend must be 'mock' or 'http'")
    cfg.model = ModelConfig(**model)
    for t in (*cfg.temperatures, cfg.temperature, *cfg.profile_temperatures):
        cfg.model_at(t)  # validates the temperature cap
    cfg.mock = MockParams.from_mapping(raw.get("mock", {}) or {})

    if "grouping" in raw:
        cfg.grouping = GroupingScheme.from_mapping(raw["grouping"])
    if "hypothesis" in raw:
        h = raw["hypothesis"]
        cfg.hypothesis = HypothesisSpec(
            tuple((c["category"], c["base"], tuple(c["others"])) for c in h["categories"]),
            dict(h.get("expected_sign", {})),
        )

    for name, spec in (raw.get("scan", {}) or {}).items():
        cfg.scan[name] = ScanSpec(_grid(spec["grid"]), tuple(float(x) for x in spec["linear_range"]))

    if "group_estimates" in raw:
        cfg.group_estimates_file = resolve(raw["group_estimates"])
    if "ias_aggregate" in raw:
        cfg.ias_aggregate_file = resolve(raw["ias_aggregate"])
    if "fit_range" in raw:
        cfg.fit_range = tuple(str(x).upper() for x in raw["fit_range"])

    reg = raw.get("regress", {}) or {}
    cfg.regress_horizon = int(reg.get("horizon", cfg.regress_horizon))
    cfg.regress_temperatures = tuple(float(t) for t in reg.get("temperatures", cfg.regress_temperatures))
    for t in cfg.regress_temperatures:
        cfg.model_at(t)

    probe = raw.get("probe", {}) or {}
    cfg.probe_model_ids = tuple(probe.get("model_ids", cfg.probe_model_ids))
    cfg.probe_subsample = int(probe.get("subsample", cfg.probe_subsample))
    cfg.probe_permutations = int(probe.get("permutations", cfg.probe_permutations))

    cfg.question_wording = {int(k): str(v) for k, v in (raw.get("question_wording", {}) or {}).items()}
    cfg.draws = int(raw.get("draws", cfg.draws))
    cfg.fail_fast = bool(raw.get("fail_fast", cfg.fail_fast))

    for p in (cfg.sample_file, cfg.series_file, cfg.group_estimates_file, cfg.ias_aggregate_file):
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"config references missing file {p}")
    return cfg
