"""Experiment commands: each composes the library into one table set.

Every command returns a :class:`CommandResult`; :func:`write_result` turns it
into ``<command>_<table>.csv`` files plus one ``<command>.json`` summary.
Floats are written with ``repr`` so the CSVs parse back exactly, and nothing
derived from the wall clock ends up in an output file.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .config import ExperimentConfig
from .dataio import (
    ComponentSeries,
    asset_path,
    build_scenario,
    load_component_series,
    load_group_estimates,
    load_microdata,
    load_quarterly_series,
    month_index,
    month_label,
    percentile_band,
    quarterly_means,
    synth_microdata,
)
from .domain import (
    BASKET_SHARES,
    HISTORICAL_AVERAGES,
    SCENARIOS,
    Scenario,
    SurveyQuestion,
    SurveySample,
    TreatmentVector,
    default_answer_scale,
)
from .effects import (
    Evaluator,
    naive_effect,
    player_input,
    player_weight,
    sensitivity_scan,
    shapley_decompose,
    slope_and_ratio,
)
from .gateway import (
    ChatRequest,
    Gateway,
    GatewayError,
    HttpBackend,
    MockBackend,
    ResponseCache,
    make_responder,
    run_sample,
)
from .stats import (
    InsufficientDataError,
    build_dummy_design,
    calibration_loss,
    coef_similarity,
    cross_horizon_matrix,
    hypothesis_report,
    linear_contributions,
    ons_reference_diffs,
    pearson,
    responsiveness_regression,
    summarize,
    wls_fit,
)

log = logging.getLogger(__name__)

NAN = float("nan")


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> list[Any]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, r)) for r in self.rows]


@dataclass
class CommandResult:
    command: str
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    plots: dict[str, Any] = field(default_factory=dict)


# --------------------------------------------------------------------------
# Serialisation
# --------------------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def parse_cell(text: str):
    """Inverse of the CSV cell encoding: int, float, bool, None or str."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path: str | Path) -> Table:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return Table(rows[0], [[parse_cell(c) for c in r] for r in rows[1:]])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_result(result: CommandResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in result.tables.items():
        p = out / f"{result.command}_{name}.csv"
        p.write_text(table_to_csv(table), encoding="utf-8")
        written.append(p)
    p = out / f"{result.command}.json"
    p.write_text(json.dumps(_jsonable(result.summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)
    return written


# --------------------------------------------------------------------------
# Session: sample, benchmark, scenario and gateway for one config
# --------------------------------------------------------------------------


class Session:
    """Everything a command needs, resolved once from the config."""

    def __init__(
        self,
        config: ExperimentConfig,
        cache_path: str | Path | None = None,
        offline: bool = False,
        backend=None,
    ):
        self.config = config
        self.scale = default_answer_scale()
        self.sample, self.benchmark = load_sample(config)
        self.series = load_component_series(config.series_file)
        self._averages_scenario = resolve_scenario(config, self.series)
        self.scenario = self.scenario_for(config.baseline)
        if backend is None:
            backend = MockBackend(config.mock) if config.backend == "mock" else HttpBackend(config.model)
        self.gateway = Gateway(backend, ResponseCache(cache_path), offline)
        # The in-process mock is CPU bound; threads only add overhead there.
        self.workers = config.model.max_concurrency if getattr(backend, "remote", True) else 1

    def question(self, horizon: int) -> SurveyQuestion:
        return SurveyQuestion.for_horizon(horizon, self.scale, self.config.question_wording)

    def model(self, temperature: float, model_id: str | None = None):
        m = replace(self.config.model_at(temperature), max_concurrency=self.workers)
        return m if model_id is None else replace(m, model_id=model_id)

    def run(self, treatment, horizon: int, temperature: float, sample: SurveySample | None = None,
            model_id: str | None = None, draw: int = 0):
        return run_sample(
            sample or self.sample, treatment, self.question(horizon), self.model(temperature, model_id),
            self.gateway, self.config.fail_fast, draw,
        )

    def scenario_for(self, baseline: str) -> Scenario:
        if baseline == "zero":
            return self._averages_scenario.with_baseline(TreatmentVector.zeros())
        return self._averages_scenario

    def responder(self, horizon: int = 0, temperature: float | None = None):
        t = self.config.temperature if temperature is None else temperature
        return make_responder(self.gateway, self.question(horizon), self.model(t),
                              self.sample.master_seed, self.config.draws)

    def cache_stats(self) -> str:
        c = self.gateway.cache
        return f"cache hits {c.hits}, misses {c.misses}"


def load_sample(config: ExperimentConfig) -> tuple[SurveySample, dict[int, list]]:
    if config.sample_file is not None:
        return load_microdata(config.sample_file, master_seed=config.master_seed, label=config.label)
    spec = dict(config.synthetic)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "synthetic.csv"
        synth_microdata(int(spec.get("n", 300)), int(spec.get("seed", 1)), spec.get("marginals"), path,
                        noise_sd=float(spec.get("noise_sd", 4.0)), na_rate=float(spec.get("na_rate", 0.02)))
        return load_microdata(path, master_seed=config.master_seed, label=config.label)


def resolve_scenario(config: ExperimentConfig, series: dict[str, ComponentSeries]) -> Scenario:
    """Scenario with historical averages as baseline; derived from the series when a survey month is given."""
    if config.survey_month:
        return build_scenario(series, config.survey_month, config.scenario)
    return SCENARIOS[config.scenario].with_baseline(HISTORICAL_AVERAGES)


def _summary_cells(gpt, ias, weights) -> list:
    """MN, diff_MN, SD, diff_SD, L1, L2, pcc, pval for paired GPT/benchmark answers."""
    g = summarize(gpt, weights)
    b = summarize(ias, weights)
    try:
        r, p = pearson(gpt, ias)
    except InsufficientDataError:
        r, p = NAN, NAN
    return [g.mean, g.mean - b.mean, g.sd, g.sd - b.sd,
            calibration_loss(g, b, 1), calibration_loss(g, b, 2), r, p]


def _num(values) -> list[float]:
    return [NAN if v is None else float(v) for v in values]


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


CALIBRATE_COLUMNS = ["T", "n_miss", "MN", "diff_MN", "SD", "diff_SD", "L1-loss", "L2-loss", "pcc", "pval"]


def cmd_calibrate(session: Session) -> CommandResult:
    """Temperature sweep of conditioned perceptions against the benchmark."""
    cfg, res = session.config, CommandResult("calibrate")
    table = Table(CALIBRATE_COLUMNS + ["error"])
    w = session.sample.weights
    ias = _num(session.benchmark[0])
    for T in cfg.temperatures:
        try:
            run = session.run(session.scenario, 0, T)
            gpt = _num(run.values)
            table.add(T, run.n_miss, *_summary_cells(gpt, ias, w), "")
        except (GatewayError, InsufficientDataError) as exc:
            log.warning("T=%s failed: %s", T, exc)
            table.add(T, None, *([None] * 8), str(exc))
    bench = summarize(ias, w)
    res.tables["temperatures"] = table
    res.summary = {"benchmark": {"MN": bench.mean, "SD": bench.sd, "n": bench.n, "n_miss": bench.n_miss},
                   "scenario": session.scenario.treatment.as_dict(), "n_sample": len(session.sample)}
    return res


def cmd_run(session: Session) -> CommandResult:
    """Raw conditioned responses at the configured temperature for every horizon."""
    cfg, res = session.config, CommandResult("run")
    table = Table(["persona_id", "horizon", "T", "model_id", "seed", "reply", "value", "error"])
    n_miss = {}
    for h in cfg.horizons:
        run = session.run(session.scenario, h, cfg.temperature)
        for r in run.records:
            table.add(r.persona_id, h, r.temperature, r.model_id, r.option_permutation_seed,
                      r.raw_text, r.value, r.error)
        n_miss[h] = run.n_miss
    res.tables["responses"] = table
    res.summary = {"n_miss": n_miss, "n_sample": len(session.sample), "T": cfg.temperature}
    return res


def _outturn(session: Session, horizon: int) -> float | None:
    headline = session.series.get("headline")
    if headline is None:
        return None
    obs = dict(headline.observations)
    target = month_label(month_index(session.scenario.reference_period) + 12 * horizon)
    return obs.get(target)


def cmd_profile(session: Session) -> CommandResult:
    """Horizon profile of conditioned and unconditioned answers."""
    cfg, res = session.config, CommandResult("profile")
    w = session.sample.weights
    cols = ["T", "horizon", "n_miss", "MN", "diff_MN", "SD", "diff_SD", "L1-loss", "L2-loss", "pcc", "pval",
            "MN_uc", "effect_MN", "SD_uc", "effect_SD", "error"]
    table = Table(cols)
    matrices: dict[str, Any] = {}
    series = Table(["horizon", "ias"] + [f"{k}_T{T}" for T in cfg.profile_temperatures for k in ("gpt", "gpt_uc")]
                   + ["swath_lo", "swath_hi", "outturn"])
    means: dict[tuple, float | None] = {}
    for T in cfg.profile_temperatures:
        answers = {}
        for h in cfg.horizons:
            try:
                cond = session.run(session.scenario, h, T)
                unc = session.run(None, h, T)
                gpt, gpt_uc = _num(cond.values), _num(unc.values)
                ias = _num(session.benchmark.get(h, [None] * len(w)))
                cells = _summary_cells(gpt, ias, w)
                uc = summarize(gpt_uc, w)
                table.add(T, h, cond.n_miss, *cells, uc.mean, cells[0] - uc.mean, uc.sd, cells[2] - uc.sd, "")
                answers[h] = gpt
                means[("gpt", T, h)], means[("gpt_uc", T, h)] = cells[0], uc.mean
            except (GatewayError, InsufficientDataError) as exc:
                log.warning("T=%s h=%s failed: %s", T, h, exc)
                table.add(T, h, *([None] * (len(cols) - 3)), str(exc))
        if len(answers) >= 2:
            hs, mat = cross_horizon_matrix(answers)
            matrices[f"gpt_T{T}"] = {"horizons": hs, "r": mat}
    bench = {h: _num(v) for h, v in session.benchmark.items() if h in cfg.horizons}
    if len(bench) >= 2:
        hs, mat = cross_horizon_matrix(bench)
        matrices["ias"] = {"horizons": hs, "r": mat}
    band = percentile_band(session.series["headline"]) if "headline" in session.series else (None, None)
    for h in cfg.horizons:
        ias_mean = summarize(_num(session.benchmark[h]), w).mean if h in session.benchmark else None
        row = [h, ias_mean]
        for T in cfg.profile_temperatures:
            row += [means.get(("gpt", T, h)), means.get(("gpt_uc", T, h))]
        series.add(*row, *band, _outturn(session, h))
    for name, m in matrices.items():
        t = Table(["horizon", *[f"h{h}" for h in m["horizons"]]])
        for h, r in zip(m["horizons"], m["r"]):
            t.add(h, *[float(x) for x in r])
        res.tables[f"corr_{name}"] = t
    res.tables["horizons"] = table
    res.tables["series"] = series
    res.summary = {"scenario": session.scenario.treatment.as_dict(), "reference_period": session.scenario.reference_period}
    res.plots["profile"] = series
    return res


def _player_series(session: Session, player: str) -> ComponentSeries:
    """Basket-weighted monthly mean of a player's member components."""
    grouping = session.config.grouping
    comps = sorted(grouping.members(player)) if player in grouping.names else [player]
    maps = [dict(session.series[c].observations) for c in comps]
    months = sorted(set.intersection(*[set(m) for m in maps]), key=month_index)
    wsum = sum(BASKET_SHARES[c] for c in comps)
    obs = tuple((m, sum(BASKET_SHARES[c] * mp[m] for c, mp in zip(comps, maps)) / wsum) for m in months)
    return ComponentSeries(player, obs)


def _regression_contributions(session: Session, scenario: Scenario):
    """Linear-model contributions from the benchmark aggregate, or ``None`` when unavailable."""
    cfg = session.config
    if cfg.ias_aggregate_file is None:
        return None, None
    target = load_quarterly_series(cfg.ias_aggregate_file)
    comps = {p: quarterly_means(_player_series(session, p)) for p in cfg.grouping.names}
    fit = responsiveness_regression(target, comps, cfg.fit_range)
    inputs = {p: player_input(p, scenario.treatment, cfg.grouping) for p in cfg.grouping.names}
    return fit, linear_contributions(fit, inputs)


def cmd_decompose(session: Session) -> CommandResult:
    """Naive and exact Shapley contributions of each player to the scenario response."""
    cfg, res = session.config, CommandResult("decompose")
    players = cfg.grouping.names
    ev = Evaluator(session.responder(0), session.sample, session.workers)
    table = Table(["baseline", "method", *players, "sum", "baseline_value", "total"])
    summary: dict[str, Any] = {"players": players, "T": cfg.temperature, "mode": cfg.decompose_mode}
    shapley_zero = None
    for b in cfg.decompose_baselines:
        scen = session.scenario_for(b)
        naive = [naive_effect(None, session.sample, p, scen, cfg.grouping, evaluator=ev).value for p in players]
        base_val = ev.aggregate(scen.baseline)
        total = ev.aggregate(scen.treatment)
        table.add(b, "naive", *naive, sum(naive), base_val, total)
        rep = shapley_decompose(None, session.sample, scen, cfg.grouping, cfg.decompose_mode, evaluator=ev)
        phi = [v for _, v in rep.players]
        table.add(b, "shapley", *phi, sum(phi), rep.baseline_value, rep.total_value)
        summary[f"shapley_{b}"] = {"efficiency_gap": rep.efficiency_gap, "evaluation_count": rep.evaluation_count,
                                   "baseline_value": rep.baseline_value, "total_value": rep.total_value}
        if b == "zero":
            shapley_zero = rep.as_dict()
    summary["distinct_configurations"] = ev.distinct_configurations
    res.tables["contributions"] = table

    bars = Table(["player", "shapley_zero", "regression", "index_weighted"])
    fit, lin = _regression_contributions(session, session.scenario)
    for p in players:
        idx = player_weight(p, cfg.grouping) * player_input(p, session.scenario.treatment, cfg.grouping)
        bars.add(p, None if shapley_zero is None else shapley_zero[p], None if lin is None else lin[p], idx)
    res.tables["bars"] = bars
    if fit is not None:
        summary["regression"] = {"fit_range": list(cfg.fit_range), "n_obs": fit.n_obs, "r2": fit.r2,
                                 "coefficients": fit.as_dict(), "stars": dict(zip(fit.names, fit.stars))}
    res.summary = summary
    res.plots["decompose"] = bars
    return res


def cmd_scan(session: Session) -> CommandResult:
    """Sensitivity curves, slope/weight ratios and historical bands per player."""
    cfg, res = session.config, CommandResult("scan")
    if not cfg.scan:
        raise ValueError("config has no scan section")
    ev = Evaluator(session.responder(0), session.sample, session.workers)
    curves = Table(["player", "x", "y"])
    bands = Table(["player", "p05", "p95", "scenario_x"])
    stats: dict[str, tuple[float, float, float]] = {}
    for player, spec in cfg.scan.items():
        grouping = cfg.grouping if player in cfg.grouping.names else None
        curve = sensitivity_scan(None, session.sample, player, spec.grid, session.scenario, grouping, evaluator=ev)
        for x, y in curve.grid:
            curves.add(player, x, y)
        weight = player_weight(player, grouping)
        slope, ratio = slope_and_ratio(curve, spec.linear_range, weight)
        stats[player] = (slope, weight, ratio)
        lo, hi = percentile_band(_player_series(session, player))
        bands.add(player, lo, hi, player_input(player, session.scenario.treatment, grouping))
    names = list(stats)
    summary = Table(["row", *names, "sum"])
    slopes = [stats[p][0] for p in names]
    weights = [stats[p][1] for p in names]
    summary.add("slope", *slopes, sum(slopes))
    summary.add("weight", *weights, sum(weights))
    summary.add("ratio", *[stats[p][2] for p in names], sum(slopes) / sum(weights))
    res.tables["curves"] = curves
    res.tables["summary"] = summary
    res.tables["bands"] = bands
    res.summary = {"T": cfg.temperature, "baseline": session.scenario.baseline.as_dict(),
                   "linear_ranges": {p: list(s.linear_range) for p, s in cfg.scan.items()}}
    res.plots["scan"] = (curves, bands)
    return res


def _category_of(name: str) -> str:
    return name.split("[", 1)[0]


def cmd_regress(session: Session) -> CommandResult:
    """Demographic WLS regressions for the benchmark, the model at each temperature, and group estimates."""
    cfg, res = session.config, CommandResult("regress")
    h = cfg.regress_horizon
    profiles = [p.profile for p in session.sample.personas]
    X, names = build_dummy_design(profiles, cfg.hypothesis)
    w = session.sample.weights
    fits = {"ias": wls_fit(_num(session.benchmark[h]), X, w, names)}
    for T in cfg.regress_temperatures:
        run = session.run(session.scenario, h, T)
        fits[f"gpt_T{T}"] = wls_fit(_num(run.values), X, w, names)
    ons = {}
    if cfg.group_estimates_file is not None:
        ons = ons_reference_diffs(load_group_estimates(cfg.group_estimates_file), cfg.hypothesis, strict=False)

    cols = ["name"]
    for k in fits:
        cols += [k, f"{k}_se", f"{k}_stars"]
    cols.append("ons")
    coefs = Table(cols)
    for i, n in enumerate(names):
        row = [n]
        for f in fits.values():
            row += [float(f.coefficients[i]), float(f.robust_se[i]), f.stars[i]]
        coefs.add(*row, ons.get(n))
    for stat in ("r2", "r2_adj", "n_obs"):
        coefs.add(stat, *[x for f in fits.values() for x in (getattr(f, stat), None, "")], None)

    verdicts = Table(["source", "name", "coefficient", "expected_sign", "p_one_sided", "verdict"])
    for k, f in fits.items():
        for v in hypothesis_report(f, cfg.hypothesis):
            verdicts.add(k, v.name, v.coefficient, v.expected_sign, v.p_one_sided, v.verdict)

    sim = Table(["category", "a", "b", "pcc", "cosine"])
    slope_names = [n for n in names if n != "const"]
    vectors = {k: {n: f.coef(n) for n in slope_names} for k, f in fits.items()}
    if ons:
        vectors["ons"] = {n: ons[n] for n in slope_names if n in ons}
    pairs = [("ias", k) for k in fits if k != "ias"] + ([("ons", k) for k in fits] if ons else [])
    for cat, _, _ in cfg.hypothesis.categories:
        for a, b in pairs:
            va = {n: v for n, v in vectors[a].items() if _category_of(n) == cat}
            vb = {n: v for n, v in vectors[b].items() if _category_of(n) == cat}
            try:
                r, c = coef_similarity(va, vb)
            except ValueError:
                r, c = NAN, NAN
            sim.add(cat, a, b, r, c)

    bars = Table(["category", "name", "source", "coefficient", "ci_lo", "ci_hi"])
    for k, f in fits.items():
        ci = f.conf_int(0.95)
        for i, n in enumerate(names):
            if n != "const":
                bars.add(_category_of(n), n, k, float(f.coefficients[i]), float(ci[i, 0]), float(ci[i, 1]))
    for n in slope_names:
        if n in ons:
            bars.add(_category_of(n), n, "ons", ons[n], None, None)

    res.tables["coefficients"] = coefs
    res.tables["verdicts"] = verdicts
    res.tables["similarity"] = sim
    res.tables["bars"] = bars
    res.summary = {"horizon": h, "temperatures": list(cfg.regress_temperatures), "columns": names,
                   "cov_type": fits["ias"].cov_type}
    res.plots["regress"] = bars
    return res


def load_probe_prompts(path: str | Path | None = None) -> list[str]:
    text = Path(path or asset_path("probe_prompts.txt")).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def cmd_probe(session: Session) -> CommandResult:
    """Knowledge-cutoff probes plus an unconditioned trend across model versions."""
    cfg, res = session.config, CommandResult("probe")
    model_ids = list(cfg.probe_model_ids) or [cfg.model.model_id]
    transcript = Table(["model_id", "index", "prompt", "reply", "timestamp", "error"])
    for m in model_ids:
        model = session.model(cfg.temperature, m)
        for i, prompt in enumerate(load_probe_prompts(), start=1):
            try:
                # A fresh single-turn exchange per prompt.
                ex = session.gateway.ask(_probe_request(model, prompt))
                transcript.add(m, i, prompt, ex.reply_text, ex.timestamp, "")
            except GatewayError as exc:
                transcript.add(m, i, prompt, None, None, str(exc))

    trend = Table(["model_id", "n_respondents", "permutations", "n_answers", "n_miss", "mean"])
    sub = session.sample.subsample(min(cfg.probe_subsample, len(session.sample)))
    for m in model_ids:
        vals, wts, miss = [], [], 0
        for d in range(cfg.probe_permutations):
            run = session.run(None, 0, cfg.temperature, sample=sub, model_id=m, draw=d)
            miss += run.n_miss
            for p, v in zip(sub.personas, run.values):
                if v is not None:
                    vals.append(v)
                    wts.append(p.weight)
        mean = float(np.dot(vals, wts) / np.sum(wts)) if vals else NAN
        trend.add(m, len(sub), cfg.probe_permutations, len(vals), miss, mean)
    res.tables["transcript"] = transcript
    res.tables["trend"] = trend
    res.summary = {"model_ids": model_ids, "n_prompts": len(load_probe_prompts()), "T": cfg.temperature}
    return res


def _probe_request(model, prompt: str) -> ChatRequest:
    return ChatRequest("", prompt, model.model_id, model.temperature, 0)


def cmd_synth_data(config: ExperimentConfig, out_dir: str | Path, n: int | None = None,
                   seed: int | None = None) -> Path:
    """Write deterministic synthetic microdata in the survey schema."""
    spec = dict(config.synthetic)
    n = int(n if n is not None else spec.get("n", 300))
    seed = int(seed if seed is not None else spec.get("seed", 1))
    path = Path(out_dir) / "synthetic_microdata.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    synth_microdata(n, seed, spec.get("marginals"), path,
                    noise_sd=float(spec.get("noise_sd", 4.0)), na_rate=float(spec.get("na_rate", 0.02)))
    return path


COMMANDS: dict[str, Callable[[Session], CommandResult]] = {
    "calibrate": cmd_calibrate,
    "run": cmd_run,
    "profile": cmd_profile,
    "decompose": cmd_decompose,
    "scan": cmd_scan,
    "regress": cmd_regress,
    "probe": cmd_probe,
}
