"""Optional SVG renderings of the plot-ready tables (requires matplotlib)."""

from __future__ import annotations

from pathlib import Path

from .workflows import CommandResult, Table


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "synthsurvey"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> Path:
    # No creation date, so reruns give identical files.
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _profile(plt, series: Table, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    h = series.column("horizon")
    for name in series.columns:
        if name.startswith("gpt") or name == "ias":
            ys = series.column(name)
            ax.plot(h, [float("nan") if y is None else y for y in ys], marker="o", label=name)
    lo, hi = series.column("swath_lo")[0], series.column("swath_hi")[0]
    if lo is not None:
        ax.axhspan(lo, hi, color="0.85", label="historical 5-95%")
    ax.set_xlabel("horizon (years)")
    ax.set_ylabel("inflation (%)")
    ax.legend(fontsize=7)
    return _save(fig, path)


def _scan(plt, curves: Table, bands: Table, path: Path) -> Path:
    players = list(dict.fromkeys(curves.column("player")))
    fig, axes = plt.subplots(len(players), 1, figsize=(6, 3 * len(players)), squeeze=False)
    band = {r["player"]: r for r in bands.records()}
    for ax, p in zip(axes[:, 0], players):
        pts = [r for r in curves.records() if r["player"] == p]
        ax.plot([r["x"] for r in pts], [r["y"] for r in pts], marker=".")
        ax.axvspan(band[p]["p05"], band[p]["p95"], color="0.85")
        ax.axvline(band[p]["scenario_x"], color="purple", linestyle="--")
        ax.set_title(p)
    fig.tight_layout()
    return _save(fig, path)


def _bars(plt, table: Table, label: str, value_cols: list[str], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = table.column(label)
    width = 0.8 / len(value_cols)
    for k, col in enumerate(value_cols):
        ys = [0.0 if v is None else v for v in table.column(col)]
        ax.bar([i + k * width for i in range(len(labels))], ys, width, label=col)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def _regress(plt, bars: Table, path: Path) -> Path:
    recs = bars.records()
    names = list(dict.fromkeys(r["name"] for r in recs))
    sources = list(dict.fromkeys(r["source"] for r in recs))
    fig, ax = plt.subplots(figsize=(max(6, len(names) * 0.5), 4))
    width = 0.8 / len(sources)
    for k, src in enumerate(sources):
        rows = {r["name"]: r for r in recs if r["source"] == src}
        xs, ys, err = [], [], [[], []]
        for i, n in enumerate(names):
            if n in rows:
                r = rows[n]
                xs.append(i + k * width)
                ys.append(r["coefficient"])
                has_ci = r["ci_lo"] is not None
                err[0].append(r["coefficient"] - r["ci_lo"] if has_ci else 0.0)
                err[1].append(r["ci_hi"] - r["coefficient"] if has_ci else 0.0)
        ax.bar(xs, ys, width, yerr=err, capsize=2, label=src)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(names))])
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=6)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def render(result: CommandResult, out_dir: str | Path) -> list[Path]:
    plt = _pyplot()
    out = Path(out_dir)
    written = []
    for name, data in result.plots.items():
        path = out / f"{result.command}_{name}.svg"
        if name == "profile":
            written.append(_profile(plt, data, path))
        elif name == "scan":
            written.append(_scan(plt, *data, path))
        elif name == "decompose":
            written.append(_bars(plt, data, "player", ["shapley_zero", "regression", "index_weighted"], path))
        elif name == "regress":
            written.append(_regress(plt, data, path))
        plt.close("all")
    return written
