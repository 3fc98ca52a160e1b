"""Tab-separated result tables and the figures rendered next to them."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib import pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

TARGET_FITNESS = 0.75


def write_tsv(path, rows, columns) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_cell(row[c]) for c in columns) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def evaluations_to(record, target=TARGET_FITNESS):
    for g in record.generations:
        if g["best"] >= target:
            return g["evaluations"]
    return None


def label(record) -> str:
    cfg = record.config
    return "direct" if cfg["scheme"] == "direct" else f"{cfg['scheme']} C={cfg['coeffs']}"


def run_summary(records, out_dir, plots=True) -> list[dict]:
    out_dir = Path(out_dir)
    rows = [{"label": label(r), "run": r.run_index, "seed": r.seed, "best_fitness": r.best_fitness,
             "evaluations": r.evaluations, f"evals_to_{TARGET_FITNESS}": evaluations_to(r),
             "best_coefficients": r.best_coefficients, "weights_sha256": r.weights_sha256}
            for r in records]
    write_tsv(out_dir / "summary.tsv", rows, list(rows[0]))
    curve_rows = [{"label": label(r), "run": r.run_index, "generation": g["generation"],
                   "evaluations": g["evaluations"], "best": g["best"]}
                  for r in records for g in r.generations]
    write_tsv(out_dir / "convergence.tsv", curve_rows,
              ["label", "run", "generation", "evaluations", "best"])
    if plots:
        plot_convergence(records, out_dir / "convergence.png")
    return rows


def plot_convergence(records, path) -> None:
    """Best fitness per generation averaged over runs, log-log."""
    groups = {}
    for r in records:
        groups.setdefault(label(r), []).append(r)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, runs in sorted(groups.items()):
        n = min(len(r.generations) for r in runs)
        ev = np.array([g["evaluations"] for g in runs[0].generations[:n]])
        best = np.mean([[g["best"] for g in r.generations[:n]] for r in runs], axis=0)
        ax.plot(ev, np.maximum(best, 1e-3), label=name)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("evaluations")
    ax.set_ylabel("best fitness (mean over runs)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def positions_report(result, out_dir, plots=True) -> None:
    out_dir = Path(out_dir)
    write_tsv(out_dir / "gen_pos_scores.tsv", result["rows"], ["label", "run", "score"])
    summary = [{"label": k, **v} for k, v in result["summary"].items()]
    write_tsv(out_dir / "gen_pos_summary.tsv", summary, ["label", "n", "median", "q1", "q3", "min", "max"])
    if not plots:
        return
    groups = {}
    for row in result["rows"]:
        groups.setdefault(row["label"], []).append(row["score"])
    indirect = sorted(k for k in groups if k != "direct")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if indirect:
        ax.boxplot([groups[k] for k in indirect], whis=(0, 100))
        ax.set_xticks(range(1, len(indirect) + 1), indirect, rotation=30, fontsize=8)
    if "direct" in groups:
        q1, med, q3 = np.percentile(groups["direct"], [25, 50, 75])
        ax.axhline(med, color="k", label="direct median")
        for q in (q1, q3):
            ax.axhline(q, color="k", linestyle="--", linewidth=0.8)
        ax.legend(fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("fitness, held-out starting angles")
    fig.tight_layout()
    fig.savefig(out_dir / "gen_pos.png", dpi=120)
    plt.close(fig)


def lengths_report(result, out_dir, plots=True) -> None:
    out_dir = Path(out_dir)
    write_tsv(out_dir / "gen_len_scores.tsv", result["rows"], ["label", "run", "p", "score"])
    surface = [{"coefficients": c, "p": p, "median_difference": v} for (c, p), v in result["surface"].items()]
    write_tsv(out_dir / "gen_len_surface.tsv", surface, ["coefficients", "p", "median_difference"])
    if not plots or not surface:
        return
    cs = sorted({c for c, _ in result["surface"]})
    ps = sorted({p for _, p in result["surface"]})
    grid = np.array([[result["surface"][(c, p)] for p in ps] for c in cs])
    lim = max(1e-9, float(np.abs(grid).max()))
    fig, ax = plt.subplots(figsize=(7, 3 + 0.3 * len(cs)))
    im = ax.imshow(grid, cmap="RdBu", vmin=-lim, vmax=lim, aspect="auto")
    ax.set_xticks(range(len(ps)), ps)
    ax.set_yticks(range(len(cs)), cs)
    ax.set_xlabel("compartments")
    ax.set_ylabel("coefficients")
    fig.colorbar(im, ax=ax, label="median indirect - direct")
    fig.tight_layout()
    fig.savefig(out_dir / "gen_len.png", dpi=120)
    plt.close(fig)


def incremental_report(records, out_dir, plots=True) -> None:
    out_dir = Path(out_dir)
    rows = [{"run": r.run_index, **s} for r in records for s in r.stages]
    write_tsv(out_dir / "incremental_stages.tsv", rows,
              ["run", "stage", "coefficients", "best", "evaluations", "stagnant"])
    if not plots or not rows:
        return
    by_c = {}
    for row in rows:
        by_c.setdefault(row["coefficients"], []).append(row["best"])
    cs = sorted(by_c)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.boxplot([by_c[c] for c in cs], whis=(0, 100))
    ax.set_xticks(range(1, len(cs) + 1), cs)
    ax.set_xlabel("coefficients")
    ax.set_ylabel("best fitness")
    fig.tight_layout()
    fig.savefig(out_dir / "incremental.png", dpi=120)
    plt.close(fig)
