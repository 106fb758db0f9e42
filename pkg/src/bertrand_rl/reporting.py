"""Machine-readable emitters: traces, state heatmaps, and batch summaries.

All files start with ``#``-prefixed metadata lines carrying the config hash
and tool version, so any output can be traced back to the exact settings
that produced it. Emitters are sequential per file; different files may be
written concurrently.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .env import SpaceKind, price_grid
from .metrics import WINDOW, Label
from .runner import ExperimentConfig, RunResult, RunTrace, build_market, build_space, equilibrium_info

LOG_FLOOR = 1e-6


def _meta_lines(config_hash: str, extra: Optional[dict] = None) -> list:
    meta = {"config_hash": config_hash, "tool_version": __version__}
    if extra:
        meta.update(extra)
    return [f"# {key}={value}" for key, value in meta.items()]


def emit_trace(result: RunResult, path) -> None:
    """CSV of the retained steps, prices at full (round-trip exact) precision."""
    trace = result.trace
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(result.config_hash, {"seed": result.seed, "T": trace.T}):
            fh.write(line + "\n")
        fh.write("t,p0,p1,d0,d1,r0,r1\n")
        for i in range(len(trace)):
            fh.write(",".join([str(int(trace.t[i]))] + [
                repr(float(v)) for v in (trace.p0[i], trace.p1[i], trace.d0[i],
                                         trace.d1[i], trace.r0[i], trace.r1[i])]) + "\n")


def parse_trace(path) -> tuple:
    """Read back an emitted trace; returns (RunTrace, metadata dict)."""
    meta: dict = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                meta[key] = value
                continue
            if line.startswith("t,"):
                continue
            rows.append([float(x) for x in line.split(",")])
    data = np.asarray(rows, dtype=np.float64).reshape(-1, 7)
    T = int(meta.get("T", data[-1, 0] if len(data) else 0))
    trace = RunTrace(T, data[:, 0].astype(np.int64), data[:, 1], data[:, 2],
                     data[:, 3], data[:, 4], data[:, 5], data[:, 6])
    return trace, meta


def state_bins(config: ExperimentConfig) -> tuple:
    """Bin edges and axis labels shared by both heatmap scales.

    Equal-width bins over the price range; for discrete runs each grid price
    lands in its own bin, so this reproduces exact grid-index binning.
    """
    model = build_market(config)
    space = build_space(config, equilibrium_info(model))
    m = config.m
    edges = np.linspace(space.lower, space.upper, m + 1)
    if space.kind is SpaceKind.DISCRETE:
        labels = price_grid(space)
    else:
        labels = 0.5 * (edges[:-1] + edges[1:])
    return edges, labels


def heatmap_ratios(results: Sequence[RunResult], config: ExperimentConfig) -> np.ndarray:
    """m x m occurrence ratios of (p0, p1) window states pooled over runs."""
    if not results:
        raise ValueError("need at least one run result")
    edges, _ = state_bins(config)
    counts = np.zeros((config.m, config.m), dtype=np.float64)
    for result in results:
        win = result.trace.window()
        hist, _, _ = np.histogram2d(win.p0, win.p1, bins=(edges, edges))
        counts += hist
    total = counts.sum()
    if total == 0:
        raise ValueError("no window states to bin")
    return counts / total


def emit_heatmap(results: Sequence[RunResult], config: ExperimentConfig,
                 scale: str, path) -> None:
    """CSV heatmap matrix with axis labels; rows index p0, columns p1.

    ``scale`` is "linear" (raw ratios) or "log" (display transform
    log10(ratio + 1e-6) of the same ratios).
    """
    if scale not in ("linear", "log"):
        raise ValueError(f"scale must be 'linear' or 'log', got {scale!r}")
    ratios = heatmap_ratios(results, config)
    display = np.log10(ratios + LOG_FLOOR) if scale == "log" else ratios
    _, labels = state_bins(config)
    config_hash = results[0].config_hash
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(config_hash, {"scale": scale, "runs": len(results)}):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["p0\\p1"] + [f"{p:.6f}" for p in labels])
        for i, p in enumerate(labels):
            writer.writerow([f"{p:.6f}"] + [repr(float(v)) for v in display[i]])


def _stats(values: np.ndarray) -> dict:
    return {"mean": float(np.mean(values)), "std": float(np.std(values))}


def _boxplot(values: np.ndarray) -> dict:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return {"min": float(values.min()), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(values.max()),
            "mean": float(np.mean(values)), "std": float(np.std(values))}


def summarize(results: Sequence[RunResult]) -> dict:
    """Classification distribution plus per-agent indicator statistics.

    Percentages derive from integer label counts over the non-failed runs,
    so the three labels always partition the seed set exactly.
    """
    if not results:
        raise ValueError("need at least one run result")
    ok = [r for r in results if not r.failed]
    counts = {label.value: 0 for label in Label}
    for r in ok:
        counts[r.classification.label.value] += 1
    n = len(ok)
    summary = {
        "config_hash": results[0].config_hash,
        "tool_version": __version__,
        "seeds": [r.seed for r in results],
        "n_runs": len(results),
        "n_failed": len(results) - n,
        "failed_seeds": [r.seed for r in results if r.failed],
        "counts": counts,
        "percentages": {k: (100.0 * v / n if n else 0.0) for k, v in counts.items()},
    }
    if ok:
        rpdi0 = np.array([r.rpdi_mean[0] for r in ok])
        rpdi1 = np.array([r.rpdi_mean[1] for r in ok])
        delta0 = np.array([r.delta_mean[0] for r in ok])
        delta1 = np.array([r.delta_mean[1] for r in ok])
        summary["rpdi"] = {"agent0": _stats(rpdi0), "agent1": _stats(rpdi1)}
        summary["delta"] = {"agent0": _stats(delta0), "agent1": _stats(delta1)}
        summary["rpdi_boxplot"] = _boxplot(np.concatenate([rpdi0, rpdi1]))
        summary["delta_boxplot"] = _boxplot(np.concatenate([delta0, delta1]))
        summary["eta"] = _stats(np.array([r.classification.eta for r in ok]))
    return summary


def emit_summary(results: Sequence[RunResult], path) -> dict:
    summary = summarize(results)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


@dataclass(frozen=True)
class ReanalysisReport:
    """Classification recomputed from a stored trace file."""

    eta: float
    kappa: Optional[float]
    label: str
    rpdi_mean: tuple
    delta_mean: tuple


def reanalyze(trace: RunTrace, config: ExperimentConfig) -> ReanalysisReport:
    """Recompute window metrics from a (possibly re-parsed) trace."""
    from .metrics import classify, delta, rpdi

    eq = equilibrium_info(build_market(config))
    win = trace.window()
    cls = classify(win.p0, win.p1, eq)
    rpdi_mean = (float(np.mean(rpdi(win.p0, eq.nash_price, eq.monopoly_price))),
                 float(np.mean(rpdi(win.p1, eq.nash_price, eq.monopoly_price))))
    delta_mean = (delta(float(np.mean(win.r0)), eq.nash_profit, eq.monopoly_profit),
                  delta(float(np.mean(win.r1)), eq.nash_profit, eq.monopoly_profit))
    return ReanalysisReport(cls.eta, cls.kappa, cls.label.value, rpdi_mean, delta_mean)
