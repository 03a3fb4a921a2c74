"""Render experiment summary figures next to the CSV output.

Two standard views: mean sum rate versus power budget (one curve per
protocol, one figure per K) and mean novel/benchmark ratio versus K
(one figure per budget, only when both protocols ran).
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .model import ProtocolKind
from .simkit import ExperimentReport

_LABELS = {ProtocolKind.NOVEL: "novel", ProtocolKind.BENCHMARK: "benchmark"}
_MARKERS = {ProtocolKind.NOVEL: "o", ProtocolKind.BENCHMARK: "s"}


def _fmt(value: float) -> str:
    return f"{value:g}"


def render_report_figures(report: ExperimentReport, out_dir: str) -> list[str]:
    """Write all applicable figures into out_dir, returning their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    paths += _rate_vs_budget(report, out_dir)
    paths += _ratio_vs_subcarriers(report, out_dir)
    return paths


def _rate_vs_budget(report: ExperimentReport, out_dir: str) -> list[str]:
    config = report.config
    if len(config.snr_budget_db) < 2:
        return []
    paths = []
    for num_k in config.num_subcarriers:
        cells = [c for c in report.cells if c.num_subcarriers == num_k]
        cells.sort(key=lambda c: c.snr_db)
        budgets = [c.snr_db for c in cells]
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for protocol in config.protocols:
            means = [c.mean_rate(protocol) for c in cells]
            errs = [c.stderr_rate(protocol) for c in cells]
            ax.errorbar(
                budgets,
                means,
                yerr=errs,
                marker=_MARKERS[protocol],
                capsize=3,
                label=_LABELS[protocol],
            )
        ax.set_xlabel("total power budget (dB)")
        ax.set_ylabel("mean sum rate (bpos)")
        ax.set_title(f"Sum rate vs budget, K={num_k}, U={config.num_users}")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"rate_vs_budget_K{num_k}.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def _ratio_vs_subcarriers(report: ExperimentReport, out_dir: str) -> list[str]:
    config = report.config
    if len(config.num_subcarriers) < 2:
        return []
    paths = []
    for snr_db in config.snr_budget_db:
        cells = [c for c in report.cells if c.snr_db == snr_db]
        cells.sort(key=lambda c: c.num_subcarriers)
        if any(c.mean_ratio() is None for c in cells):
            continue
        ks = [c.num_subcarriers for c in cells]
        means = [c.mean_ratio() for c in cells]
        errs = [c.stderr_ratio() for c in cells]
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.errorbar(ks, means, yerr=errs, marker="o", capsize=3, color="tab:green")
        ax.axhline(1.0, color="gray", linestyle="--", linewidth=1)
        ax.set_xscale("log", base=2)
        ax.set_xticks(ks)
        ax.get_xaxis().set_major_formatter(plt.FuncFormatter(lambda v, _: f"{int(v)}"))
        ax.set_xlabel("number of subcarriers K")
        ax.set_ylabel("mean rate ratio novel / benchmark")
        ax.set_title(f"Protocol gain vs K at {_fmt(snr_db)} dB")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, f"ratio_vs_K_snr{_fmt(snr_db)}.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths
