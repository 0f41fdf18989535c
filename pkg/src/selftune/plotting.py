"""Figure rendering for scenario runs.

Panels follow the CSV columns: controlled output against the set point, the
command, the A and B estimates and, for J2 runs, the reference compensation
gain. Figures are built on :class:`matplotlib.figure.Figure` directly so no
interactive backend is touched.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

from .harness import StepRecord
from .plant import SAMPLE_TIME

_STYLE = {"linewidth": 0.9}


def _columns(records: Sequence[StepRecord]):
    t = np.array([r.t for r in records]) * SAMPLE_TIME
    theta = np.array([r.theta for r in records]).reshape(len(records), 8)
    return t, theta


def _robust_ylim(ax, *series) -> None:
    # start-up transients would otherwise flatten the steady behaviour
    data = np.concatenate([np.asarray(s, dtype=float) for s in series])
    if data.size == 0:
        return
    lo, hi = np.percentile(data, [1, 99])
    pad = max(hi - lo, 1e-6 * max(abs(lo), abs(hi), 1.0)) * 0.25
    ax.set_ylim(lo - pad, hi + pad)


def render_run(records: Sequence[StepRecord], path: str | Path, title: str = "") -> Path:
    path = Path(path)
    t, theta = _columns(records)
    has_kc = bool(records) and records[0].kc is not None
    nrows = 5 if has_kc else 4
    fig = Figure(figsize=(8, 2.1 * nrows), constrained_layout=True)
    axes = fig.subplots(nrows, 1, sharex=True)

    ax = axes[0]
    y, w, u = ([getattr(r, k) for r in records] for k in "ywu")
    ax.plot(t, y, label="y", **_STYLE)
    ax.plot(t, w, "--", label="w", **_STYLE)
    _robust_ylim(ax, y, w)
    ax.set_ylabel("output [r.u.]")
    ax.legend(loc="lower right", fontsize=8)

    axes[1].plot(t, u, color="C3", **_STYLE)
    _robust_ylim(axes[1], u)
    axes[1].set_ylabel("command [r.u.]")

    for i in range(4):
        axes[2].plot(t, theta[:, i], label=f"a{i + 1}", **_STYLE)
        axes[3].plot(t, theta[:, 4 + i], label=f"b{i}", **_STYLE)
    axes[2].set_ylabel("A estimates")
    axes[3].set_ylabel("B estimates")
    axes[2].legend(ncol=4, fontsize=8)
    axes[3].legend(ncol=4, fontsize=8)

    if has_kc:
        axes[4].plot(t, [r.kc for r in records], color="C2", **_STYLE)
        axes[4].set_ylabel("kc")

    axes[-1].set_xlabel("time [s]")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=120)
    return path


def render_comparison(
    first: Sequence[StepRecord],
    second: Sequence[StepRecord],
    path: str | Path,
    labels: tuple[str, str] = ("J1", "J2"),
) -> Path:
    """Overlay output and command of two runs."""
    path = Path(path)
    fig = Figure(figsize=(8, 5), constrained_layout=True)
    ax_y, ax_u = fig.subplots(2, 1, sharex=True)
    ys, us = [], []
    for recs, lab in zip((first, second), labels):
        t = np.array([r.t for r in recs]) * SAMPLE_TIME
        ys.append([r.y for r in recs])
        us.append([r.u for r in recs])
        ax_y.plot(t, ys[-1], label=lab, **_STYLE)
        ax_u.plot(t, us[-1], label=lab, **_STYLE)
    _robust_ylim(ax_y, *ys)
    _robust_ylim(ax_u, *us)
    ax_y.set_ylabel("output [r.u.]")
    ax_u.set_ylabel("command [r.u.]")
    ax_u.set_xlabel("time [s]")
    ax_y.legend(fontsize=8)
    fig.savefig(path, dpi=120)
    return path
