"""Figure renderers for the CLI report path.  Headless by construction."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def norm_curve(ts, values, errors, path, title="occupation norm") -> Path:
    """Norm versus time with error bars, log-log when the data allows it."""
    ts = np.asarray(ts, float)
    values = np.asarray(values, float)
    errors = np.asarray(errors, float)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    finite = np.isfinite(values)
    ax.errorbar(ts[finite], values[finite], yerr=errors[finite], fmt="o-", ms=3.5, lw=1.1)
    if np.all(values[finite] > 0) and len(ts) > 2:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def evidence_decay(times, values, path, verdict="") -> Path:
    """Small-time decay evidence behind a classification verdict."""
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    finite = np.isfinite(values) & (values > 0)
    ax.loglog(times[finite], values[finite], "o-", ms=3.5, lw=1.1)
    if np.any(~finite):
        ax.set_title(f"decay evidence ({verdict}; some values non-finite)")
    else:
        ax.set_title(f"decay evidence ({verdict})" if verdict else "decay evidence")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def field_lines(ts, xs, values, path, errors=None, title="semigroup field") -> Path:
    """u(t, x) as one line per time over the first chart coordinate."""
    xs = np.asarray(xs, float)
    values = np.asarray(values, float)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for i, t in enumerate(ts):
        if errors is not None and np.any(np.asarray(errors)[i] > 0):
            ax.errorbar(xs, values[i], yerr=np.asarray(errors)[i], lw=1.1,
                        label=f"t={t:g}", elinewidth=0.7)
        else:
            ax.plot(xs, values[i], lw=1.2, label=f"t={t:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("u(t, x)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)
