"""Cross-seed aggregation and plot-ready series."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .runner import FLOAT_FMT, RunRecord

ROLLING_WINDOW = 4


@dataclass
class Summary:
    steps: np.ndarray
    metrics: list[str]
    mean: np.ndarray  # (n_steps, n_metrics)
    stderr: np.ndarray
    n_seeds: int

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        i = self.metrics.index(name)
        return self.mean[:, i], self.stderr[:, i]

    def to_csv(self, smooth: bool = False) -> str:
        mean, se = self.mean, self.stderr
        if smooth:
            mean = np.column_stack([rolling_mean(c) for c in mean.T]) if mean.size else mean
            se = np.column_stack([rolling_mean(c) for c in se.T]) if se.size else se
        header = ["step"] + [f"{m}_{kind}" for m in self.metrics for kind in ("mean", "stderr")]
        lines = [",".join(header)]
        for i, step in enumerate(self.steps):
            vals = [format(v, FLOAT_FMT) for pair in zip(mean[i], se[i]) for v in pair]
            lines.append(",".join([str(int(step))] + vals))
        return "\n".join(lines) + "\n"


def aggregate(records: list[RunRecord]) -> Summary:
    if not records:
        raise ValueError("need at least one record")
    cols = records[0].columns
    steps = records[0].steps
    for r in records[1:]:
        if r.columns != cols or not np.array_equal(r.steps, steps):
            raise ValueError("ragged records: seeds disagree on columns or evaluation steps")
    metrics = [c for c in cols if c not in ("step", "seed")]
    idx = [cols.index(c) for c in metrics]
    stack = np.stack([r.rows[:, idx] for r in records])  # (seeds, steps, metrics)
    n = stack.shape[0]
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return Summary(steps=steps, metrics=metrics, mean=mean, stderr=stderr, n_seeds=n)


def rolling_mean(x, window: int = ROLLING_WINDOW) -> np.ndarray:
    """Trailing window; the first points average over what is available."""
    x = np.asarray(x, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    i = np.arange(1, x.size + 1)
    lo = np.maximum(i - window, 0)
    return (c[i] - c[lo]) / (i - lo)


def write_report(run_dir, records: list[RunRecord]) -> Summary:
    summary = aggregate(records)
    run_dir = Path(run_dir)
    (run_dir / "aggregate.csv").write_text(summary.to_csv())
    (run_dir / "plot_data.csv").write_text(summary.to_csv(smooth=True))
    return summary
