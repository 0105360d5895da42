"""Figure rendering for evaluation reports (headless backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .evaluation import EvalReport

_STYLE = {
    "cosine": dict(color="#777777", marker="s"),
    "lp": dict(color="#1f77b4", marker="o"),
    "gcn": dict(color="#d62728", marker="^"),
}


def save_error_rate_figure(report: EvalReport, path) -> None:
    """Mean segment error rate vs profile budget, one line per method.

    Error bars show one population standard deviation over the repeats.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    methods = []
    for row in report.rows:
        if row.method not in methods:
            methods.append(row.method)
    for method in methods:
        rows = sorted((r for r in report.rows if r.method == method), key=lambda r: r.k)
        ks = [r.k for r in rows]
        means = [r.mean * 100.0 for r in rows]
        stds = [r.std * 100.0 for r in rows]
        style = _STYLE.get(method, {})
        ax.errorbar(ks, means, yerr=stds, label=method, capsize=3, **style)
    ax.set_xlabel("profile segments per speaker")
    ax.set_ylabel("segment error rate (%)")
    ax.set_ylim(bottom=0.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
