"""Figure rendering for analysis and simulation reports.

Figures are written next to the delimited data files; the data files
stay the interface of record and carry everything the plots show.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_cer_figure(results, path, title: str | None = None) -> None:
    """Semilog CER curves with Wilson-interval error bars, one per result."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for res in results:
        snr = [p.snr_db for p in res.points]
        cer = [max(p.cer, 1e-12) for p in res.points]
        lo = [max(p.cer - p.ci_low, 0.0) for p in res.points]
        hi = [max(p.ci_high - p.cer, 0.0) for p in res.points]
        label = f"{res.config.code} {res.config.encoder}"
        ax.errorbar(snr, cer, yerr=[lo, hi], marker="o", capsize=3, label=label)
    ax.set_yscale("log")
    axis = results[0].config.axis if results else "snr"
    ax.set_xlabel(f"{axis.upper()} (dB)")
    ax.set_ylabel("codeword error rate")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trace_figure(rows, path, title: str = "normalized minimum trace") -> None:
    """Minimum-trace metric versus antenna count, one curve per QAM size.

    rows: iterable of (n, m, value).
    """
    by_m: dict[int, list[tuple[int, float]]] = {}
    for n, m, value in rows:
        by_m.setdefault(m, []).append((n, value))
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for m in sorted(by_m):
        pts = sorted(by_m[m])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="s",
                label=f"{2 ** m}-QAM")
    ax.set_yscale("log")
    ax.set_xlabel("antennas n")
    ax.set_ylabel("normalized min trace")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
