"""Delimited result files and the matplotlib figures rendered next to them."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def write_query_tsv(path, results) -> None:
    """Write ranked (image_id, score) rows as rank/image_id/score TSV."""
    lines = ["rank\timage_id\tscore"]
    for rank, (image_id, score) in enumerate(results, start=1):
        lines.append(f"{rank}\t{image_id}\t{score}")
    Path(path).write_text("\n".join(lines) + "\n")


def plot_query_scores(path, results, title="query results") -> None:
    """Horizontal bar chart of ranked scores, best at the top."""
    ids = [image_id for image_id, _ in results]
    scores = [score for _, score in results]
    height = max(2.0, 0.4 * len(results) + 1.2)
    fig, ax = plt.subplots(figsize=(7, height))
    pos = range(len(results))
    ax.barh(pos, scores, color="#31688e")
    ax.set_yticks(pos, ids)
    ax.invert_yaxis()
    ax.set_xlabel("similarity score")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_selftest_tsv(path, results) -> None:
    lines = ["check\tcases\tresult"]
    for r in results:
        lines.append(f"{r.name}\t{r.cases}\t{'PASS' if r.passed else 'FAIL'}")
    Path(path).write_text("\n".join(lines) + "\n")


def plot_selftest(path, results, title="selftest") -> None:
    """One bar per check, green for pass, red for fail."""
    names = [r.name for r in results]
    cases = [max(r.cases, 1) for r in results]
    colors = ["#2a9d48" if r.passed else "#c62828" for r in results]
    height = max(2.0, 0.4 * len(results) + 1.2)
    fig, ax = plt.subplots(figsize=(8, height))
    pos = range(len(results))
    ax.barh(pos, cases, color=colors)
    ax.set_yticks(pos, names)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("cases checked")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
