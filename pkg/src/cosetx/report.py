"""Figure rendering for evaluation artifacts.

Figures are drawn straight onto ``matplotlib.figure.Figure`` objects, never
through pyplot, so rendering works headless and never touches global backend
state.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from matplotlib.figure import Figure

from .errors import ValidationError

# Above this many classes, per-cell count labels become unreadable and are
# dropped; the heatmap itself scales fine.
_ANNOTATION_LIMIT = 12


def render_confusion_heatmap(
    classes: Sequence[str],
    matrix: np.ndarray,
    path: str,
    *,
    title: str = "Confusion matrix",
) -> None:
    matrix = np.asarray(matrix)
    if matrix.shape != (len(classes), len(classes)):
        raise ValidationError(
            f"matrix shape {matrix.shape} does not match {len(classes)} classes"
        )
    side = max(4.0, 0.45 * len(classes) + 2.0)
    fig = Figure(figsize=(side, side))
    ax = fig.subplots()
    image = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(classes)), labels=classes, rotation=90, fontsize=7)
    ax.set_yticks(range(len(classes)), labels=classes, fontsize=7)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(title)
    fig.colorbar(image, ax=ax, fraction=0.046)
    if len(classes) <= _ANNOTATION_LIMIT:
        threshold = matrix.max() / 2 if matrix.size else 0
        for i in range(len(classes)):
            for j in range(len(classes)):
                color = "white" if matrix[i, j] > threshold else "black"
                ax.text(j, i, str(int(matrix[i, j])), ha="center", va="center",
                        color=color, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def render_lambda_sweep(records: Sequence[Mapping], path: str) -> None:
    """Metric curves over the fusion weight, from lambda_sweep records."""
    if not records:
        raise ValidationError("cannot plot an empty sweep")
    lambdas = [r["lambda_weight"] for r in records]
    fig = Figure(figsize=(6.5, 4.5))
    ax = fig.subplots()
    for key, style in (
        ("accuracy", "-o"),
        ("micro_f1", "-s"),
        ("micro_precision", "--"),
        ("micro_recall", "--"),
    ):
        ax.plot(lambdas, [r[key] for r in records], style, label=key, markersize=4)
    ax.set_xlabel("fusion weight")
    ax.set_ylabel("metric value")
    ax.set_title("Fusion weight sweep")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
