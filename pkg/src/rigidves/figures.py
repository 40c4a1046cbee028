"""Figure rendering for the report paths.

Heatmaps of grid fields (real part, imaginary part, or magnitude) and
log-log convergence plots, written as PNG next to the CSV output. Headless
backend; nothing here touches a display.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grids import ComplexGridField, GridSpec  # noqa: E402


def _imshow(ax, spec: GridSpec, data: np.ndarray, mask: np.ndarray, title: str):
    shown = np.where(mask, data, np.nan)
    im = ax.imshow(
        shown.T,
        origin="lower",
        extent=(spec.x_min, spec.x_max, spec.y_min, spec.y_max),
        aspect="auto",
        cmap="viridis",
    )
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("x", fontsize=8)
    ax.set_ylabel("y", fontsize=8)
    return im


def save_field_figure(path, field: ComplexGridField, title: str) -> None:
    """Re/Im panels for genuinely complex fields, one panel otherwise."""
    vals = field.values
    complexy = bool(np.any(np.abs(np.imag(vals)[field.mask]) > 0))
    if complexy:
        fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
        for ax, data, part in zip(axes, (np.real(vals), np.imag(vals)),
                                  ("Re", "Im")):
            im = _imshow(ax, field.spec, data, field.mask, f"{part} {title}")
            fig.colorbar(im, ax=ax, shrink=0.85)
    else:
        fig, ax = plt.subplots(figsize=(4.4, 3.2))
        im = _imshow(ax, field.spec, np.real(vals), field.mask, title)
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_real_figure(path, spec: GridSpec, values: np.ndarray,
                     mask: np.ndarray, title: str) -> None:
    fig, ax = plt.subplots(figsize=(4.4, 3.2))
    im = _imshow(ax, spec, np.asarray(values, dtype=float), mask, title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_convergence_figure(path, series: dict, title: str) -> None:
    """Log-log residual-vs-h curves with an h^2 guide line.

    `series` maps a label to a list of (h, norm) pairs.
    """
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    all_h = []
    for label, pairs in sorted(series.items()):
        hs = [p[0] for p in pairs]
        ns = [p[1] for p in pairs]
        ax.loglog(hs, ns, "o-", label=label, linewidth=1.2, markersize=4)
        all_h += hs
    if all_h:
        h_ref = np.array([min(all_h), max(all_h)])
        anchor = max(n for pairs in series.values() for _, n in pairs)
        ax.loglog(h_ref, anchor * (h_ref / h_ref[-1]) ** 2, "k--",
                  linewidth=0.9, label="h^2")
    ax.set_xlabel("h")
    ax.set_ylabel("residual max-norm")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_chart_figures(out_dir, chart, prefix: str = "") -> list[str]:
    """p, q, |Phi|, jac_det heatmaps for a canonical chart."""
    out = Path(out_dir)
    written = []
    spec = chart.spec
    panels = [
        ("p", chart.p, "p = Re xi"),
        ("q", chart.q, "q = Im xi"),
        ("phi", np.abs(chart.phi.values), "|Phi|"),
        ("jacdet", chart.jac_det, "det d(p,q)/d(x,y)"),
    ]
    for stem, data, title in panels:
        path = out / f"{prefix}{stem}.png"
        save_real_figure(path, spec, data, chart.mask, title)
        written.append(str(path))
    return written
