"""Flat-file reports: delimited grids/tables and the accompanying figures.

Figures render with the Agg backend straight to files: a 3D bar chart of the
heralded probability grid and an overlay of the axis amplitudes against the
fitted two-branch model.
"""

import csv
import io as _io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .fit import FitResult, aligned_axes, model_coeffs  # noqa: E402
from .search import PublishedRow, ScenarioRow, TABLE1_TOLERANCES, row_passes  # noqa: E402
from .simulator import HeraldedGrid  # noqa: E402

__all__ = [
    "pnm_csv",
    "search_rows_csv",
    "table1_csv",
    "table1_text",
    "save_pnm_figure",
    "save_axis_fit_figure",
]

_ROW_FIELDS = ("label", "s", "beta0", "gamma0", "t1", "t2", "pr", "pu_percent", "alpha", "f", "er")


def pnm_csv(grid: HeraldedGrid) -> str:
    """Rectangular CSV of P(n, m): rows n (v photons), columns m (w photons)."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    k = grid.trunc_out
    writer.writerow(["n\\m"] + [str(m) for m in range(k + 1)])
    for n in range(k + 1):
        writer.writerow([str(n)] + [repr(float(x)) for x in grid.p[n]])
    return buf.getvalue()


def _row_values(row: ScenarioRow) -> list[str]:
    return [
        row.label,
        repr(row.s),
        repr(row.beta0),
        repr(row.gamma0),
        repr(row.t1),
        repr(row.t2),
        repr(row.pr),
        repr(100.0 * row.pu),
        repr(row.alpha),
        repr(row.f),
        repr(row.er),
    ]


def search_rows_csv(rows: list[ScenarioRow]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_ROW_FIELDS)
    for row in rows:
        writer.writerow(_row_values(row))
    return buf.getvalue()


def table1_csv(pairs: list[tuple[PublishedRow, ScenarioRow]]) -> str:
    """Recomputed vs reference columns with absolute deviations and pass flags."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        list(_ROW_FIELDS)
        + ["ref_pr", "ref_pu_percent", "ref_alpha", "ref_f", "ref_er",
           "dev_pr", "dev_pu_percent", "dev_alpha", "dev_f", "er_ratio", "pass"]
    )
    for pub, row in pairs:
        flags = row_passes(pub, row)
        writer.writerow(
            _row_values(row)
            + [repr(pub.pr), repr(pub.pu_pct), repr(pub.alpha), repr(pub.f), repr(pub.er),
               repr(abs(row.pr - pub.pr)), repr(abs(100 * row.pu - pub.pu_pct)),
               repr(abs(row.alpha - pub.alpha)), repr(abs(row.f - pub.f)),
               repr(row.er / pub.er), "PASS" if all(flags.values()) else "FAIL"]
        )
    return buf.getvalue()


def table1_text(pairs, show_alt=False, alt_fits=None) -> str:
    """Human-readable comparison table, one reference row per line pair."""
    tol = TABLE1_TOLERANCES
    lines = [
        f"{'row':6} {'quantity':10} {'computed':>12} {'reference':>12} {'deviation':>11} {'tol':>9} verdict"
    ]
    for pub, row in pairs:
        flags = row_passes(pub, row)
        entries = [
            ("Pr", row.pr, pub.pr, abs(row.pr - pub.pr), tol["pr"], flags["pr"]),
            ("Pu %", 100 * row.pu, pub.pu_pct, abs(100 * row.pu - pub.pu_pct), tol["pu_pct"], flags["pu"]),
            ("alpha", row.alpha, pub.alpha, abs(row.alpha - pub.alpha), tol["alpha"], flags["alpha"]),
            ("f", row.f, pub.f, abs(row.f - pub.f), tol["f"], flags["f"]),
            ("Er", row.er, pub.er, row.er / pub.er, tol["er_factor"], flags["er"]),
        ]
        for name, comp, ref, dev, tl, ok in entries:
            devlabel = "x%.3f" % dev if name == "Er" else "%11.4g" % dev
            lines.append(
                f"{pub.label:6} {name:10} {comp:12.6g} {ref:12.6g} {devlabel:>11} {tl:9.3g} "
                + ("PASS" if ok else "FAIL")
            )
        if pub.er_as_printed is not None:
            lines.append(
                f"{pub.label:6} {'':10} (reference Er corrected from a misprinted "
                f"{pub.er_as_printed:g}; prose and recomputation agree on {pub.er:g})"
            )
        if show_alt and alt_fits is not None and pub.label in alt_fits:
            alt = alt_fits[pub.label]
            lines.append(
                f"{pub.label:6} {'alt fit':10} convention={alt.convention} "
                f"alpha={alt.alpha:.4f} f={alt.f:.4f} Er={alt.er:.3e}"
            )
    verdict = all(all(row_passes(p, r).values()) for p, r in pairs)
    lines.append("overall: " + ("PASS" if verdict else "FAIL"))
    return "\n".join(lines) + "\n"


def save_pnm_figure(grid: HeraldedGrid, path: str, title: str = "") -> None:
    """3D bar chart of the heralded probability grid."""
    k = grid.trunc_out
    fig = plt.figure(figsize=(7.0, 5.4))
    ax = fig.add_subplot(projection="3d")
    n, m = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    heights = grid.p.ravel()
    ax.bar3d(
        n.ravel() - 0.35, m.ravel() - 0.35, np.zeros_like(heights),
        0.7, 0.7, heights, color="#4878cf", edgecolor="black", linewidth=0.3, shade=True,
    )
    ax.set_xlabel("photons in v  (n)")
    ax.set_ylabel("photons in w  (m)")
    ax.set_zlabel("P(n, m)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_axis_fit_figure(grid: HeraldedGrid, fit: FitResult, path: str) -> None:
    """Axis amplitudes as bars with the fitted two-branch model as joined dots."""
    n_max = fit.n_max_used
    cv, cw, _ = aligned_axes(grid, n_max)
    x, y = model_coeffs(fit.alpha, n_max, fit.convention)
    ns = np.arange(1, n_max + 1)
    fig, (ax_v, ax_w) = plt.subplots(1, 2, figsize=(9.0, 3.6), sharey=True)
    ax_v.bar(ns, cv.real, width=0.6, color="#b0c4de", edgecolor="black", label="C(1, n, 0)")
    ax_v.plot(ns, -fit.f * x, "o-", color="#c0392b", label=f"-f co(-a, n), a={fit.alpha:.3f}")
    ax_v.set_xlabel("n (photons in v)")
    ax_v.legend(fontsize=8)
    ax_w.bar(ns, cw.real, width=0.6, color="#b0c4de", edgecolor="black", label="C(1, 0, n)")
    ax_w.plot(ns, fit.f * y, "o-", color="#c0392b", label=f"f co(a, n), a={fit.alpha:.3f}")
    ax_w.set_xlabel("n (photons in w)")
    ax_w.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
