"""CSV and gnuplot writers.

Numbers are written with ``%.17g`` so files round-trip exactly and two runs
on the same input produce identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .field import Grid

FMT = "%.17g"


def _num(v) -> str:
    return FMT % v


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def grid_rows(grid: Grid, *columns):
    """Rows (x, y, c1, c2, ...) in row-major order: y outer, x inner."""
    X, Y = grid.mesh()
    cols = [X.ravel(), Y.ravel()] + [np.asarray(c).ravel() for c in columns]
    for vals in zip(*cols):
        yield [_num(v) for v in vals]


def scalar_csv(grid: Grid, values) -> str:
    return _csv_text(["x", "y", "value"], grid_rows(grid, values))


def write_scalar_csv(path, grid: Grid, values) -> Path:
    return _write(path, scalar_csv(grid, values))


def spinor_csv(psi) -> str:
    return _csv_text(
        ["x", "y", "re_psiA", "im_psiA", "re_psiB", "im_psiB"],
        grid_rows(psi.grid, psi.psiA.real, psi.psiA.imag, psi.psiB.real, psi.psiB.imag),
    )


def write_spinor_csv(path, psi) -> Path:
    return _write(path, spinor_csv(psi))


def spectrum_rows(result, report=None):
    """One row per stored eigenpair, sorted by |E|.

    Zero-window rows carry the polarization and bulk weight of the rotated
    zero-window basis (ordered by polarization, then bulk weight), since
    individual eigenvectors of a degenerate level are not meaningful.
    """
    from .lattice import state_polarization, sublattice_polarization

    patch = result.hamiltonian.patch
    rep = report if report is not None else sublattice_polarization(result)
    bulk = patch.bulk_mask().astype(float)
    order = np.lexsort((-rep.bulk_weight, rep.polarization))
    win = iter(order)
    rows = []
    for i, E in enumerate(result.energies):
        inside = abs(E) < result.window
        if inside:
            m = next(win)
            pol, bw = rep.polarization[m], rep.bulk_weight[m]
        else:
            v = result.vectors[:, i]
            pol = state_polarization(v, patch)
            bw = float(np.sum(bulk * np.abs(v) ** 2) / np.sum(np.abs(v) ** 2))
        rows.append([str(i), _num(E), _num(abs(E)), "1" if inside else "0", _num(pol), _num(bw)])
    return rows


def spectrum_csv(result, report=None) -> str:
    header = ["index", "energy", "abs_energy", "in_window", "polarization", "bulk_weight"]
    return _csv_text(header, spectrum_rows(result, report))


def write_spectrum_csv(path, result, report=None) -> Path:
    return _write(path, spectrum_csv(result, report))


def dat_text(columns, header: str | None = None) -> str:
    """Whitespace-separated columns for gnuplot; a blank line separates
    scanlines when the first column is given as a 2D array."""
    cols = [np.asarray(c) for c in columns]
    lines = [f"# {header}"] if header else []
    if cols[0].ndim == 2:
        for r in range(cols[0].shape[0]):
            for c in range(cols[0].shape[1]):
                lines.append(" ".join(_num(col[r, c]) for col in cols))
            lines.append("")
    else:
        for vals in zip(*cols):
            lines.append(" ".join(_num(v) for v in vals))
    return "\n".join(lines) + "\n"


def write_field_dat(path, grid: Grid, values, name="value") -> Path:
    X, Y = grid.mesh()
    return _write(path, dat_text([X, Y, values], f"x y {name}"))


def write_density_dat(path, psi) -> Path:
    X, Y = psi.grid.mesh()
    dens = np.abs(psi.psiA) ** 2 + np.abs(psi.psiB) ** 2
    return _write(path, dat_text([X, Y, dens], "x y |psi|^2"))


def write_ladder_dat(path, energies) -> Path:
    E = np.sort(np.asarray(energies))
    return _write(path, dat_text([np.arange(len(E)), E], "level energy"))


def dumps_report(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_report(path, obj) -> Path:
    return _write(path, dumps_report(obj))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
