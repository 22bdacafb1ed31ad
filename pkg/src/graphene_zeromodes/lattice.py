"""Honeycomb tight-binding check of the zero modes.

Lattice units: C-C bond length a = 1, hopping t = 1, so the Dirac velocity
is 3/2 and a hexagon has area 3*sqrt(3)/2. A continuum profile is brought
into these units with ``FieldProfile.scaled``.

Peierls convention: the matrix element for hopping from site j to site i is
``-t * exp(-1j * int_{r_j}^{r_i} A.dl)``, the lattice form of the covariant
derivative -i grad + A.

Valley K is the Dirac point (4 pi / (3 sqrt 3), 0), where the Bloch
Hamiltonian expands to (3/2)(sigma_x q_x + sigma_y q_y) in the (A, B) basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from scipy.interpolate import RectBivariateSpline
from scipy.spatial import cKDTree

from .errors import CoverageError, SolverError
from .field import PHI0, FieldProfile, GaugePotential, residual_gauge

SQRT3 = math.sqrt(3.0)
A1 = np.array([SQRT3, 0.0])
A2 = np.array([SQRT3 / 2, 1.5])
DELTA_B = np.array([0.0, 1.0])
HEX_CENTER = np.array([SQRT3 / 2, 0.5])
PLAQUETTE_AREA = 3 * SQRT3 / 2
SITE_AREA = PLAQUETTE_AREA / 2
FERMI_VELOCITY = 1.5
DENSE_LIMIT = 4000

_GL3_X, _GL3_W = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True, eq=False)
class HoneycombPatch:
    """Finite honeycomb flake.

    ``sublattice`` is 0 for A and 1 for B. ``bonds[:, 0]`` is always the A end.
    """

    positions: np.ndarray
    sublattice: np.ndarray
    bonds: np.ndarray
    boundary: str
    size: tuple

    @property
    def n_sites(self) -> int:
        return len(self.positions)

    @property
    def signature(self) -> np.ndarray:
        return np.where(self.sublattice == 0, 1.0, -1.0)

    @property
    def area(self) -> float:
        return self.n_sites * SITE_AREA

    def degree(self) -> np.ndarray:
        return np.bincount(self.bonds.ravel(), minlength=self.n_sites)

    def bulk_mask(self, fraction: float = 0.7) -> np.ndarray:
        """Sites within ``fraction`` of the patch extent, measured from the center."""
        p = self.positions
        if self.boundary == "open-disk":
            return np.hypot(p[:, 0], p[:, 1]) <= fraction * self.size[0]
        lo, hi = p.min(0), p.max(0)
        c, half = (lo + hi) / 2, (hi - lo) / 2
        return np.all(np.abs(p - c) <= fraction * half, axis=1)

    def bounding_box(self):
        return self.positions.min(0), self.positions.max(0)


def _bonds(pos, sub):
    pairs = cKDTree(pos).query_pairs(1.0 + 1e-6, output_type="ndarray")
    pairs = pairs[np.argsort(pairs[:, 0] * len(pos) + pairs[:, 1], kind="stable")]
    swap = sub[pairs[:, 0]] == 1
    pairs[swap] = pairs[swap][:, ::-1]
    return pairs


def build_patch(shape: str, size) -> HoneycombPatch:
    """``shape='disk'`` with ``size=radius`` (sites within the radius of a
    hexagon center, dangling sites pruned) or ``shape='rectangle'`` with
    ``size=(n1, n2)`` two-site cells arranged in a brick wall.
    """
    if shape in ("disk", "open-disk"):
        radius = float(size[0] if np.ndim(size) else size)
        n = int(radius / 1.2) + 3
        m, k = np.meshgrid(np.arange(-2 * n, 2 * n + 1), np.arange(-2 * n, 2 * n + 1))
        cells = m.ravel()[:, None] * A1 + k.ravel()[:, None] * A2 - HEX_CENTER
        pos = np.vstack([cells, cells + DELTA_B])
        sub = np.repeat([0, 1], len(cells))
        keep = np.hypot(pos[:, 0], pos[:, 1]) <= radius
        pos, sub = pos[keep], sub[keep]
        while True:
            bonds = _bonds(pos, sub) if len(pos) > 1 else np.zeros((0, 2), int)
            deg = np.bincount(bonds.ravel(), minlength=len(pos))
            keep = deg >= 2
            if keep.all():
                break
            pos, sub = pos[keep], sub[keep]
        boundary, size = "open-disk", (radius,)
    elif shape in ("rectangle", "open-rectangle"):
        n1, n2 = (int(v) for v in size)
        if n1 < 1 or n2 < 1:
            raise ValueError("rectangle needs positive cell counts")
        m, k = np.meshgrid(np.arange(n1), np.arange(n2))
        m, k = m.ravel(), k.ravel()
        cells = m[:, None] * A1 + k[:, None] * A2 - (k // 2)[:, None] * A1
        pos = np.vstack([cells, cells + DELTA_B])
        sub = np.repeat([0, 1], len(cells))
        pos = pos - (pos.min(0) + pos.max(0)) / 2
        boundary, size = "open-rectangle", (n1, n2)
    else:
        raise ValueError(f"unknown patch shape {shape!r}")
    if len(pos) < 100:
        raise ValueError(f"patch has {len(pos)} sites; at least 100 are required")
    order = np.lexsort((pos[:, 0], np.round(pos[:, 1], 9)))
    pos, sub = pos[order], sub[order]
    bonds = _bonds(pos, sub)
    if np.any(sub[bonds[:, 0]] == sub[bonds[:, 1]]):
        raise AssertionError("honeycomb bond list is not bipartite")
    return HoneycombPatch(pos, sub, bonds, boundary, tuple(size))


# -- gauge line integrals ---------------------------------------------------


class _GridGauge:
    """Cubic-spline interpolation of a sampled gauge potential."""

    def __init__(self, A: GaugePotential, scale: float = 1.0):
        x = A.grid.x
        self.L = A.grid.L
        self.scale = scale
        # samples are [iy, ix]; spline wants f(x, y)
        self.ax = RectBivariateSpline(x, x, A.Ax.T, kx=3, ky=3)
        self.ay = RectBivariateSpline(x, x, A.Ay.T, kx=3, ky=3)

    def check(self, pos):
        reach = np.max(np.abs(pos)) * self.scale
        if reach > self.L:
            raise CoverageError(f"patch reaches {reach:g} but the gauge grid covers only {self.L:g}")

    def __call__(self, x, y):
        # lattice lengths are scale * grid lengths; A scales as 1/length
        s = self.scale
        return self.ax(x * s, y * s, grid=False) * s, self.ay(x * s, y * s, grid=False) * s


def _antidot_line(B0: float, R: float, r_from, r_to) -> np.ndarray:
    """Exact int A.dl of the antidot part of the closed-form gauge.

    Inside the hole it cancels the symmetric gauge; outside it is the pure
    gauge of a flux line, -(B0 R^2 / 2) dtheta. Segments are split where
    they cross the rim.
    """
    d = r_to - r_from
    a2 = np.einsum("ij,ij->i", d, d)
    b = 2 * np.einsum("ij,ij->i", r_from, d)
    c = np.einsum("ij,ij->i", r_from, r_from) - R * R
    disc = b * b - 4 * a2 * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(disc > 0, (-b - sq) / (2 * a2), 2.0)
        t2 = np.where(disc > 0, (-b + sq) / (2 * a2), 2.0)
    ts = np.column_stack([np.zeros(len(d)), np.clip(t1, 0, 1), np.clip(t2, 0, 1), np.ones(len(d))])
    total = np.zeros(len(d))
    for k in range(3):
        lo, hi = ts[:, k], ts[:, k + 1]
        p = r_from + lo[:, None] * d
        q = r_from + hi[:, None] * d
        mid = r_from + (0.5 * (lo + hi))[:, None] * d
        inside = np.einsum("ij,ij->i", mid, mid) < R * R
        cross = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
        dot = np.einsum("ij,ij->i", p, q)
        piece = np.where(inside, -0.5 * B0 * cross, -0.5 * B0 * R * R * np.arctan2(cross, dot))
        total += np.where(hi > lo, piece, 0.0)
    return total


def _bump_line(bumps, r_from, r_to) -> np.ndarray:
    """Composite 3-point Gauss line integral of the bump part of the gauge."""
    fake = FieldProfile("uniform-plus-bumps", 0.0, bumps=bumps)
    segments = max(1, math.ceil(5.0 / min(b.width for b in bumps)))
    d = (r_to - r_from) / segments
    total = np.zeros(len(d))
    for m in range(segments):
        start = r_from + m * d
        for xg, wg in zip(_GL3_X, _GL3_W):
            p = start + 0.5 * (xg + 1) * d
            ax, ay = residual_gauge(fake, p[:, 0], p[:, 1])
            total += 0.5 * wg * (ax * d[:, 0] + ay * d[:, 1])
    return total


def line_integral(gauge, r_from, r_to) -> np.ndarray:
    """int A.dl along straight segments from ``r_from`` to ``r_to``.

    ``gauge`` is a FieldProfile or a callable A(x, y) -> (Ax, Ay). For a
    profile the symmetric-gauge and antidot parts are integrated exactly and
    the bumps by composite 3-point Gauss with sub-segments no longer than a
    fifth of the narrowest width. A callable gets plain 3-point Gauss.
    """
    d = r_to - r_from
    if isinstance(gauge, FieldProfile):
        total = 0.5 * gauge.B0 * (r_from[:, 0] * r_to[:, 1] - r_from[:, 1] * r_to[:, 0])
        if gauge.kind == "antidot" and gauge.R > 0:
            total = total + _antidot_line(gauge.B0, gauge.R, r_from, r_to)
        if gauge.bumps:
            total = total + _bump_line(gauge.bumps, r_from, r_to)
        return total
    total = np.zeros(len(d))
    for xg, wg in zip(_GL3_X, _GL3_W):
        p = r_from + 0.5 * (xg + 1) * d
        ax, ay = gauge(p[:, 0], p[:, 1])
        total += 0.5 * wg * (ax * d[:, 0] + ay * d[:, 1])
    return total


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    matrix: sp.csr_matrix
    patch: HoneycombPatch
    valley: sp.csr_matrix
    gauge: object = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def chirality_defect(self) -> float:
        S = sp.diags(self.patch.signature)
        return float(abs(S @ self.matrix @ S + self.matrix).max())

    def hermiticity_defect(self) -> float:
        return float(abs(self.matrix - self.matrix.getH()).max())


def _gauge_callable(patch, gauge, grid_scale):
    if isinstance(gauge, FieldProfile) or gauge is None:
        return gauge if gauge is not None else FieldProfile("uniform", 0.0)
    if isinstance(gauge, GaugePotential):
        g = _GridGauge(gauge, grid_scale)
        g.check(patch.positions)
        return g
    if callable(gauge):
        return gauge
    raise TypeError("gauge must be a FieldProfile, GaugePotential or callable")


def _nnn_pairs(patch):
    pairs = cKDTree(patch.positions).query_pairs(SQRT3 + 1e-6, output_type="ndarray")
    d = patch.positions[pairs[:, 1]] - patch.positions[pairs[:, 0]]
    keep = np.hypot(d[:, 0], d[:, 1]) > 1.5
    pairs = pairs[keep]
    return pairs[np.argsort(pairs[:, 0] * patch.n_sites + pairs[:, 1], kind="stable")]


def valley_operator(patch: HoneycombPatch, gauge=None, grid_scale: float = 1.0) -> sp.csr_matrix:
    """Gauge-dressed next-nearest-neighbour valley operator.

    V = sum_ij i nu_ij e^{i theta_ij} |i><j| / (3 sqrt 3) with nu = +1 for
    NNN vectors at 0, 120 and 240 degrees. Bloch states at K give +1, at
    K' give -1, on either sublattice.
    """
    A = _gauge_callable(patch, gauge, grid_scale)
    pairs = _nnn_pairs(patch)
    i, j = pairs[:, 0], pairs[:, 1]
    p = patch.positions
    d = p[j] - p[i]
    k = np.round(np.arctan2(d[:, 1], d[:, 0]) / (np.pi / 3)).astype(int) % 6
    nu = np.where(k % 2 == 0, 1.0, -1.0)
    theta = -line_integral(A, p[j], p[i])
    vij = 1j * nu * np.exp(1j * theta) / (3 * SQRT3)
    n = patch.n_sites
    V = sp.coo_matrix((np.concatenate([vij, np.conj(vij)]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
    return V.tocsr()


def peierls_hamiltonian(patch: HoneycombPatch, gauge=None, t: float = 1.0, grid_scale: float = 1.0) -> SparseHamiltonian:
    """Nearest-neighbour hopping with Peierls phases.

    ``gauge`` is a FieldProfile in lattice units (closed-form gauge) or a
    sampled GaugePotential; lattice coordinate x maps to grid coordinate
    ``x * grid_scale``.
    """
    A = _gauge_callable(patch, gauge, grid_scale)
    p = patch.positions
    a_end, b_end = patch.bonds[:, 0], patch.bonds[:, 1]
    # element (A row, B column): hop B -> A
    theta = -line_integral(A, p[b_end], p[a_end])
    hab = -t * np.exp(1j * theta)
    n = patch.n_sites
    rows = np.concatenate([a_end, b_end])
    cols = np.concatenate([b_end, a_end])
    H = sp.coo_matrix((np.concatenate([hab, np.conj(hab)]), (rows, cols)), shape=(n, n)).tocsr()
    return SparseHamiltonian(H, patch, valley_operator(patch, gauge, grid_scale), gauge)


def hexagons(patch: HoneycombPatch):
    """Complete hexagonal plaquettes: (centers, site indices counterclockwise)."""
    A_sites = np.nonzero(patch.sublattice == 0)[0]
    p = patch.positions
    cand = np.vstack([p[A_sites] + HEX_CENTER, p[A_sites] + HEX_CENTER - A1, p[A_sites] + HEX_CENTER - A2])
    cand = np.unique(np.round(cand, 6), axis=0)
    tree = cKDTree(p)
    centers, loops = [], []
    for c in cand:
        idx = tree.query_ball_point(c, 1.0 + 1e-6)
        if len(idx) != 6:
            continue
        idx = np.array(idx)
        ang = np.arctan2(p[idx, 1] - c[1], p[idx, 0] - c[0])
        loops.append(idx[np.argsort(ang)])
        centers.append(c)
    return np.array(centers).reshape(-1, 2), np.array(loops, dtype=int).reshape(-1, 6)


def plaquette_fluxes(H: SparseHamiltonian):
    """Flux through each complete hexagon from the Peierls phases.

    Going counterclockwise, the enclosed flux is sum int A.dl, i.e. minus the
    sum of hopping phases theta_{next, current}.
    """
    centers, loops = hexagons(H.patch)
    M = H.matrix.tocsr()
    nxt = np.roll(loops, -1, axis=1)
    vals = np.asarray(M[nxt.ravel(), loops.ravel()]).reshape(loops.shape)
    theta = np.angle(-vals)
    flux = -theta.sum(axis=1)
    flux = (flux + np.pi) % (2 * np.pi) - np.pi
    return centers, flux


# -- spectra ----------------------------------------------------------------


def landau_gap(B: float) -> float:
    """First Landau level energy v_F sqrt(2 |B|) in lattice units."""
    return FERMI_VELOCITY * math.sqrt(2 * abs(B))


def patch_radius(patch: HoneycombPatch) -> float:
    if patch.boundary == "open-disk":
        return float(patch.size[0])
    lo, hi = patch.bounding_box()
    return float(np.min(hi - lo) / 2)


def default_window(B: float, patch: HoneycombPatch | None = None) -> float:
    """5% of the first Landau gap for B != 0.

    With no asymptotic field there is no gap; the window is then half the
    lowest confinement level v_F / R of the patch.
    """
    if B != 0:
        return 0.05 * landau_gap(B)
    if patch is None:
        raise ValueError("zero field needs a patch to set the window")
    return 0.5 * FERMI_VELOCITY / patch_radius(patch)


def lattice_scale(profile: FieldProfile, flux_cap: float = 0.05) -> float:
    """Bond length, in the profile's length unit, putting the peak flux per
    plaquette at ``flux_cap`` flux quanta."""
    if not 0 < flux_cap < 0.5:
        raise ValueError("flux_cap must lie in (0, 0.5)")
    peak = profile.max_abs_field()
    if peak == 0:
        raise ValueError("zero field sets no lattice scale")
    return math.sqrt(flux_cap * PHI0 / (peak * PLAQUETTE_AREA))


def flux_per_plaquette(profile: FieldProfile) -> float:
    """Peak flux per hexagon, in flux quanta, of a profile in lattice units."""
    return profile.max_abs_field() * PLAQUETTE_AREA / PHI0


def _normalize_phases(U):
    idx = np.argmax(np.abs(U), axis=0)
    ph = U[idx, np.arange(U.shape[1])]
    return U * (np.conj(ph) / np.abs(ph))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Eigenpairs of smallest |E|, sorted by |E| (ties: negative E first)."""

    hamiltonian: SparseHamiltonian
    energies: np.ndarray
    vectors: np.ndarray
    window: float
    solver: str
    all_energies: np.ndarray | None = None

    @property
    def in_window(self) -> np.ndarray:
        return np.abs(self.energies) < self.window

    @property
    def window_count(self) -> int:
        return int(np.count_nonzero(self.in_window))

    def symmetry_defect(self) -> float:
        """Max distance from each in-window E to the nearest -E."""
        E = self.energies[self.in_window]
        if len(E) == 0:
            return 0.0
        return float(np.max(np.min(np.abs(E[:, None] + E[None, :]), axis=1)))


def _order(E):
    return np.lexsort((E, np.round(np.abs(E), 12)))


def near_zero_spectrum(
    H: SparseHamiltonian,
    k: int = 40,
    window: float | None = None,
    dense: bool | None = None,
    tol: float = 1e-10,
    full_spectrum: bool = False,
) -> SpectrumResult:
    """Eigenpairs of smallest |E|.

    Dense diagonalization (an index window around the middle of the spectrum)
    is used up to DENSE_LIMIT sites and on request; otherwise shift-invert
    Lanczos around E = 0. Either way k grows until every state of the zero
    window is captured. ``full_spectrum`` also stores all eigenvalues (dense).
    """
    n = H.dimension
    if not 0 < k < n:
        raise ValueError(f"k must satisfy 0 < k < {n}")
    if window is None:
        raise ValueError("a zero window must be given (see default_window)")
    if dense is None:
        dense = n <= DENSE_LIMIT
    if dense:
        M = H.matrix.toarray()
        everything = np.linalg.eigvalsh(M) if full_spectrum else None
        half = k
        while True:
            lo, hi = max(0, n // 2 - half), min(n, n // 2 + half)
            E, U = sla.eigh(M, subset_by_index=[lo, hi - 1], driver="evr")
            o = _order(E)
            E, U = E[o], U[:, o]
            saturated = np.abs(E).max() < window
            if not saturated or (lo == 0 and hi == n):
                break
            half *= 2
        keep = max(k, int(np.count_nonzero(np.abs(E) < window)))
        keep = min(keep, len(E))
        return SpectrumResult(H, E[:keep], _normalize_phases(U[:, :keep]), window, "dense", all_energies=everything)
    M = H.matrix.tocsc()
    v0 = np.ones(n, dtype=complex) / math.sqrt(n)
    sigma = 1e-7 * window
    kk = k
    while True:
        try:
            E, U = spla.eigsh(M, k=kk, sigma=sigma, which="LM", v0=v0, tol=tol * 1e-2)
        except spla.ArpackNoConvergence as exc:
            raise SolverError("shift-invert Lanczos did not converge", residual=None) from exc
        res = np.linalg.norm(M @ U - U * E, axis=0)
        if np.any(res > 1e3 * tol * max(1.0, abs(E).max())):
            raise SolverError("eigenpair residuals above tolerance", residual=res)
        o = _order(E)
        E, U = E[o], U[:, o]
        if np.abs(E).max() >= window or kk >= n - 2:
            break
        kk = min(2 * kk, n - 2)
    return SpectrumResult(H, E, _normalize_phases(U), window, "sparse")


@dataclass(frozen=True, eq=False)
class PolarizationReport:
    """Zero-window states rotated to diagonalize the sublattice signature.

    Within each sublattice group the states are further rotated to diagonalize
    the bulk projector, so ``bulk_weight`` is basis independent. ``valley``
    is the expectation of the valley operator (+1 near K, -1 near K').
    """

    polarization: np.ndarray
    bulk_weight: np.ndarray
    valley: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return len(self.polarization)

    def counts(self, bulk_weight: float = 0.5) -> dict:
        bulk = self.bulk_weight >= bulk_weight
        onB = self.polarization < 0
        onA = self.polarization > 0
        K = self.valley > 0
        return {
            "N_A": int(np.count_nonzero(bulk & onA)),
            "N_B": int(np.count_nonzero(bulk & onB)),
            "N_A_K": int(np.count_nonzero(bulk & onA & K)),
            "N_B_K": int(np.count_nonzero(bulk & onB & K)),
            "N_A_Kp": int(np.count_nonzero(bulk & onA & ~K)),
            "N_B_Kp": int(np.count_nonzero(bulk & onB & ~K)),
        }


def _rotate(block_vectors, op_diag=None, op=None):
    if block_vectors.shape[1] == 0:
        return np.zeros(0), block_vectors
    if op_diag is not None:
        M = block_vectors.conj().T @ (op_diag[:, None] * block_vectors)
    else:
        M = block_vectors.conj().T @ (op @ block_vectors)
    w, Q = np.linalg.eigh((M + M.conj().T) / 2)
    return w, block_vectors @ Q


def sublattice_polarization(result: SpectrumResult, bulk_fraction: float = 0.7) -> PolarizationReport:
    patch = result.hamiltonian.patch
    Uw = result.vectors[:, result.in_window]
    if Uw.shape[1] == 0:
        return PolarizationReport(np.zeros(0), np.zeros(0), np.zeros(0), Uw)
    S = patch.signature
    s, Y = _rotate(Uw, op_diag=S)
    bulk = patch.bulk_mask(bulk_fraction).astype(float)
    V = result.hamiltonian.valley
    pols, weights, valleys, vecs = [], [], [], []
    for group in (s < -0.5, np.abs(s) <= 0.5, s > 0.5):
        w, Z = _rotate(Y[:, group], op_diag=bulk)
        if Z.shape[1] == 0:
            continue
        pols.append(np.real(np.einsum("ia,i,ia->a", Z.conj(), S, Z)))
        weights.append(w)
        valleys.append(np.real(np.einsum("ia,ia->a", Z.conj(), V @ Z)))
        vecs.append(Z)
    return PolarizationReport(
        np.concatenate(pols), np.concatenate(weights), np.concatenate(valleys), _normalize_phases(np.hstack(vecs))
    )


def state_polarization(vector, patch: HoneycombPatch) -> float:
    w = np.abs(vector) ** 2
    return float(np.sum(w * patch.signature) / np.sum(w))


def chiral_index(result: SpectrumResult, bulk_weight: float = 0.5, report: PolarizationReport | None = None) -> int:
    """Valley-K index N_B - N_A over bulk zero-window states.

    In the zero level each valley lives on one sublattice (K on B for
    positive field), so the unresolved N_B - N_A cancels between valleys;
    the K-valley count carries the flux.
    """
    rep = report if report is not None else sublattice_polarization(result)
    c = rep.counts(bulk_weight)
    return c["N_B_K"] - c["N_A_K"]


def valley_index_pair(rep: PolarizationReport, bulk_weight: float = 0.5):
    """(index in K, index in K'); the second is the negative of the first."""
    c = rep.counts(bulk_weight)
    return c["N_B_K"] - c["N_A_K"], c["N_B_Kp"] - c["N_A_Kp"]


@dataclass(frozen=True, eq=False)
class LevelStates:
    energies: np.ndarray
    polarization: np.ndarray
    bulk_weight: np.ndarray


def landau_level_states(H: SparseHamiltonian, B: float, level: int = 1, k: int = 30, bulk_weight: float = 0.8) -> LevelStates:
    """Bulk eigenstates nearest the continuum Landau energy sqrt(2 n |B|) v_F.

    Shift-invert Lanczos at that energy; states whose weight inside the bulk
    disk is below ``bulk_weight`` (edge states) are dropped. Edge states can
    crowd the target on large patches, so ``k`` doubles (up to 8x) until
    some bulk states survive.
    """
    if level < 1:
        raise ValueError("Landau level index must be at least 1")
    target = landau_gap(B) * math.sqrt(level)
    n = H.dimension
    v0 = np.ones(n, dtype=complex) / math.sqrt(n)
    bulk = H.patch.bulk_mask().astype(float)
    kk = min(k, n - 2)
    while True:
        E, U = spla.eigsh(H.matrix.tocsc(), k=kk, sigma=target, which="LM", v0=v0)
        o = np.argsort(np.abs(E - target), kind="stable")
        E, U = E[o], _normalize_phases(U[:, o])
        w = np.sum(bulk[:, None] * np.abs(U) ** 2, axis=0)
        keep = w >= bulk_weight
        if keep.any() or kk >= min(8 * k, n - 2):
            break
        kk = min(2 * kk, n - 2)
    P = np.array([state_polarization(U[:, i], H.patch) for i in np.flatnonzero(keep)])
    return LevelStates(E[keep], P.reshape(-1), w[keep])


@dataclass
class RobustnessRow:
    label: str
    index: int
    window_count: int
    tracked_max_abs_energy: float
    index_invariant: bool
    count_invariant: bool
    within_window: bool

    @property
    def passed(self) -> bool:
        return self.index_invariant and self.count_invariant and self.within_window

    def to_dict(self):
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def analyze(profile: FieldProfile, patch: HoneycombPatch, k: int, window: float, dense=None):
    H = peierls_hamiltonian(patch, profile)
    res = near_zero_spectrum(H, k=k, window=window, dense=dense)
    rep = sublattice_polarization(res)
    return res, rep


def robustness_sweep(base: FieldProfile, perturbations, patch: HoneycombPatch, k: int = 40, window: float | None = None, dense=None, expected_index_shift=None):
    """Recompute spectrum and index for ``base`` plus each bump set.

    Each perturbation is compared to the baseline: the index must shift by
    ``expected_index_shift[i]`` (default 0), the zero-window count must be
    unchanged when the expected shift is 0, and the baseline's number of
    zero-window states must still lie inside the window.
    """
    if window is None:
        window = default_window(base.B0, patch)
    res0, rep0 = analyze(base, patch, k, window, dense)
    idx0 = chiral_index(res0, report=rep0)
    n0 = res0.window_count
    shifts = list(expected_index_shift) if expected_index_shift is not None else [0] * len(perturbations)
    rows = []
    for i, bumps in enumerate(perturbations):
        prof = base.with_bumps(bumps)
        res, rep = analyze(prof, patch, k, window, dense)
        idx = chiral_index(res, report=rep)
        # the n0 states of smallest |E| are the ones tracked from the baseline
        tracked = float(np.max(np.abs(res.energies[:n0]))) if n0 else 0.0
        extra = shifts[i] * 2
        rows.append(
            RobustnessRow(
                label=f"perturbation-{i}",
                index=idx,
                window_count=res.window_count,
                tracked_max_abs_energy=tracked,
                index_invariant=(idx - idx0 == shifts[i]),
                count_invariant=(res.window_count - n0 == extra) if shifts[i] == 0 else True,
                within_window=tracked < window,
            )
        )
    return {"baseline_index": idx0, "baseline_window_count": n0, "window": window, "rows": rows}
