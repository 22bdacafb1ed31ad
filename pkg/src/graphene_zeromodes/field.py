"""Magnetic field profiles, the gauge scalar and vector potentials, flux.

Natural units throughout: v_F = hbar = e = 1, so the flux quantum is 2*pi
and the magnetic length of a field B0 is 1/sqrt(|B0|).

The field is written through a scalar potential lambda with
A = (-d_y lambda, d_x lambda), hence B = laplacian(lambda). Away from localized
features lambda grows like B0 r^2 / 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import integrate, special

from .errors import DimensionError, SolverError

PHI0 = 2 * np.pi
KINDS = ("uniform", "antidot", "uniform-plus-bumps")


class Bump(NamedTuple):
    """Gaussian field inhomogeneity amplitude * exp(-|r - c|^2 / (2 width^2))."""

    x: float
    y: float
    amplitude: float
    width: float

    @property
    def flux(self) -> float:
        return 2 * np.pi * self.amplitude * self.width**2


@dataclass(frozen=True)
class FieldProfile:
    """Closed-form field B(x, y) tending to ``B0`` far from the origin.

    ``antidot`` removes the field inside r < R; bumps may be added to any
    kind (``uniform-plus-bumps`` is the conventional name for that case).
    """

    kind: str = "uniform"
    B0: float = 0.0
    R: float = 0.0
    bumps: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.R < 0:
            raise ValueError("antidot radius R must be nonnegative")
        bumps = tuple(Bump(*map(float, b)) for b in self.bumps)
        for b in bumps:
            if not b.width > 0:
                raise ValueError(f"bump width must be positive, got {b.width}")
        object.__setattr__(self, "bumps", bumps)
        object.__setattr__(self, "B0", float(self.B0))
        object.__setattr__(self, "R", float(self.R))

    def __call__(self, x, y):
        return eval_field(self, x, y)

    @property
    def axisymmetric(self) -> bool:
        return all(b.x == 0 and b.y == 0 for b in self.bumps)

    @property
    def antidot_radius(self) -> float:
        return self.R if self.kind == "antidot" else 0.0

    @property
    def magnetic_length(self) -> float:
        return 1 / math.sqrt(abs(self.B0)) if self.B0 else math.inf

    @property
    def localized_flux(self) -> float:
        """Flux of the part of B that differs from B0 (bumps and antidot hole)."""
        hole = -self.B0 * np.pi * self.antidot_radius**2
        return hole + sum(b.flux for b in self.bumps)

    def max_abs_field(self) -> float:
        """Upper bound on |B| over the plane."""
        return abs(self.B0) + sum(abs(b.amplitude) for b in self.bumps)

    def extent(self) -> float:
        """Radius beyond which B differs from B0 only by Gaussian tails."""
        r = self.antidot_radius
        for b in self.bumps:
            r = max(r, math.hypot(b.x, b.y))
        return r

    def with_bumps(self, extra) -> "FieldProfile":
        kind = "uniform-plus-bumps" if self.kind == "uniform" else self.kind
        return replace(self, kind=kind, bumps=self.bumps + tuple(extra))

    def scaled(self, a: float) -> "FieldProfile":
        """Same physical field expressed with ``a`` as the unit of length."""
        return replace(
            self,
            B0=self.B0 * a * a,
            R=self.R / a,
            bumps=tuple(Bump(b.x / a, b.y / a, b.amplitude * a * a, b.width / a) for b in self.bumps),
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "B0": self.B0,
            "R": self.R,
            "bumps": [list(b) for b in self.bumps],
            "seed": self.seed,
        }


def eval_field(profile: FieldProfile, x, y):
    """B(x, y); zero strictly inside an antidot, B0 on and outside its rim."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    B = np.full(np.broadcast(x, y).shape, profile.B0)
    if profile.kind == "antidot":
        B = np.where(x * x + y * y < profile.R**2, 0.0, B)
    for b in profile.bumps:
        B = B + b.amplitude * np.exp(-((x - b.x) ** 2 + (y - b.y) ** 2) / (2 * b.width**2))
    return B[()] if B.ndim == 0 else B


# -- closed forms -----------------------------------------------------------


def _ein(u):
    """Entire exponential integral Ein(u) = int_0^u (1 - e^-t)/t dt."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u < 2.0
    us = u[small]
    term = us.copy()
    acc = us.copy()
    for k in range(2, 40):
        term = -term * us * (k - 1) / (k * k)
        acc += term
    out[small] = acc
    ul = u[~small]
    out[~small] = special.exp1(ul) + np.log(ul) + np.euler_gamma
    return out


def analytic_lambda(profile: FieldProfile, x, y):
    """Closed-form lambda with lambda(0, 0) = 0 for axisymmetric profiles."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    lam = profile.B0 * r2 / 4
    if profile.kind == "antidot" and profile.R > 0:
        R2 = profile.R**2
        outer = -profile.B0 * R2 / 4 - profile.B0 * R2 / 4 * np.log(np.maximum(r2, R2) / R2)
        lam = np.where(r2 < R2, 0.0, lam + outer)
    for b in profile.bumps:
        u = ((x - b.x) ** 2 + (y - b.y) ** 2) / (2 * b.width**2)
        lam = lam + b.amplitude * b.width**2 / 2 * _ein(u)
    return lam


def symmetric_gauge(B0: float, x, y):
    """A = (-B0 y / 2, B0 x / 2)."""
    return -0.5 * B0 * np.asarray(y, float), 0.5 * B0 * np.asarray(x, float)


def residual_gauge(profile: FieldProfile, x, y):
    """Closed-form A minus the symmetric gauge of the asymptotic field."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    Ax = np.zeros(np.broadcast(x, y).shape)
    Ay = np.zeros_like(Ax)
    if profile.kind == "antidot" and profile.R > 0:
        r2 = x * x + y * y
        R2 = profile.R**2
        # grad of the hole potential: -B0/2 * r_vec inside, -B0 R^2/2 * r_vec/r^2 outside
        g = np.where(r2 < R2, -profile.B0 / 2, -profile.B0 * R2 / 2 / np.maximum(r2, R2))
        Ax += -g * y
        Ay += g * x
    for b in profile.bumps:
        dx = x - b.x
        dy = y - b.y
        rho2 = dx * dx + dy * dy
        u = rho2 / (2 * b.width**2)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(u > 1e-12, -np.expm1(-u) / np.maximum(u, 1e-300), 1.0 - u / 2)
        g = g * b.amplitude / 2
        Ax += -g * dy
        Ay += g * dx
    return Ax, Ay


def analytic_gauge(profile: FieldProfile, x, y):
    Ax, Ay = symmetric_gauge(profile.B0, x, y)
    rx, ry = residual_gauge(profile, x, y)
    return Ax + rx, Ay + ry


# -- grids ------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Square uniform grid on [-L, L]^2 with N points per side.

    Sample arrays are indexed ``[iy, ix]`` so that row-major order runs
    over x fastest.
    """

    L: float
    N: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("grid half-width L must be positive")
        if int(self.N) != self.N or self.N < 16:
            raise ValueError(f"grid.N below minimum 16 (got {self.N})")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2 * self.L / (self.N - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.N)

    def mesh(self):
        return np.meshgrid(self.x, self.x)

    def radius(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.hypot(X, Y)

    def interior(self, margin: int = 1) -> np.ndarray:
        mask = np.zeros((self.N, self.N), dtype=bool)
        mask[margin:-margin, margin:-margin] = True
        return mask


def _same_grid(a: Grid, b: Grid):
    if a != b:
        raise DimensionError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class ScalarPotential:
    grid: Grid
    values: np.ndarray
    B0: float
    profile: FieldProfile | None = None

    @property
    def asymptotic_coefficient(self) -> float:
        return self.B0 / 4

    def ring_fit(self):
        """Fit lambda - B0 r^2/4 = c ln r + const on the outermost grid ring.

        Returns ``(c, const, max_abs_misfit)``.
        """
        ring = ~self.grid.interior(1)
        r = self.grid.radius()[ring]
        dev = self.values[ring] - self.B0 * r**2 / 4
        M = np.column_stack([np.log(r), np.ones_like(r)])
        coef, *_ = np.linalg.lstsq(M, dev, rcond=None)
        return float(coef[0]), float(coef[1]), float(np.max(np.abs(M @ coef - dev)))

    def asymptotic_deviation(self):
        """Max |lambda - B0 r^2/4| on the outermost and the next-inner ring."""
        r = self.grid.radius()
        dev = np.abs(self.values - self.B0 * r**2 / 4)
        outer = ~self.grid.interior(1)
        inner = self.grid.interior(1) & ~self.grid.interior(2)
        return float(dev[outer].max()), float(dev[inner].max())


@dataclass(frozen=True, eq=False)
class GaugePotential:
    grid: Grid
    Ax: np.ndarray
    Ay: np.ndarray


@dataclass(frozen=True)
class FluxReport:
    """Total flux through a disk, split as Phi = (n + epsilon) * phi0.

    ``integer_flux`` marks the tie case Phi = m * phi0, where n = m - 1 and
    epsilon is stored as the largest double below 1.
    """

    radius: float
    flux: float
    quanta: float
    n: int
    epsilon: float
    integer_flux: bool = False
    B0: float = 0.0

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "flux": self.flux,
            "quanta": self.quanta,
            "n": self.n,
            "epsilon": self.epsilon,
            "integer_flux": self.integer_flux,
            "B0": self.B0,
        }


def split_flux_quanta(quanta: float, tie_tol: float = 1e-9):
    """Return ``(n, epsilon, tie)`` with quanta = n + epsilon.

    n is the largest integer strictly below ``quanta``.
    """
    m = round(quanta)
    if abs(quanta - m) <= tie_tol * max(1.0, abs(quanta)):
        return int(m) - 1, float(np.nextafter(1.0, 0.0)), True
    n = math.floor(quanta)
    return int(n), float(quanta - n), False


def flux_report_from_quanta(quanta: float, radius: float = math.inf, B0: float = 0.0) -> FluxReport:
    n, eps, tie = split_flux_quanta(quanta)
    return FluxReport(radius, quanta * PHI0, quanta, n, eps, tie, B0)


def total_flux(profile: FieldProfile, radius: float) -> FluxReport:
    """Flux of B through the disk r <= radius by radial-angular quadrature."""
    if not radius > 0:
        raise ValueError(f"flux radius must be positive, got {radius}")
    widths = [b.width for b in profile.bumps]
    m = 256
    if widths:
        m = max(m, int(16 * np.pi * radius / min(widths)))
    theta = np.linspace(0, 2 * np.pi, m, endpoint=False)
    c, s = np.cos(theta), np.sin(theta)

    def ring(r):
        # periodic trapezoid: spectrally accurate for smooth angular profiles
        return r * 2 * np.pi * np.mean(eval_field(profile, r * c, r * s))

    pts = [profile.antidot_radius] + [math.hypot(b.x, b.y) for b in profile.bumps]
    pts = sorted({p for p in pts if 0 < p < radius})
    edges = [0.0] + pts + [radius]
    phi = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(ring, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=400)
        phi += val
    n, eps, tie = split_flux_quanta(phi / PHI0)
    return FluxReport(float(radius), float(phi), float(phi / PHI0), n, eps, tie, profile.B0)


# -- the Poisson solve ------------------------------------------------------


def _gauss_flux_1d(u, h, w):
    """Hat-weighted average over [-h, h] of exp(-(u + s)^2 / (2 w^2))."""
    k = w * np.sqrt(np.pi / 2)
    sq = w * np.sqrt(2)

    def i0(a, b):
        return k * (special.erf(b / sq) - special.erf(a / sq))

    def i1(a, b):
        return w * w * (np.exp(-a * a / (2 * w * w)) - np.exp(-b * b / (2 * w * w)))

    right = (h + u) * i0(u, u + h) - i1(u, u + h)
    left = (h - u) * i0(u - h, u) + i1(u - h, u)
    return (right + left) / (h * h)


def _hat_cdf(t, h):
    t = np.clip(t, -h, h)
    return np.where(t <= 0, (t + h) ** 2 / (2 * h * h), 1 - (h - t) ** 2 / (2 * h * h))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def _disk_hat_average(x, y, h, R):
    """Hat-weighted average of the indicator of r < R around node (x, y)."""
    breaks = {-h, 0.0, h}
    for X in (R, -R):
        breaks.add(X - x)
    for v in (y - h, y, y + h):
        if abs(v) < R:
            c = math.sqrt(R * R - v * v)
            breaks.update((c - x, -c - x))
    b = np.array(sorted(t for t in breaks if -h <= t <= h))
    total = 0.0
    for lo, hi in zip(b[:-1], b[1:]):
        if hi - lo < 1e-15 * h:
            continue
        s = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
        wts = 0.5 * (hi - lo) * _GL_W
        X = x + s
        c = np.sqrt(np.maximum(R * R - X * X, 0.0))
        q = np.where(np.abs(X) < R, np.maximum(_hat_cdf(c - y, h) - _hat_cdf(-c - y, h), 0.0), 0.0)
        total += np.sum(wts * (1 - np.abs(s) / h) / h * q)
    return total


def hat_averaged_field(profile: FieldProfile, grid: Grid) -> np.ndarray:
    """B convolved with the tensor hat function of half-width h at each node.

    This is the source the compact nine-point Laplacian needs for fourth-order
    accuracy; it stays well defined across the antidot rim.
    """
    h = grid.h
    x = grid.x
    avg = np.full((grid.N, grid.N), profile.B0)
    for b in profile.bumps:
        gx = _gauss_flux_1d(x - b.x, h, b.width)
        gy = _gauss_flux_1d(x - b.y, h, b.width)
        avg += b.amplitude * np.outer(gy, gx)
    if profile.kind == "antidot" and profile.R > 0:
        R = profile.R
        X, Y = grid.mesh()
        ax, ay = np.abs(X), np.abs(Y)
        near2 = np.maximum(ax - h, 0) ** 2 + np.maximum(ay - h, 0) ** 2
        far2 = (ax + h) ** 2 + (ay + h) ** 2
        hole = np.where(far2 < R * R, 1.0, 0.0)
        cut = (near2 < R * R) & (far2 >= R * R)
        for iy, ix in zip(*np.nonzero(cut)):
            hole[iy, ix] = _disk_hat_average(X[iy, ix], Y[iy, ix], h, R)
        avg -= profile.B0 * hole
    return avg


def _mehrstellen(n: int, h: float) -> sp.csr_matrix:
    d2 = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n)) / (h * h)
    eye = sp.identity(n)
    return (sp.kron(eye, d2) + sp.kron(d2, eye) + (h * h / 6) * sp.kron(d2, d2)).tocsr()


def solve_lambda(
    profile: FieldProfile,
    grid: Grid,
    method: str = "direct",
    tol: float = 1e-11,
    maxiter: int | None = None,
) -> ScalarPotential:
    """Solve laplacian(lambda) = B on the grid.

    Fourth-order compact nine-point scheme with a hat-averaged source and
    Dirichlet data from the closed-form far field (B0 r^2/4 plus the
    logarithms of the localized flux). For profiles that are not
    axisymmetric the additive constant is fixed by zero mean of
    lambda - B0 r^2/4 on the boundary ring.
    """
    if profile.extent() >= grid.L / 2:
        raise ValueError(
            f"profile features reach r={profile.extent():g}; the grid needs L > {2 * profile.extent():g}"
        )
    N, h = grid.N, grid.h
    X, Y = grid.mesh()
    src = hat_averaged_field(profile, grid)
    bnd = np.zeros((N, N))
    ring = ~grid.interior(1)
    bnd[ring] = analytic_lambda(profile, X[ring], Y[ring])

    full = _mehrstellen(N, h)
    inner = grid.interior(1).ravel()
    A = full[inner][:, inner]
    rhs = src.ravel()[inner] - (full @ bnd.ravel())[inner]

    if method == "direct":
        sol = spla.splu((-A).tocsc()).solve(-rhs)
    elif method == "cg":
        sol, info = spla.cg(-A, -rhs, rtol=tol, maxiter=maxiter)
        if info != 0:
            res = np.linalg.norm(A @ sol - rhs) / np.linalg.norm(rhs)
            raise SolverError(f"CG did not converge within {info} iterations", residual=res)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    res = np.linalg.norm(A @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not res <= max(100 * tol, 1e-9):
        raise SolverError(f"linear solve residual {res:.3e} above tolerance", residual=res)

    values = bnd.copy()
    values.ravel()[inner] = sol
    if not profile.axisymmetric:
        r2 = X[ring] ** 2 + Y[ring] ** 2
        values -= np.mean(values[ring] - profile.B0 * r2 / 4)
    return ScalarPotential(grid, values, profile.B0, profile)


def gauge_from_lambda(lam: ScalarPotential) -> GaugePotential:
    """A = (-d_y lambda, d_x lambda) by central differences, one-sided at the edge."""
    h = lam.grid.h
    dy, dx = np.gradient(lam.values, h, edge_order=2)
    return GaugePotential(lam.grid, -dy, dx)


def discontinuity_mask(profile: FieldProfile, grid: Grid, reach: float) -> np.ndarray:
    """Nodes within ``reach`` of a jump in B (the antidot rim)."""
    if profile.kind != "antidot" or profile.R <= 0:
        return np.zeros((grid.N, grid.N), dtype=bool)
    return np.abs(grid.radius() - profile.R) <= reach


def curl(A: GaugePotential) -> np.ndarray:
    h = A.grid.h
    _, dAy_dx = np.gradient(A.Ay, h, edge_order=2)
    dAx_dy, _ = np.gradient(A.Ax, h, edge_order=2)
    return dAy_dx - dAx_dy


def verify_curl(A: GaugePotential, profile, margin: int = 2, exclude: float | None = None) -> float:
    """Max |curl A - B| over interior nodes.

    ``profile`` is a FieldProfile or an array of B samples on A's grid.
    Nodes within ``exclude`` of a jump of B (an antidot rim) are skipped,
    since no finite difference converges there pointwise. The default
    excludes only stencils that straddle the jump (2*sqrt(2) h); pass a
    fixed width to compare residuals across resolutions.
    """
    grid = A.grid
    mask = grid.interior(margin)
    if isinstance(profile, FieldProfile):
        B = eval_field(profile, *grid.mesh())
        reach = 2 * math.sqrt(2) * grid.h if exclude is None else max(exclude, 2 * math.sqrt(2) * grid.h)
        mask &= ~discontinuity_mask(profile, grid, reach)
    else:
        B = np.asarray(profile)
        if B.shape != A.Ax.shape:
            raise DimensionError(f"field samples {B.shape} do not match gauge grid {A.Ax.shape}")
    return float(np.max(np.abs(curl(A) - B)[mask]))
