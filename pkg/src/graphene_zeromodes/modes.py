"""Zero-energy spinors of the Dirac-Weyl operator built from the gauge scalar.

Conventions
-----------
* ``z = i x + y`` (the relabeling of the usual x + i y used by the
  construction; it changes no modulus or count).
* Valley K (tau = +1) has H = sigma_x D_1 + sigma_y D_2 and valley K'
  (tau = -1) has H = sigma_x D_1 - sigma_y D_2, with D_j = -i d_j + A_j.
* A mode of pseudospin gamma (+1: A component, -1: B component) in valley
  tau is ``f * exp(gamma * tau * lambda)``. The polynomial is ``z**j`` when
  gamma * tau = -1 and ``conj(z)**j`` when gamma * tau = +1; these are the
  choices the annihilation condition allows. Thus f_BK = f_AK' = z^j and
  f_AK = f_BK' = conj(z)^j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DimensionError, RegimeError
from .field import GaugePotential, Grid, ScalarPotential, _same_grid

K = +1
KPRIME = -1
VALLEYS = (K, KPRIME)
_LOG_MAX = 700.0


def _check_sign(value, name):
    if value not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {value!r}")


@dataclass(frozen=True)
class ZeroMode:
    """Analytic description of one basis mode."""

    j: int
    gamma: int
    valley: int = K

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 0:
            raise ValueError(f"mode degree j must be a nonnegative integer, got {self.j}")
        _check_sign(self.gamma, "gamma")
        _check_sign(self.valley, "valley")

    @property
    def component(self) -> str:
        return "A" if self.gamma == 1 else "B"

    @property
    def exponent_sign(self) -> int:
        return self.gamma * self.valley

    @property
    def conjugate_polynomial(self) -> bool:
        return self.exponent_sign == 1


@dataclass(frozen=True, eq=False)
class SpinorField:
    grid: Grid
    psiA: np.ndarray
    psiB: np.ndarray
    valley: int = K
    mode: ZeroMode | None = None
    normalizable: bool | None = None

    def __post_init__(self):
        for c in (self.psiA, self.psiB):
            if c.shape != (self.grid.N, self.grid.N):
                raise DimensionError(f"spinor samples {c.shape} do not match {self.grid}")
            if not np.all(np.isfinite(c)):
                raise ValueError("spinor samples must be finite")

    def scaled(self, factor) -> "SpinorField":
        """Pointwise product with ``factor`` (array or scalar); drops mode metadata."""
        return SpinorField(self.grid, self.psiA * factor, self.psiB * factor, self.valley)


def build_mode(j: int, lam: ScalarPotential, gamma: int, valley: int = K) -> SpinorField:
    """Sample z^j e^{gamma tau lambda} (or its conjugate-polynomial partner).

    With z = ix + y, the polynomial is z^j when gamma*tau = -1 and conj(z)^j
    when gamma*tau = +1; that is the choice annihilated by the Dirac
    operator in each valley. gamma = +1 fills sublattice A, -1 fills B.

    The non-normalizable branch is built as well and flagged; it raises if
    the growing exponential leaves double range on this grid.
    """
    mode = ZeroMode(j, gamma, valley)
    X, Y = lam.grid.mesh()
    z = 1j * X + Y
    s = mode.exponent_sign
    with np.errstate(divide="ignore"):
        logmod = j * np.log(np.abs(z)) if j else np.zeros_like(X)
    logamp = logmod + s * lam.values
    if np.max(logamp) > _LOG_MAX:
        raise OverflowError(
            f"mode amplitude reaches exp({np.max(logamp):.0f}) on this grid; shrink L"
        )
    phase = j * np.angle(z) * (-1 if mode.conjugate_polynomial else 1)
    psi = np.exp(logamp) * np.exp(1j * phase)
    zero = np.zeros_like(psi)
    flag = None
    if lam.B0 != 0:
        flag = normalizable(gamma, lam.B0, valley)
    if gamma == 1:
        return SpinorField(lam.grid, psi, zero, valley, mode, flag)
    return SpinorField(lam.grid, zero, psi, valley, mode, flag)


def _covariant(psi, A: GaugePotential, axis: str):
    h = A.grid.h
    dy, dx = np.gradient(psi, h, edge_order=2)
    if axis == "x":
        return -1j * dx + A.Ax * psi
    return -1j * dy + A.Ay * psi


def apply_dirac(spinor: SpinorField, A: GaugePotential):
    """(H psi)_A, (H psi)_B for the spinor's valley, by central differences."""
    _same_grid(spinor.grid, A.grid)
    tau = spinor.valley
    d1b, d2b = _covariant(spinor.psiB, A, "x"), _covariant(spinor.psiB, A, "y")
    d1a, d2a = _covariant(spinor.psiA, A, "x"), _covariant(spinor.psiA, A, "y")
    return d1b - 1j * tau * d2b, d1a + 1j * tau * d2a


def dirac_residual(mode: SpinorField, A: GaugePotential, margin: int = 2) -> float:
    """||H psi|| / ||psi|| over interior nodes."""
    hA, hB = apply_dirac(mode, A)
    m = mode.grid.interior(margin)
    num = np.sum(np.abs(hA[m]) ** 2 + np.abs(hB[m]) ** 2)
    den = np.sum(np.abs(mode.psiA[m]) ** 2 + np.abs(mode.psiB[m]) ** 2)
    return float(math.sqrt(num / den))


def _disk_weights(grid: Grid, radius: float) -> np.ndarray:
    if radius > grid.L * (1 + 1e-12):
        raise ValueError(f"radius {radius} exceeds grid half-width {grid.L}")
    w = np.ones(grid.N)
    w[0] = w[-1] = 0.5
    W = np.outer(w, w) * grid.h**2
    return np.where(grid.radius() <= radius, W, 0.0)


def norm_squared(mode: SpinorField, radius: float) -> float:
    """Trapezoid quadrature of |psi_A|^2 + |psi_B|^2 over r <= radius."""
    W = _disk_weights(mode.grid, radius)
    return float(np.sum(W * (np.abs(mode.psiA) ** 2 + np.abs(mode.psiB) ** 2)))


def normalizable(gamma: int, B0: float, valley: int = K) -> bool:
    """Square integrability of the gamma branch for asymptotic field B0."""
    _check_sign(gamma, "gamma")
    _check_sign(valley, "valley")
    if B0 == 0:
        raise RegimeError(
            "B0 = 0: the sign rule needs a nonzero asymptotic field; "
            "use count_modes_compact_flux for decaying fields"
        )
    return gamma * valley * B0 < 0


def radial_moment(j: int, B0: float, radius: float) -> float:
    """int_{r<radius} r^{2j} exp(-|B0| r^2 / 2) dA by adaptive quadrature."""
    b = abs(B0)

    def f(r):
        if r == 0.0:
            return 0.0
        return 2 * np.pi * math.exp((2 * j + 1) * math.log(r) - b * r * r / 2)

    peak = math.sqrt((2 * j + 1) / b)
    pts = [p for p in (peak,) if p < radius]
    val, _ = integrate.quad(f, 0.0, radius, points=pts or None, epsabs=0, epsrel=1e-13, limit=400)
    return val


def mode_certificates(B0: float, j_max: int, ratio_tol: float = 1e-10) -> list[dict]:
    """Ratio-test certificates for the normalizable branch j = 0..j_max.

    For each j the norm over radius R and 2R is computed, with R well past
    the peak of r^{2j+1} e^{-|B0| r^2/2}; the mode is certified when the
    two agree to ``ratio_tol``.
    """
    if B0 == 0:
        raise RegimeError("B0 = 0 is the decaying-field regime; certificates need B0 != 0")
    if j_max < 0:
        raise ValueError("j_max must be nonnegative")
    lB = 1 / math.sqrt(abs(B0))
    gamma = -1 if B0 > 0 else 1
    out = []
    for j in range(j_max + 1):
        R = 2 * math.sqrt(2 * j + 1) * lB + 6 * lB
        n1 = radial_moment(j, B0, R)
        n2 = radial_moment(j, B0, 2 * R)
        ratio = n2 / n1
        out.append(
            {
                "j": j,
                "gamma": gamma,
                "radius": R,
                "norm": n2,
                "ratio": ratio,
                "certified": bool(abs(ratio - 1) < ratio_tol),
            }
        )
    return out


def count_modes_constant_asymptotics(B0: float, j_max: int) -> int:
    """Number of certified square-integrable modes j = 0..j_max.

    Every degree passes, so the count is j_max + 1 and grows without bound
    with j_max.
    """
    certs = mode_certificates(B0, j_max)
    return sum(c["certified"] for c in certs)


def count_modes_compact_flux(flux) -> int:
    """Per-valley zero-mode count for a field that decays to zero.

    Returns n of Phi = (n + epsilon) phi0, signed by the flux direction
    (negative counts sit on the other sublattice). Zero for |Phi| < phi0.
    """
    from .field import split_flux_quanta

    if flux.B0 != 0:
        raise RegimeError(
            f"count_modes_compact_flux needs a decaying field (B0 = 0), got B0 = {flux.B0}"
        )
    n, _, _ = split_flux_quanta(abs(flux.quanta))
    return int(math.copysign(max(n, 0), flux.quanta))


# -- valley pair states -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class ValleyPairState:
    """Equal-weight superposition over two (valley, sublattice) slots.

    ``fields`` optionally maps each slot to its sampled component.
    """

    sign: int
    slots: tuple
    weights: tuple = (1 / math.sqrt(2), 1 / math.sqrt(2))
    fields: dict = field(default_factory=dict)
    grid: Grid | None = None

    def amplitude(self, valley: int, sublattice: str):
        for slot, w in zip(self.slots, self.weights):
            if slot == (valley, sublattice):
                return w, self.fields.get(slot)
        return None


def valley_pair_state(B0_sign: int, lam: ScalarPotential | None = None, j: int = 0) -> ValleyPairState:
    """(K,B) + (K',A) for B0 > 0, (K,A) + (K',B) for B0 < 0.

    With ``lam`` the slot components are sampled as degree-j modes; they
    carry e^{-|lambda|}-type decay only for the sign that matches B0.
    """
    _check_sign(B0_sign, "B0_sign")
    slots = ((K, "B"), (KPRIME, "A")) if B0_sign > 0 else ((K, "A"), (KPRIME, "B"))
    fields = {}
    if lam is not None:
        for valley, sub in slots:
            s = build_mode(j, lam, 1 if sub == "A" else -1, valley)
            fields[(valley, sub)] = s.psiA if sub == "A" else s.psiB
    return ValleyPairState(B0_sign, slots, fields=fields, grid=None if lam is None else lam.grid)


def _spinor_slots(s: SpinorField):
    return {(s.valley, "A"): s.psiA, (s.valley, "B"): s.psiB}, s.grid, (1.0, 1.0)


def overlap(s1, s2, radius: float | None = None) -> complex:
    """Sesquilinear <s1|s2> over the disk r <= radius (whole grid if None)."""
    if isinstance(s1, ValleyPairState) and isinstance(s2, ValleyPairState):
        shared = [slot for slot in s1.slots if slot in s2.slots]
        if not shared:
            return 0j
        if s1.grid is None or s2.grid is None:
            raise ValueError("valley pair states sharing a slot need sampled fields")
        _same_grid(s1.grid, s2.grid)
        W = _disk_weights(s1.grid, radius if radius is not None else s1.grid.L)
        total = 0j
        for slot in shared:
            w1, f1 = s1.amplitude(*slot)
            w2, f2 = s2.amplitude(*slot)
            total += w1 * w2 * np.sum(W * np.conj(f1) * f2)
        return complex(total)
    if isinstance(s1, SpinorField) and isinstance(s2, SpinorField):
        _same_grid(s1.grid, s2.grid)
        if s1.valley != s2.valley:
            return 0j
        W = _disk_weights(s1.grid, radius if radius is not None else s1.grid.L)
        return complex(np.sum(W * (np.conj(s1.psiA) * s2.psiA + np.conj(s1.psiB) * s2.psiB)))
    raise TypeError("overlap needs two SpinorFields or two ValleyPairStates")


def gram_matrix(modes, radius: float | None = None) -> np.ndarray:
    n = len(modes)
    G = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            G[a, b] = overlap(modes[a], modes[b], radius)
    return G


_SUB = {"A": 0, "B": 1}


def intervalley_matrix_element(U, s1: ValleyPairState, s2: ValleyPairState, radius: float) -> complex:
    """<s1|U|s2> for a local valley-diagonal 2x2 potential on the disk.

    ``U`` is a callable ``U(x, y)`` returning an array of shape (2, 2, ...)
    in the (A, B) basis, applied in both valleys, or a dict mapping valley
    to such a callable.
    """
    if s1.grid is None or s2.grid is None:
        raise ValueError("matrix elements need valley pair states with sampled fields")
    _same_grid(s1.grid, s2.grid)
    grid = s1.grid
    X, Y = grid.mesh()
    W = _disk_weights(grid, radius)
    per_valley = U if isinstance(U, dict) else {K: U, KPRIME: U}
    total = 0j
    for valley in VALLEYS:
        Uv = np.asarray(per_valley[valley](X, Y), dtype=complex)
        Uv = np.broadcast_to(Uv.reshape(2, 2, 1, 1), (2, 2) + X.shape) if Uv.ndim == 2 else Uv
        if np.max(np.abs(Uv - np.conj(np.swapaxes(Uv, 0, 1)))) > 1e-12:
            raise ValueError("disorder potential samples are not Hermitian")
        for sa in ("A", "B"):
            a1 = s1.amplitude(valley, sa)
            if a1 is None:
                continue
            for sb in ("A", "B"):
                a2 = s2.amplitude(valley, sb)
                if a2 is None:
                    continue
                w1, f1 = a1
                w2, f2 = a2
                total += w1 * w2 * np.sum(W * np.conj(f1) * Uv[_SUB[sa], _SUB[sb]] * f2)
    return complex(total)
