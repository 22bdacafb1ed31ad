"""End-to-end scenario runs.

Stages, in order: gauge (solve for lambda, build A, check curl A = B),
modes (analytic zero modes, residuals, norms, flux counting), spectrum
(tight-binding spectrum, polarization, chiral index) and sweep (robustness
under zero-net-flux perturbations). Each stage adds results and verdicts to
a RunReport. Every verdict records the tolerance it was checked against.

Wall-clock timings are kept apart from the numeric report so that two runs
of the same config write identical ``report.json`` bytes.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as zio
from .config import ScenarioConfig
from .errors import ConfigError, SolverError
from .field import (
    FieldProfile,
    Grid,
    eval_field,
    gauge_from_lambda,
    solve_lambda,
    total_flux,
    verify_curl,
)
from .lattice import (
    build_patch,
    chiral_index,
    default_window,
    flux_per_plaquette,
    lattice_scale,
    near_zero_spectrum,
    patch_radius,
    peierls_hamiltonian,
    robustness_sweep,
    sublattice_polarization,
)
from .modes import (
    K,
    build_mode,
    count_modes_compact_flux,
    count_modes_constant_asymptotics,
    dirac_residual,
    mode_certificates,
    norm_squared,
)
from .rng import perturbation_sets

STAGES = ("gauge", "modes", "spectrum", "sweep")
REPORT_FORMAT = 1

# residual bound C h^2 / l^3 for the analytic modes, and C h^2 B / l^2 for curl A
RESIDUAL_CONSTANT = 1.0
CURL_CONSTANT = 1.0
ORDER_RANGE = (1.8, 2.2)
MOMENT_RTOL = 1e-6
POLARIZATION_MIN = 0.99
SYMMETRY_TOL = {"dense": 1e-9, "sparse": 1e-8}


class StageError(Exception):
    """A stage raised; carries the stage name and the partial report."""

    def __init__(self, stage, cause, report):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.report = report


@dataclass
class RunReport:
    config: dict
    stages: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    failed_stage: str | None = None
    error: str | None = None

    def verdict(self, name, stage, value, tolerance, passed, rule):
        self.verdicts.append(
            {
                "name": name,
                "stage": stage,
                "value": _plain(value),
                "tolerance": _plain(tolerance),
                "rule": rule,
                "passed": bool(passed),
            }
        )

    @property
    def passed(self) -> bool:
        return self.failed_stage is None and all(v["passed"] for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": __version__,
            "config": self.config,
            "stages": _plain(self.stages),
            "verdicts": self.verdicts,
            "artifacts": sorted(self.artifacts),
            "passed": self.passed,
            "failed_stage": self.failed_stage,
            "error": self.error,
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj


def output_dir(config: ScenarioConfig, override=None) -> Path:
    d = override or config["output.dir"] or os.environ.get("ZEROMODE_OUT") or "zeromode-out"
    return Path(d)


@dataclass
class _Context:
    config: ScenarioConfig
    out: Path | None
    dense: bool | None
    profile: FieldProfile = None
    grid: Grid = None
    lam: object = None
    A: object = None
    lB: float = 1.0
    lattice: tuple = None


def _gamma(profile: FieldProfile) -> int:
    """Normalizable branch in valley K: gamma * B0 < 0, or opposite to the
    flux sign when B0 = 0."""
    s = profile.B0 if profile.B0 != 0 else sum(b.flux for b in profile.bumps)
    return -1 if s >= 0 else 1


def _stage_gauge(ctx: _Context, rep: RunReport):
    cfg, prof = ctx.config, ctx.profile
    N = cfg["grid.N"]
    ctx.grid = Grid(cfg["grid.L"] * ctx.lB, N)
    ctx.lam = solve_lambda(prof, ctx.grid)
    ctx.A = gauge_from_lambda(ctx.lam)
    h = ctx.grid.h
    # length scale of the field's variation
    scales = [ctx.lB] + [b.width for b in prof.bumps]
    ell = min(scales)
    bound = CURL_CONSTANT * h * h * prof.max_abs_field() / ell**2
    res = verify_curl(ctx.A, prof)
    out = {"grid": {"L": ctx.grid.L, "N": N, "h": h}, "curl_residual": res, "curl_bound": bound}
    rep.verdict("curl_residual", "gauge", res, bound, res <= bound, "max|curl A - B| <= C h^2 max|B| / l^2")

    if N // 2 >= 16:
        coarse = Grid(ctx.grid.L, (N - 1) // 2 + 1)
        Ac = gauge_from_lambda(solve_lambda(prof, coarse))
        # fixed band, wide enough that no fine or coarse stencil sees the rim jump
        band = 4 * math.sqrt(2) * coarse.h
        rc = verify_curl(Ac, prof, exclude=band)
        rf = verify_curl(ctx.A, prof, exclude=band)
        exact = rf < 1e-9 * max(1.0, prof.max_abs_field())
        order = None if exact else math.log(rc / rf) / math.log(coarse.h / h)
        out["curl_order"] = order
        ok = exact or ORDER_RANGE[0] <= order
        rep.verdict("curl_order", "gauge", order, ORDER_RANGE[0], ok, "observed order >= 1.8 (or exact)")

    if prof.axisymmetric:
        c, _, misfit = ctx.lam.ring_fit()
        expected = prof.localized_flux / (2 * math.pi)
        tol = 1e-6 * max(1.0, float(np.max(np.abs(ctx.lam.values))))
        out["far_field_log_coefficient"] = c
        out["far_field_expected"] = expected
        err = abs(c - expected)
        rep.verdict("far_field", "gauge", err, tol, err <= tol, "|c - localized flux / 2 pi| on the boundary ring")

    if ctx.out is not None:
        X, Y = ctx.grid.mesh()
        B = eval_field(prof, X, Y)
        for name, vals in (("lambda", ctx.lam.values), ("field", B), ("Ax", ctx.A.Ax), ("Ay", ctx.A.Ay)):
            zio.write_scalar_csv(ctx.out / f"{name}.csv", ctx.grid, vals)
            rep.artifacts.append(f"{name}.csv")
        zio.write_field_dat(ctx.out / "field.dat", ctx.grid, B, "B")
        zio.write_field_dat(ctx.out / "lambda.dat", ctx.grid, ctx.lam.values, "lambda")
        rep.artifacts += ["field.dat", "lambda.dat"]
    rep.stages["gauge"] = out


def _stage_modes(ctx: _Context, rep: RunReport):
    cfg, prof, grid = ctx.config, ctx.profile, ctx.grid
    gamma = _gamma(prof)
    h = grid.h
    coarse = None
    if grid.N // 2 >= 16:
        coarse = Grid(grid.L, (grid.N - 1) // 2 + 1)
        lam_c = solve_lambda(prof, coarse)
        A_c = gauge_from_lambda(lam_c)
    bound = RESIDUAL_CONSTANT * h * h / ctx.lB**3
    uniform = prof.kind == "uniform" and not prof.bumps
    rows = []
    for j in cfg["run.j"]:
        mode = build_mode(j, ctx.lam, gamma, K)
        r = dirac_residual(mode, ctx.A)
        row = {"j": j, "gamma": gamma, "valley": K, "residual": r, "bound": bound, "normalizable": mode.normalizable}
        rep.verdict(f"residual_j{j}", "modes", r, bound, r <= bound, "||H psi|| / ||psi|| <= C h^2 / l^3")
        if coarse is not None:
            rc = dirac_residual(build_mode(j, lam_c, gamma, K), A_c)
            order = math.log(rc / r) / math.log(coarse.h / h)
            row["order"] = order
            ok = ORDER_RANGE[0] <= order <= ORDER_RANGE[1]
            rep.verdict(f"residual_order_j{j}", "modes", order, list(ORDER_RANGE), ok, "observed order in range")
        if uniform:
            norm = norm_squared(mode, grid.L)
            b = abs(prof.B0)
            oracle = 2 * math.pi * 2**j * math.factorial(j) / b ** (j + 1)
            rel = abs(norm - oracle) / oracle
            row.update(norm=norm, norm_oracle=oracle, norm_relative_error=rel)
            rep.verdict(f"norm_j{j}", "modes", rel, MOMENT_RTOL, rel <= MOMENT_RTOL, "relative error against the Gaussian moment")
        rows.append(row)
        if ctx.out is not None and j == cfg["run.j"][0]:
            zio.write_spinor_csv(ctx.out / f"mode_j{j}.csv", mode)
            zio.write_density_dat(ctx.out / f"mode_j{j}.dat", mode)
            rep.artifacts += [f"mode_j{j}.csv", f"mode_j{j}.dat"]
    out = {"modes": rows}
    radius = cfg["run.flux_radius"] or grid.L
    flux = total_flux(prof, radius)
    out["flux"] = flux.to_dict()
    if prof.B0 != 0:
        jmax = max(cfg["run.j"])
        certs = mode_certificates(prof.B0, jmax)
        out["certificates"] = certs
        out["count_constant_asymptotics"] = count_modes_constant_asymptotics(prof.B0, jmax)
        ok = all(c["certified"] for c in certs)
        rep.verdict("certificates", "modes", len(certs), 1e-10, ok, "norm(2R) / norm(R) - 1 below tolerance for every j")
    else:
        out["count_compact_flux"] = count_modes_compact_flux(flux)
    rep.stages["modes"] = out


def _lattice(ctx: _Context):
    cfg, prof = ctx.config, ctx.profile
    a = cfg["lattice.scale"] or lattice_scale(prof, cfg["lattice.flux_cap"])
    size = cfg["lattice.size"]
    patch = build_patch(cfg["lattice.shape"], size[0] if cfg["lattice.shape"] == "disk" else size)
    return a, prof.scaled(a), patch


def _stage_spectrum(ctx: _Context, rep: RunReport):
    cfg = ctx.config
    a, lat, patch = _lattice(ctx)
    ctx.lattice = (a, lat, patch)
    H = peierls_hamiltonian(patch, lat)
    window = cfg["run.window"] or default_window(lat.B0, patch)
    res = near_zero_spectrum(H, k=min(cfg["run.k"], patch.n_sites - 2), window=window, dense=ctx.dense or cfg["run.dense"] or None)
    prep = sublattice_polarization(res)
    R = patch_radius(patch)
    out = {
        "scale": a,
        "sites": patch.n_sites,
        "flux_per_plaquette": flux_per_plaquette(lat),
        "window": window,
        "solver": res.solver,
        "window_count": res.window_count,
        "smallest_abs_energies": [abs(e) for e in res.energies[:10]],
    }
    chi = H.chirality_defect()
    rep.verdict("chirality", "spectrum", chi, 0.0, chi == 0.0, "S H S + H = 0 exactly")
    sym = res.symmetry_defect()
    tol = SYMMETRY_TOL[res.solver]
    rep.verdict("spectral_symmetry", "spectrum", sym, tol, sym <= tol, "every window E has a partner -E")

    pw = cfg["run.polarization_bulk_weight"]
    sel = prep.bulk_weight >= pw
    minP = float(np.min(np.abs(prep.polarization[sel]))) if sel.any() else None
    out["polarization"] = {"bulk_states": int(sel.sum()), "min_abs_P": minP, "bulk_weight_filter": pw}
    if sel.any():
        rep.verdict("polarization", "spectrum", minP, POLARIZATION_MIN, minP >= POLARIZATION_MIN, "bulk window states |P| >= 0.99")

    iw = cfg["run.index_bulk_weight"]
    idx = chiral_index(res, bulk_weight=iw, report=prep)
    counts = prep.counts(iw)
    out["counts"] = counts
    out["chiral_index"] = idx
    out["index_bulk_weight"] = iw
    reach = max([math.hypot(b.x, b.y) + 3 * b.width for b in lat.bumps] + [lat.antidot_radius])
    out["flux_inside_bulk"] = bool(reach <= 0.7 * R)
    if lat.B0 == 0:
        expected = count_modes_compact_flux(total_flux(lat, 0.95 * R))
        rep.verdict("index_flux", "spectrum", idx, expected, idx == expected, "chiral index equals the compact-flux count")
    else:
        # K-valley Landau orbitals centered inside the bulk disk
        bulk_q = total_flux(lat, 0.7 * R).quanta
        tol = max(1.0, 0.1 * abs(bulk_q))
        rep.verdict("index_flux", "spectrum", idx, tol, abs(idx - bulk_q) <= tol, "|index - bulk flux / phi0| <= max(1, 10%)")
        out["bulk_flux_quanta"] = bulk_q
    if ctx.out is not None:
        zio.write_spectrum_csv(ctx.out / "spectrum.csv", res, prep)
        zio.write_ladder_dat(ctx.out / "ladder.dat", res.energies)
        rep.artifacts += ["spectrum.csv", "ladder.dat"]
    rep.stages["spectrum"] = out


def _stage_sweep(ctx: _Context, rep: RunReport):
    cfg = ctx.config
    n = cfg["sweep.sets"]
    if n == 0:
        rep.stages["sweep"] = {"sets": 0}
        return
    a, lat, patch = ctx.lattice
    sets = perturbation_sets(
        cfg["sweep.seed"],
        n,
        pairs=cfg["sweep.pairs"],
        radius=cfg["sweep.radius"],
        amplitude_range=cfg["sweep.amplitude_range"],
        width_range=cfg["sweep.width_range"],
        separation=cfg["sweep.separation"],
    )
    lat_sets = [FieldProfile("uniform-plus-bumps", 0.0, bumps=s).scaled(a).bumps for s in sets]
    window = rep.stages["spectrum"]["window"]
    k = min(cfg["run.k"], patch.n_sites - 2)
    sw = robustness_sweep(lat, lat_sets, patch, k=k, window=window, dense=ctx.dense or cfg["run.dense"] or None)
    rows = [r.to_dict() for r in sw["rows"]]
    rep.stages["sweep"] = {
        "sets": n,
        "baseline_index": sw["baseline_index"],
        "baseline_window_count": sw["baseline_window_count"],
        "rows": rows,
        "perturbations": [[list(b) for b in s] for s in sets],
    }
    for r in rows:
        rep.verdict(f"robustness_{r['label']}", "sweep", r["tracked_max_abs_energy"], window, r["passed"], "index and window count invariant, tracked |E| < W")


_RUNNERS = {"gauge": _stage_gauge, "modes": _stage_modes, "spectrum": _stage_spectrum, "sweep": _stage_sweep}


def run_pipeline(config: ScenarioConfig, out_dir=None, until: str = "sweep", dense: bool | None = None, write: bool = True) -> RunReport:
    """Run the stages up to and including ``until``.

    Artifacts and ``report.json`` go to ``out_dir`` (or the config's output
    directory, or $ZEROMODE_OUT) when ``write`` is set. A failing stage is
    recorded in the report and re-raised as StageError.
    """
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    out = output_dir(config, out_dir) if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    rep = RunReport(config.echo())
    try:
        prof = config.profile()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ctx = _Context(config, out, dense, profile=prof, lB=config.magnetic_length())
    for stage in STAGES[: STAGES.index(until) + 1]:
        t0 = time.perf_counter()
        try:
            _RUNNERS[stage](ctx, rep)
        except Exception as exc:
            rep.failed_stage = stage
            rep.error = f"{type(exc).__name__}: {exc}"
            rep.timings[stage] = time.perf_counter() - t0
            _finish(rep, out)
            raise StageError(stage, exc, rep) from exc
        rep.timings[stage] = time.perf_counter() - t0
    _finish(rep, out)
    return rep


def _finish(rep: RunReport, out):
    if out is None:
        return
    zio.write_report(out / "report.json", rep.to_dict())
    zio.write_report(out / "timings.json", {k: round(v, 6) for k, v in rep.timings.items()})


def exit_code(rep: RunReport | None, error: Exception | None = None) -> int:
    if error is not None:
        cause = error.cause if isinstance(error, StageError) else error
        if isinstance(cause, ConfigError):
            return 2
        if isinstance(cause, SolverError):
            return 3
        if isinstance(cause, ValueError):
            return 2
        return 3
    return 0 if rep.passed else 1
