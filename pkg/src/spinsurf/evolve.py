"""Split-step spectral time integration of the DSII flow and residual checks for
the linear spinor problems psi_t = A psi / phi_t = Avee phi.

Strang splitting on a doubly periodic grid:
  * linear half step: exact Fourier phase exp(i (ky^2 - kx^2) dt / 2) for
    U_t = i (U_zz + U_zbzb) = (i/2)(U_xx - U_yy);
  * nonlinear step: pointwise phase exp(2 i Re V dt) with Re V recomputed
    spectrally from the constraint (frozen over the step).
Both substeps are unitary, so the discrete squared L2 norm is conserved to
rounding by construction.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsii import re_v_from_u
from .grid import (ComplexField, Grid2D, SchemeError, integrate2d,
                   save_complexfield_csv, spectral_wavenumbers,
                   wirtinger_derivative)
from .dirac import SpinorField


class BlowupAbort(RuntimeError):
    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


@dataclass
class EvolverState:
    U: ComplexField
    t: float
    dt: float
    n_steps: int = 0
    history: list = field(default_factory=list)   # (t, ||U||^2) samples


def grid_norm_sq(U: ComplexField) -> float:
    return integrate2d(U.abs2()).real


class DsiiEvolver:
    """Caches the Fourier multipliers for a fixed grid and dt."""

    def __init__(self, grid: Grid2D, dt: float, cfl_kappa: float | None = None):
        if not grid.periodic:
            raise SchemeError("DSII evolver needs a doubly periodic grid")
        if dt <= 0:
            raise ValueError("dt must be positive")
        h2 = min(grid.hx, grid.hy) ** 2
        if cfl_kappa is not None and dt > cfl_kappa * h2:
            raise ValueError(f"dt {dt:g} violates dt <= {cfl_kappa:g} h^2 = {cfl_kappa * h2:g}")
        self.grid = grid
        self.dt = dt
        kx, ky = spectral_wavenumbers(grid)
        self.half_phase = np.exp(1j * (ky**2 - kx**2) * dt / 4.0)

    def _linear_half(self, vals: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(self.half_phase * np.fft.fft2(vals))

    def step(self, state: EvolverState) -> EvolverState:
        # non-finite intermediates are tolerated here; the guard below aborts
        with np.errstate(all="ignore"):
            vals = self._linear_half(state.U.values)
            rev = re_v_from_u(ComplexField(self.grid, vals))
            vals = np.exp(2j * self.dt * rev) * vals
            vals = self._linear_half(vals)
        if not np.all(np.isfinite(vals)):
            raise BlowupAbort(f"non-finite field at t={state.t + self.dt:g}", state)
        return EvolverState(ComplexField(self.grid, vals), state.t + self.dt,
                            self.dt, state.n_steps + 1, state.history)


def dsii_step(state: EvolverState, evolver: DsiiEvolver | None = None) -> EvolverState:
    """Advance one Strang step; records the norm in the state history."""
    ev = evolver or DsiiEvolver(state.U.grid, state.dt)
    new = ev.step(state)
    new.history.append((new.t, grid_norm_sq(new.U)))
    return new


@dataclass
class Trajectory:
    times: list
    norms: list
    snapshots: list          # (t, ComplexField) pairs when requested
    aborted: bool = False
    abort_reason: str = ""


def evolve(U0: ComplexField, t_end: float, dt: float, t0: float = 0.0,
           snapshot_every: int = 0, callback=None) -> Trajectory:
    """Repeated Strang stepping with norm monitoring."""
    ev = DsiiEvolver(U0.grid, dt)
    state = EvolverState(U0, t0, dt)
    times = [t0]
    norms = [grid_norm_sq(U0)]
    snaps = [(t0, U0)] if snapshot_every else []
    n_total = int(round((t_end - t0) / dt))
    try:
        for k in range(n_total):
            state = ev.step(state)
            times.append(state.t)
            norms.append(grid_norm_sq(state.U))
            if snapshot_every and (k + 1) % snapshot_every == 0:
                snaps.append((state.t, state.U))
            if callback is not None:
                callback(state)
    except BlowupAbort as exc:
        warnings.warn(str(exc))
        return Trajectory(times, norms, snaps, aborted=True, abort_reason=str(exc))
    if snapshot_every and snaps[-1][0] != state.t:
        snaps.append((state.t, state.U))
    return Trajectory(times, norms, snaps)


def write_trajectory(traj: Trajectory, outdir) -> dict:
    """Snapshot CSVs plus a manifest JSON (times, norms, filenames)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, (t, fld) in enumerate(traj.snapshots):
        name = f"snapshot_{i:04d}.csv"
        save_complexfield_csv(fld, outdir / name)
        files.append({"t": t, "file": name})
    norm_csv = outdir / "norms.csv"
    with open(norm_csv, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "norm_sq"])
        for t, n in zip(traj.times, traj.norms):
            wr.writerow([f"{t:.17g}", f"{n:.17g}"])
    manifest = {
        "times": traj.times,
        "norms": traj.norms,
        "snapshots": files,
        "aborted": traj.aborted,
        "abort_reason": traj.abort_reason,
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest


# ---------------------------------------------------------------------------
# linear-problem residuals


def _apply_A(psi: SpinorField, U: ComplexField, V: ComplexField,
             scheme: str, vee: bool) -> SpinorField:
    """A = i [[-d^2 - V, Ub db - Ub_zb],[U d - U_z, db^2 + Vb]];
    Avee = -i with U <-> Ub swapped in the off-diagonal entries."""
    d = lambda f: wirtinger_derivative(f, "z", scheme)
    db = lambda f: wirtinger_derivative(f, "zbar", scheme)
    p1, p2 = psi.psi1, psi.psi2
    Ub = U.conj()
    Vb = V.conj()
    if not vee:
        r1 = -d(d(p1)) - V * p1 + Ub * db(p2) - db(Ub) * p2
        r2 = U * d(p1) - d(U) * p1 + db(db(p2)) + Vb * p2
        return SpinorField(1j * r1, 1j * r2)
    r1 = -d(d(p1)) - V * p1 + U * db(p2) - db(U) * p2
    r2 = Ub * d(p1) - d(Ub) * p1 + db(db(p2)) + Vb * p2
    return SpinorField(-1j * r1, -1j * r2)


def spinor_evolution_residual(psi_stencil, U: ComplexField, V: ComplexField,
                              dt: float, which: str = "A",
                              scheme: str = "central2", interior: int = 2) -> float:
    """max |psi_t - A psi| (or Avee) on a centred 3-slice stencil."""
    if which not in ("A", "Avee"):
        raise ValueError("which must be 'A' or 'Avee'")
    if len(psi_stencil) != 3:
        raise ValueError("need slices (t-dt, t, t+dt)")
    pm, p0, pp = psi_stencil
    Ap = _apply_A(p0, U, V, scheme, vee=(which == "Avee"))
    r1 = (pp.psi1.values - pm.psi1.values) / (2 * dt) - Ap.psi1.values
    r2 = (pp.psi2.values - pm.psi2.values) / (2 * dt) - Ap.psi2.values
    r = np.maximum(np.abs(r1), np.abs(r2))
    if interior:
        r = r[interior:-interior, interior:-interior]
    return float(np.max(r))
