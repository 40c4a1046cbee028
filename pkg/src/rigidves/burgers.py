"""Burgers transform: solve lambda = h(y - lambda*x) by Newton continuation.

The implicit equation is solved column by column outward from the y-axis
(where it degenerates to lambda = h(y)), each point's Newton seeded with
its inward neighbour, so the iteration stays on the correct branch of the
implicit equation. F(lambda) = lambda - h(y - lambda*x) has derivative
F'(lambda) = 1 + x*h'(y - lambda*x) = J, the characteristic Jacobian, so
the Newton step and the shock indicator come from the same evaluation.
Points where |J| < J_min (near-shock), Newton stalls, the seed evaluates
singularly, or Im(lambda) <= 0 at convergence are masked with a reason;
masking is monotone per row so the continuation never tunnels across a
shock. The produced field carries the analytic partials

    lambda_y = h'(w0)/J,    lambda_x = -lambda*lambda_y,

which make every downstream rigidity identity exact rather than FD-limited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EllipticityLostError,
    NearShockError,
    NewtonConvergenceError,
    NoInitialColumnError,
)
from .grids import ComplexGridField, GridSpec
from .seedlang import Seed
from .spectral import SpectralField

J_MIN = 1e-8

MASK_OK = 0
MASK_NEAR_SHOCK = 1
MASK_NO_CONVERGENCE = 2
MASK_ELLIPTICITY_LOST = 3
MASK_BEYOND_SHOCK = 4
MASK_SEED_ERROR = 5

MASK_REASONS = {
    MASK_OK: "ok",
    MASK_NEAR_SHOCK: "near_shock",
    MASK_NO_CONVERGENCE: "no_convergence",
    MASK_ELLIPTICITY_LOST: "ellipticity_lost",
    MASK_BEYOND_SHOCK: "beyond_masked_neighbor",
    MASK_SEED_ERROR: "seed_evaluation_error",
}


def burgers_solve_point(seed: Seed, x: float, y: float, initial: complex,
                        tol: float = 1e-12, max_iter: int = 50,
                        j_min: float = J_MIN):
    """Newton for a single point; returns (lambda, J, iterations).

    Raises NearShockError / NewtonConvergenceError / EllipticityLostError
    instead of returning questionable values.
    """
    lam = complex(initial)
    for it in range(1, max_iter + 1):
        w = y - lam * x
        h, hp = seed.h_dual(w)
        F = lam - complex(h)
        J = 1.0 + complex(hp) * x
        if abs(F) <= tol:
            if lam.imag <= 0:
                raise EllipticityLostError(
                    f"ellipticity lost: Im(lambda) = {lam.imag:.3g} at "
                    f"({x:.6g}, {y:.6g})"
                )
            return lam, J, it - 1
        if abs(J) < j_min:
            raise NearShockError(
                f"near-shock: |J| = {abs(J):.3g} at ({x:.6g}, {y:.6g})"
            )
        step = -F / J
        # damped update: halve while the residual grows
        scale = 1.0
        f_now = abs(F)
        for _ in range(20):
            cand = lam + scale * step
            h_c = complex(seed.h(y - cand * x))
            if abs(cand - h_c) < f_now or abs(cand - h_c) <= tol:
                lam = cand
                break
            scale *= 0.5
        else:
            raise NewtonConvergenceError(
                f"no convergence: damping stalled at ({x:.6g}, {y:.6g})"
            )
    # final acceptance check after max_iter loops
    w = y - lam * x
    h, hp = seed.h_dual(w)
    if abs(lam - complex(h)) <= tol:
        J = 1.0 + complex(hp) * x
        if lam.imag <= 0:
            raise EllipticityLostError(
                f"ellipticity lost at ({x:.6g}, {y:.6g})"
            )
        return lam, J, max_iter
    raise NewtonConvergenceError(
        f"no convergence after {max_iter} iterations at ({x:.6g}, {y:.6g})"
    )


@dataclass
class BurgersSolution:
    """lambda, J, w0 = y - lambda*x and bookkeeping over the Burgers domain."""

    field: SpectralField
    J: ComplexGridField
    w0: ComplexGridField
    seed: Seed
    newton_iters: np.ndarray
    mask_reasons: np.ndarray
    tol: float

    @property
    def spec(self) -> GridSpec:
        return self.field.spec

    @property
    def mask(self) -> np.ndarray:
        return self.field.lam.mask

    def self_certification(self) -> float:
        """max |lambda - h(y - lambda*x)| over the unmasked domain."""
        mask = self.mask
        if not mask.any():
            return 0.0
        lam = self.field.lam.values[mask]
        w = self.w0.values[mask]
        return float(np.max(np.abs(lam - self.seed.h(w))))

    def reason_counts(self) -> dict:
        return {
            MASK_REASONS[code]: int(np.sum(self.mask_reasons == code))
            for code in MASK_REASONS
        }

    def provider(self):
        """Lambda provider for Newton inversion of xi, seeded from the grid."""
        return _BurgersProvider(self)


class _BurgersProvider:
    def __init__(self, solution: BurgersSolution):
        self.solution = solution

    def _solve(self, x, y):
        sol = self.solution
        spec = sol.spec
        i = int(np.clip(round((x - spec.x_min) / spec.hx), 0, spec.nx - 1))
        j = int(np.clip(round((y - spec.y_min) / spec.hy), 0, spec.ny - 1))
        if sol.mask[i, j]:
            initial = complex(sol.field.lam.values[i, j])
        else:
            initial = complex(sol.seed.h(complex(y)))
        return burgers_solve_point(sol.seed, x, y, initial, sol.tol)

    def lam_at(self, x, y):
        lam, _, _ = self._solve(x, y)
        return lam

    def lam_partials_at(self, x, y):
        lam, J, _ = self._solve(x, y)
        _, hp = self.solution.seed.h_dual(y - lam * x)
        ly = complex(hp) / J
        return -lam * ly, ly


def _eval_h_safe(seed: Seed, w: np.ndarray) -> np.ndarray:
    """Vectorized h(w) with NaN at singular points instead of raising."""
    with np.errstate(all="ignore"):
        try:
            return np.asarray(seed.h(w), dtype=np.complex128) + np.zeros_like(w)
        except Exception:
            out = np.empty(w.shape, dtype=np.complex128)
            for k, wk in np.ndenumerate(w):
                try:
                    out[k] = complex(seed.h(complex(wk)))
                except Exception:
                    out[k] = np.nan
            return out


def _eval_dual_safe(seed: Seed, w: np.ndarray):
    """Vectorized (h, h') with NaN at singular points instead of raising."""
    with np.errstate(all="ignore"):
        try:
            h, hp = seed.h_dual(w)
            zeros = np.zeros_like(w)
            return (np.asarray(h, dtype=np.complex128) + zeros,
                    np.asarray(hp, dtype=np.complex128) + zeros)
        except Exception:
            h = np.empty(w.shape, dtype=np.complex128)
            hp = np.empty(w.shape, dtype=np.complex128)
            for k, wk in np.ndenumerate(w):
                try:
                    hk, hpk = seed.h_dual(complex(wk))
                    h[k], hp[k] = complex(hk), complex(hpk)
                except Exception:
                    h[k] = hp[k] = np.nan
            return h, hp


def _column_newton(seed: Seed, x: float, ys: np.ndarray, initial: np.ndarray,
                   active: np.ndarray, tol: float, max_iter: int,
                   j_min: float):
    """Damped Newton over one grid column, vectorized across rows.

    Returns (lam, J, iters, reason); `reason` is MASK_OK where the point
    converged cleanly, and every point is classified exactly once.
    """
    ny = ys.size
    lam = initial.astype(np.complex128).copy()
    J = np.ones(ny, dtype=np.complex128)
    iters = np.zeros(ny, dtype=np.int32)
    reason = np.full(ny, MASK_BEYOND_SHOCK, dtype=np.uint8)
    reason[active] = MASK_NO_CONVERGENCE  # until proven otherwise
    live = active.copy()

    for _ in range(max_iter + 1):
        if not live.any():
            break
        idx = np.flatnonzero(live)
        w = ys[idx] - lam[idx] * x
        h, hp = _eval_dual_safe(seed, w)
        bad = ~(np.isfinite(h) & np.isfinite(hp))
        F = lam[idx] - h
        Jl = 1.0 + hp * x
        J[idx[~bad]] = Jl[~bad]

        done = ~bad & (np.abs(F) <= tol)
        if done.any():
            sel = idx[done]
            neg = np.imag(lam[sel]) <= 0
            reason[sel] = np.where(neg, MASK_ELLIPTICITY_LOST, MASK_OK)
        if bad.any():
            reason[idx[bad]] = MASK_SEED_ERROR
        shock = ~done & ~bad & (np.abs(Jl) < j_min)
        if shock.any():
            reason[idx[shock]] = MASK_NEAR_SHOCK

        cont = ~(done | bad | shock)
        live[idx[~cont]] = False
        if not cont.any():
            continue
        cidx = idx[cont]
        Fc = F[cont]
        with np.errstate(all="ignore"):
            step = -Fc / Jl[cont]
        abs_f = np.abs(Fc)
        scale = np.ones(cidx.size)
        accepted = np.zeros(cidx.size, dtype=bool)
        new_lam = lam[cidx].copy()
        for _ in range(20):
            trial = lam[cidx] + scale * step
            ht = _eval_h_safe(seed, ys[cidx] - trial * x)
            with np.errstate(all="ignore"):
                f_trial = np.abs(trial - ht)
            good = (~accepted & np.isfinite(f_trial)
                    & ((f_trial < abs_f) | (f_trial <= tol)))
            new_lam[good] = trial[good]
            accepted |= good
            if accepted.all():
                break
            scale[~accepted] *= 0.5
        stalled = ~accepted
        if stalled.any():
            live[cidx[stalled]] = False  # reason stays NO_CONVERGENCE
        moved = cidx[accepted]
        lam[moved] = new_lam[accepted]
        iters[moved] += 1

    return lam, J, iters, reason


def burgers_field(seed: Seed, spec: GridSpec, tol: float = 1e-12,
                  max_iter: int = 50, j_min: float = J_MIN,
                  start_column: int | None = None) -> BurgersSolution:
    """Solve the implicit equation over the grid by column continuation.

    The continuation starts on the x = 0 column (or a declared
    `start_column`) and sweeps outward in +x then -x, each point seeded
    with its inward neighbour in the same row. Once a row masks out in a
    sweep direction it stays masked further out.
    """
    i0 = spec.axis_column() if start_column is None else int(start_column)
    if i0 < 0 or not (0 <= i0 < spec.nx):
        raise NoInitialColumnError(
            "no initial column: grid does not contain x = 0 and no "
            "transversal column was declared"
        )
    xs, ys = spec.xs(), spec.ys()
    nx, ny = spec.nx, spec.ny
    lam = np.zeros((nx, ny), dtype=np.complex128)
    J = np.ones((nx, ny), dtype=np.complex128)
    iters = np.zeros((nx, ny), dtype=np.int32)
    reasons = np.full((nx, ny), MASK_BEYOND_SHOCK, dtype=np.uint8)

    # initial column: seed Newton directly with h(y)
    try:
        init = np.asarray(seed.h(ys.astype(np.complex128)), dtype=np.complex128)
    except Exception:
        init = np.full(ny, np.nan, dtype=np.complex128)
        for k, yk in enumerate(ys):
            try:
                init[k] = complex(seed.h(complex(yk)))
            except Exception:
                init[k] = np.nan
    active0 = np.isfinite(init)
    safe_init = np.where(active0, init, 0.0)
    lam0, J0, it0, reason0 = _column_newton(
        seed, xs[i0], ys, safe_init, active0, tol, max_iter, j_min)
    reason0[~active0] = MASK_SEED_ERROR
    lam[i0], J[i0], iters[i0], reasons[i0] = lam0, J0, it0, reason0

    for direction in (1, -1):
        prev_lam = lam[i0]
        prev_ok = reasons[i0] == MASK_OK
        cols = range(i0 + direction, nx if direction > 0 else -1, direction)
        for i in cols:
            if not prev_ok.any():
                reasons[i][:] = MASK_BEYOND_SHOCK
                prev_ok = np.zeros(ny, dtype=bool)
                continue
            initial = np.where(prev_ok, prev_lam, 0.0)
            lam_i, J_i, it_i, reason_i = _column_newton(
                seed, xs[i], ys, initial, prev_ok.copy(), tol, max_iter, j_min)
            reason_i[~prev_ok] = MASK_BEYOND_SHOCK
            lam[i], J[i], iters[i], reasons[i] = lam_i, J_i, it_i, reason_i
            prev_lam = lam_i
            prev_ok = reason_i == MASK_OK

    ok = reasons == MASK_OK
    X, Y = spec.mesh()
    w0_vals = Y - lam * X
    # analytic partials: lambda_y = h'(w0)/J, lambda_x = -lambda*lambda_y
    hp = np.zeros((nx, ny), dtype=np.complex128)
    if ok.any():
        _, hp_ok = seed.h_dual(w0_vals[ok])
        hp[ok] = hp_ok
    with np.errstate(all="ignore"):
        lam_y = np.where(ok, hp / J, 0.0)
    lam_x = -lam * lam_y

    lam_field = ComplexGridField(spec, lam, ok)
    field = SpectralField(
        lam_field, "from_burgers",
        ComplexGridField(spec, lam_x, ok.copy()),
        ComplexGridField(spec, lam_y, ok.copy()),
    )
    solution = BurgersSolution(
        field=field,
        J=ComplexGridField(spec, J, ok.copy()),
        w0=ComplexGridField(spec, w0_vals, ok.copy()),
        seed=seed,
        newton_iters=iters,
        mask_reasons=reasons,
        tol=tol,
    )
    # post-hoc self-certification and J consistency of the whole field
    if ok.any():
        cert = solution.self_certification()
        if cert > 10.0 * tol:
            raise NewtonConvergenceError(
                f"self-certification failed: max residual {cert:.3g}"
            )
    return solution
