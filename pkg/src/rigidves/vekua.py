"""Reduction of rigid variable-structure Vekua problems to standard form.

In the transport picture the problem reads

    f_x + lambda f_y + 2 A f + 2 B conj(f) = 2 F,

and on any region where Phi != 0 the chain rule f_x + lambda f_y =
f_xibar * Phi (the f_xi term dies by rigidity) turns it into the standard
equation

    f_xibar + A' f + B' conj(f) = F',   A' = 2A/Phi, B' = 2B/Phi, F' = 2F/Phi.

Reduction is refused outright on structures that fail the rigidity gate.
The reduced coefficients stay indexed by the (x, y) grid (pullback view);
an export of (p, q, value) triples is available for external resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canonical import PHI_ZERO_RELATIVE, CanonicalChart
from .errors import (
    AxisAbsentError,
    EmptyRegionError,
    NonRigidStructureError,
)
from .grids import (
    ComplexGridField,
    erode_mask,
    max_norm,
    partial_x,
    partial_y,
    rms_norm,
)
from .seedlang import (
    eval_field_with_partials,
    eval_seed,
    eval_seed_dual,
    parse_field_expr,
    parse_seed,
)
from .spectral import SpectralField, transport_residual


@dataclass
class PassengerField:
    """A candidate solution f, optionally with analytic partials.

    When f = g(xi) for a holomorphic generator g the partials come from
    the chain rule through the chart; field expressions in (x, y) get
    forward-mode partials. Sampled passengers fall back to FD.
    """

    f: ComplexGridField
    fx: ComplexGridField | None = None
    fy: ComplexGridField | None = None
    description: str = "samples"

    @property
    def has_analytic_partials(self) -> bool:
        return self.fx is not None

    @classmethod
    def from_generator(cls, chart: CanonicalChart, g_text_or_node,
                       params: dict | None = None) -> "PassengerField":
        """f = g(xi) with f_x = g'(xi) xi_x, f_y = g'(xi) xi_y."""
        node = (parse_seed(g_text_or_node)
                if isinstance(g_text_or_node, str) else g_text_or_node)
        xi = chart.xi
        g, gp = eval_seed_dual(node, xi.values, params or {})
        xi_x, xi_y, _ = chart.xi_partials()
        mask = xi.mask & xi_x.mask
        spec = chart.spec
        return cls(
            ComplexGridField(spec, g, mask),
            ComplexGridField(spec, gp * xi_x.values, mask.copy()),
            ComplexGridField(spec, gp * xi_y.values, mask.copy()),
            description=f"g(xi) with g = {g_text_or_node}",
        )

    @classmethod
    def xibar(cls, chart: CanonicalChart) -> "PassengerField":
        """f = conj(xi); its directional derivative is Phi by definition."""
        xi_x, xi_y, _ = chart.xi_partials()
        mask = chart.xi.mask & xi_x.mask
        spec = chart.spec
        return cls(
            ComplexGridField(spec, np.conj(chart.xi.values), mask),
            ComplexGridField(spec, np.conj(xi_x.values), mask.copy()),
            ComplexGridField(spec, np.conj(xi_y.values), mask.copy()),
            description="conj(xi)",
        )

    @classmethod
    def from_field_expr(cls, spec, text: str,
                        params: dict | None = None) -> "PassengerField":
        node = parse_field_expr(text)
        X, Y = spec.mesh()
        f, fx, fy = eval_field_with_partials(node, X, Y, params or {})
        return cls(
            ComplexGridField(spec, f),
            ComplexGridField(spec, fx),
            ComplexGridField(spec, fy),
            description=text,
        )

    def partials(self, order: int = 2):
        if self.has_analytic_partials:
            return self.fx, self.fy
        return partial_x(self.f, order), partial_y(self.f, order)


@dataclass
class VekuaProblem:
    """Transport-side coefficients over a spectral field."""

    lambda_field: SpectralField
    A: ComplexGridField
    B: ComplexGridField
    F: ComplexGridField

    @property
    def spec(self):
        return self.lambda_field.spec


@dataclass
class ReducedVekua:
    """Standard-form coefficients in the pullback (x, y) view."""

    A_prime: ComplexGridField
    B_prime: ComplexGridField
    F_prime: ComplexGridField
    chart: CanonicalChart
    phi_zero_count: int
    rho_report: dict

    @property
    def mask(self) -> np.ndarray:
        return self.A_prime.mask

    def export_triples(self) -> np.ndarray:
        """(p, q, A', B', F') rows for external resampling onto xi-space."""
        m = self.mask
        return np.column_stack([
            self.chart.p[m], self.chart.q[m],
            self.A_prime.values[m], self.B_prime.values[m],
            self.F_prime.values[m],
        ])


def reduce_problem(problem: VekuaProblem, chart: CanonicalChart,
                   order: int = 2,
                   rho_tolerance: float | None = None) -> ReducedVekua:
    """Divide by Phi where it is safely nonzero; refuse non-rigid input.

    The rigidity gate shares the transport-defect verdict; a failing
    structure raises NonRigidStructureError carrying the full diagnostics,
    never a silently reduced problem.
    """
    diag = transport_residual(problem.lambda_field, order,
                              tolerance=rho_tolerance)
    if not diag.rigid:
        raise NonRigidStructureError(
            f"reduction refused: structure is not rigid "
            f"(max rho_T = {diag.max_rho_T:.3g} >= tolerance "
            f"{diag.tolerance:.3g})",
            diagnostics=diag,
        )
    lam_abs = np.abs(problem.lambda_field.lam.values)
    phi = chart.phi
    safe = np.abs(phi.values) >= PHI_ZERO_RELATIVE * (1.0 + lam_abs)
    mask = phi.mask & safe
    phi_zero_count = int(np.sum(phi.mask & ~safe))

    def divide(coeff: ComplexGridField) -> ComplexGridField:
        with np.errstate(all="ignore"):
            vals = np.where(safe, 2.0 * coeff.values / np.where(safe, phi.values, 1.0), 0.0)
        return ComplexGridField(problem.spec, vals, mask & coeff.mask)

    return ReducedVekua(
        divide(problem.A), divide(problem.B), divide(problem.F),
        chart, phi_zero_count, diag.to_json(),
    )


def wirtinger_in_xi(f_or_passenger, chart: CanonicalChart, order: int = 2
                    ) -> tuple[ComplexGridField, ComplexGridField]:
    """Solve the pointwise 2x2 system for (f_xi, f_xibar).

        f_x = f_xi xi_x + f_xibar conj(xi)_x
        f_y = f_xi xi_y + f_xibar conj(xi)_y

    The determinant equals -xi_y * Phi; points where it is tiny are masked
    ("chart singular") rather than divided through.
    """
    if isinstance(f_or_passenger, PassengerField):
        fx, fy = f_or_passenger.partials(order)
        f_mask = f_or_passenger.f.mask
    else:
        fx = partial_x(f_or_passenger, order)
        fy = partial_y(f_or_passenger, order)
        f_mask = f_or_passenger.mask
    xi_x, xi_y, _ = chart.xi_partials(order)
    xb_x = np.conj(xi_x.values)
    xb_y = np.conj(xi_y.values)
    det = xi_x.values * xb_y - xb_x * xi_y.values
    mask = fx.mask & fy.mask & xi_x.mask & f_mask
    singular = np.abs(det) < 1e-12
    mask = mask & ~singular
    safe_det = np.where(singular, 1.0, det)
    f_xi = (fx.values * xb_y - xb_x * fy.values) / safe_det
    f_xibar = (xi_x.values * fy.values - fx.values * xi_y.values) / safe_det
    spec = chart.spec
    return (ComplexGridField(spec, f_xi, mask),
            ComplexGridField(spec, f_xibar, mask.copy()))


def manufacture(A: ComplexGridField, B: ComplexGridField,
                passenger: PassengerField, field: SpectralField,
                order: int = 2) -> VekuaProblem:
    """Forcing term making `passenger` an exact solution:

        F = (f_x + lambda f_y)/2 + A f + B conj(f).

    Analytic passenger partials keep the construction exact so that the
    reduction's own FD error is the only residual left to measure.
    """
    fx, fy = passenger.partials(order)
    lam = field.lam.values
    f = passenger.f.values
    F_vals = 0.5 * (fx.values + lam * fy.values) + A.values * f + B.values * np.conj(f)
    mask = fx.mask & fy.mask & field.lam.mask & A.mask & B.mask
    F = ComplexGridField(field.spec, F_vals, mask)
    return VekuaProblem(field, A, B, F)


def reduced_residual(passenger: PassengerField, reduced: ReducedVekua,
                     order: int = 2, erode: int = 2, extra_mask=None) -> dict:
    """Pointwise |f_xibar + A' f + B' conj(f) - F'| over the Phi-unmasked
    interior; FD throughout, so manufactured problems converge at stencil
    order."""
    f = passenger.f
    _, f_xibar = wirtinger_in_xi(f, reduced.chart, order)
    vals = (f_xibar.values
            + reduced.A_prime.values * f.values
            + reduced.B_prime.values * np.conj(f.values)
            - reduced.F_prime.values)
    mask = f_xibar.mask & reduced.mask & f.mask
    if not mask.any():
        raise EmptyRegionError("reduced residual: empty unmasked region")
    res = ComplexGridField(reduced.chart.spec, vals, mask)
    return {
        "field": res,
        "max": max_norm(res, erode=erode, extra_mask=extra_mask),
        "rms": rms_norm(res, erode=erode, extra_mask=extra_mask),
    }


def passenger_axis_identity(f: ComplexGridField, g, params: dict | None = None
                            ) -> float:
    """max over the x = 0 column of |g(y) - f(0, y)|.

    `g` may be a parsed generator expression, its text, or a callable.
    """
    spec = f.spec
    i0 = spec.axis_column()
    if i0 < 0:
        raise AxisAbsentError("axis absent: grid has no x = 0 column")
    ys = spec.ys().astype(np.complex128)
    if isinstance(g, str):
        g = parse_seed(g)
    if callable(g):
        g_vals = np.asarray(g(ys), dtype=np.complex128)
    else:
        g_vals = eval_seed(g, ys, params or {})
    row_mask = f.mask[i0]
    if not row_mask.any():
        raise EmptyRegionError("axis identity: axis fully masked")
    return float(np.max(np.abs(g_vals[row_mask] - f.values[i0][row_mask])))


@dataclass
class CoefficientBoundReport:
    """Sup-norm transfer bound ||A'|| <= factor * ||2 A||."""

    c1: float
    C: float | None
    min_abs_phi: float
    bound_factor: float
    measured_max_ratio: float | None
    measured_rms_ratio: float | None
    satisfied: bool


def coefficient_bound_report(reduced: ReducedVekua, problem: VekuaProblem,
                             compact_margin: int = 5,
                             J: ComplexGridField | None = None
                             ) -> CoefficientBoundReport:
    """Measure ||A'||/||2A|| on a compact subgrid against the reciprocal
    bound for 1/Phi.

    On Burgers fields |Phi| = 2 Im(lambda)/|J| gives the factor C/(2 c1)
    with c1 = min Im(lambda), C = max |J|; otherwise 1/min|Phi| is used
    directly.
    """
    region = erode_mask(reduced.mask, compact_margin)
    if not region.any():
        raise EmptyRegionError("coefficient bound: empty compact region")
    lam = problem.lambda_field.lam.values
    c1 = float(np.min(np.imag(lam)[region]))
    min_abs_phi = float(np.min(np.abs(reduced.chart.phi.values)[region]))
    if J is not None:
        C = float(np.max(np.abs(J.values)[region]))
        bound_factor = C / (2.0 * c1)
    else:
        C = None
        bound_factor = 1.0 / min_abs_phi

    two_a = 2.0 * np.abs(problem.A.values)[region]
    a_prime = np.abs(reduced.A_prime.values)[region]
    if np.max(two_a) == 0.0:
        measured_max = measured_rms = None
        satisfied = True
    else:
        measured_max = float(np.max(a_prime) / np.max(two_a))
        measured_rms = float(
            np.sqrt(np.mean(a_prime ** 2)) / np.sqrt(np.mean(two_a ** 2))
        )
        satisfied = (measured_max <= bound_factor * (1.0 + 1e-12)
                     and measured_rms <= bound_factor * (1.0 + 1e-12))
    return CoefficientBoundReport(
        c1, C, min_abs_phi, bound_factor, measured_max, measured_rms,
        bool(satisfied),
    )
