"""Canonical coordinate xi = y - lambda*x: chart, Phi, Jacobian, inversion.

On a rigid structure xi is holomorphic for the structure (xi_x + lambda
xi_y = 0, pure algebra) and uniformizes it wherever the characteristic
Jacobian

    Phi = conj(xi)_x + lambda conj(xi)_y
        = (lambda - conj(lambda)) - x (conj(lambda)_x + lambda conj(lambda)_y)

does not vanish. Under rigidity Phi factors as 2i Im(lambda) (1 - x
conj(lambda)_y), and on a Burgers field as 2i Im(lambda)/conj(J). The real
Jacobian of (x, y) -> (Re xi, Im xi) is Re[-(i/2)(1 - x lambda_y) Phi],
equal to Im(lambda)/|J|^2 on Burgers fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import InversionError, NearSingularChartError
from .grids import (
    ComplexGridField,
    erode_mask,
    max_norm,
    partial_x,
    partial_y,
)
from .spectral import SpectralField, transport_residual

# points with |Phi| below this (relative to 1 + |lambda|) are masked out of
# any division by Phi and flagged, never silently used
PHI_ZERO_RELATIVE = 1e-10


@dataclass
class CanonicalChart:
    """xi, its real/imaginary parts, Phi, and the real Jacobian over a grid."""

    field: SpectralField
    xi: ComplexGridField
    phi: ComplexGridField
    jac_det: np.ndarray
    mask: np.ndarray
    partials_route: str
    jac_imag_contamination: float = 0.0
    phi_zero_mask: np.ndarray = dc_field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.phi_zero_mask is None:
            lam_abs = np.abs(self.field.lam.values)
            self.phi_zero_mask = (
                np.abs(self.phi.values) < PHI_ZERO_RELATIVE * (1.0 + lam_abs)
            ) & self.mask

    @property
    def spec(self):
        return self.xi.spec

    @property
    def p(self) -> np.ndarray:
        return np.real(self.xi.values)

    @property
    def q(self) -> np.ndarray:
        return np.imag(self.xi.values)

    def xi_partials(self, order: int = 2):
        """(xi_x, xi_y) from the spectral partials: xi = y - lambda*x."""
        lx, ly, route = self.field.partials(order)
        X, _ = self.spec.mesh()
        lam = self.field.lam.values
        xi_x = -lam - X * lx.values
        xi_y = 1.0 - X * ly.values
        mask = lx.mask & ly.mask & self.field.lam.mask
        return (ComplexGridField(self.spec, xi_x, mask),
                ComplexGridField(self.spec, xi_y, mask.copy()), route)


def build_chart(field: SpectralField, order: int = 2) -> CanonicalChart:
    """Assemble the chart from lambda.

    Phi uses the definition form; analytic lambda partials are preferred,
    FD is the fallback (which shrinks the mask by the stencil margin).
    jac_det takes the real part of -(i/2)(1 - x lambda_y) Phi and checks
    that the imaginary contamination stays at rounding level.
    """
    spec = field.spec
    X, Y = spec.mesh()
    lam = field.lam.values
    xi = ComplexGridField(spec, Y - lam * X, field.lam.mask.copy())

    lx, ly, route = field.partials(order)
    lam_bar_x = np.conj(lx.values)
    lam_bar_y = np.conj(ly.values)
    phi_vals = (lam - np.conj(lam)) - X * (lam_bar_x + lam * lam_bar_y)
    mask = field.lam.mask & lx.mask & ly.mask
    phi = ComplexGridField(spec, phi_vals, mask)

    jac_complex = -0.5j * (1.0 - X * ly.values) * phi_vals
    jac_det = np.real(jac_complex)
    # the product is real exactly when the structure is rigid; record the
    # worst relative contamination so rigid callers can assert ~1e-10
    scale = np.maximum(np.abs(jac_complex), 1.0)
    contamination = np.abs(np.imag(jac_complex))[mask] / scale[mask]
    worst = float(contamination.max()) if contamination.size else 0.0

    return CanonicalChart(field, xi, phi, jac_det, mask, route, worst)


@dataclass
class PhiFactored:
    """Factored-form Phi with a loud flag when rigidity did not hold."""

    values: ComplexGridField
    rigidity_warning: bool
    max_rho_T: float


def phi_factored(field: SpectralField, order: int = 2,
                 rho_tolerance: float | None = None) -> PhiFactored:
    """Phi = 2i Im(lambda) (1 - x conj(lambda)_y); proved under rigidity.

    Applying it to a non-rigid structure sets `rigidity_warning` rather
    than failing: the mismatch against the definition form is a diagnostic.
    """
    diag = transport_residual(field, order, tolerance=rho_tolerance)
    _, ly, _ = field.partials(order)
    X, _ = field.spec.mesh()
    lam = field.lam.values
    vals = 2j * np.imag(lam) * (1.0 - X * np.conj(ly.values))
    mask = field.lam.mask & ly.mask
    return PhiFactored(ComplexGridField(field.spec, vals, mask),
                       not diag.rigid, diag.max_rho_T)


def phi_burgers_form(field: SpectralField, J: ComplexGridField) -> ComplexGridField:
    """Phi = 2i Im(lambda)/conj(J) on a Burgers field."""
    lam = field.lam
    vals = 2j * np.imag(lam.values) / np.conj(J.values)
    return ComplexGridField(field.spec, vals, lam.mask & J.mask)


@dataclass
class JacobianReport:
    """Pointwise comparison of the three Jacobian routes."""

    max_fd_vs_formula: float
    max_formula_vs_burgers: float | None
    min_jac_det: float
    max_jac_det: float
    zero_set_consistent: bool
    axis_residual: float | None


def jacobian_check(chart: CanonicalChart, order: int = 2,
                   J: ComplexGridField | None = None,
                   extra_mask=None) -> JacobianReport:
    """Compare FD det(d(p,q)/d(x,y)) with the formula value and, on Burgers
    fields, with Im(lambda)/|J|^2; verify the det != 0 <=> Phi != 0
    equivalence on the sample."""
    spec = chart.spec
    p_field = ComplexGridField(spec, chart.p, chart.mask)
    q_field = ComplexGridField(spec, chart.q, chart.mask)
    px = partial_x(p_field, order)
    py = partial_y(p_field, order)
    qx = partial_x(q_field, order)
    qy = partial_y(q_field, order)
    det_fd = np.real(px.values * qy.values - py.values * qx.values)
    fd_mask = px.mask & py.mask & qx.mask & qy.mask & chart.mask

    diff = ComplexGridField(spec, det_fd - chart.jac_det, fd_mask)
    max_fd_vs_formula = max_norm(diff, extra_mask=extra_mask)

    max_formula_vs_burgers = None
    if J is not None:
        det_burgers = np.imag(chart.field.lam.values) / np.abs(J.values) ** 2
        bdiff = ComplexGridField(spec, det_burgers - chart.jac_det,
                                 chart.mask & J.mask)
        max_formula_vs_burgers = max_norm(bdiff, extra_mask=extra_mask)

    lam_abs = np.abs(chart.field.lam.values)
    eps = 1e-10
    X, _ = spec.mesh()
    _, ly, _ = chart.field.partials(order)
    denom = np.maximum(1.0, np.abs(1.0 - X * ly.values))
    det_small = np.abs(chart.jac_det) < eps
    phi_small = np.abs(chart.phi.values) < 2.0 * eps / denom * (1.0 + lam_abs)
    m = chart.mask & ly.mask
    zero_set_consistent = bool(np.all(det_small[m] == phi_small[m]))

    axis_residual = None
    i0 = spec.axis_column()
    if i0 >= 0:
        ys = spec.ys()
        row_mask = chart.xi.mask[i0]
        if row_mask.any():
            axis_residual = float(
                np.max(np.abs(chart.xi.values[i0][row_mask] - ys[row_mask]))
            )

    valid = chart.jac_det[fd_mask]
    return JacobianReport(
        max_fd_vs_formula=max_fd_vs_formula,
        max_formula_vs_burgers=max_formula_vs_burgers,
        min_jac_det=float(valid.min()),
        max_jac_det=float(valid.max()),
        zero_set_consistent=zero_set_consistent,
        axis_residual=axis_residual,
    )


# -- Newton inversion -------------------------------------------------------


class LambdaProvider:
    """Pointwise lambda and partials at arbitrary (x, y); the interface the
    Newton inversion drives. Closed-form structures and Burgers solutions
    both implement it."""

    def lam_at(self, x: float, y: float) -> complex:
        raise NotImplementedError

    def lam_partials_at(self, x: float, y: float) -> tuple[complex, complex]:
        raise NotImplementedError


class StructureProvider(LambdaProvider):
    """Provider backed by a named structure's closed forms."""

    def __init__(self, structure):
        lam_probe = structure.eval_lambda(np.zeros(1), np.zeros(1))
        if lam_probe is None:
            raise InversionError(
                "structure has no closed-form lambda; use its Burgers field"
            )
        self.structure = structure

    def lam_at(self, x, y):
        lam, _, _ = self.structure.eval_lambda(np.asarray(x, dtype=float),
                                               np.asarray(y, dtype=float))
        return complex(lam)

    def lam_partials_at(self, x, y):
        _, lx, ly = self.structure.eval_lambda(np.asarray(x, dtype=float),
                                               np.asarray(y, dtype=float))
        return complex(lx), complex(ly)


@dataclass
class InversionResult:
    x: float
    y: float
    iterations: int
    residual: float


def invert_xi(provider: LambdaProvider, target: complex,
              guess: tuple[float, float], tol: float = 1e-12,
              max_iter: int = 50, jac_floor: float = 1e-12) -> InversionResult:
    """Damped 2D Newton for xi(x, y) = target on (p, q) = (Re xi, Im xi).

    The Jacobian rows come from the analytic lambda partials:
        p_x = -Re l - x Re l_x   p_y = 1 - x Re l_y
        q_x = -Im l - x Im l_x   q_y =   - x Im l_y
    Steps halve (up to 20 times) whenever the residual grows.
    """
    x, y = float(guess[0]), float(guess[1])
    tp, tq = target.real, target.imag

    def residual(xx, yy):
        lam = provider.lam_at(xx, yy)
        xi = yy - lam * xx
        return xi.real - tp, xi.imag - tq

    rp, rq = residual(x, y)
    rnorm = np.hypot(rp, rq)
    for it in range(1, max_iter + 1):
        if rnorm <= tol:
            return InversionResult(x, y, it - 1, float(rnorm))
        lam = provider.lam_at(x, y)
        lx, ly = provider.lam_partials_at(x, y)
        a = -lam.real - x * lx.real
        b = 1.0 - x * ly.real
        c = -lam.imag - x * lx.imag
        d = -x * ly.imag
        det = a * d - b * c
        if abs(det) < jac_floor:
            raise NearSingularChartError(
                f"near-singular chart: |Jacobian| = {abs(det):.3g} at "
                f"({x:.6g}, {y:.6g})"
            )
        dx = -(d * rp - b * rq) / det
        dy = -(-c * rp + a * rq) / det
        step = 1.0
        for _ in range(20):
            xn, yn = x + step * dx, y + step * dy
            try:
                rpn, rqn = residual(xn, yn)
            except Exception:
                step *= 0.5
                continue
            rn = np.hypot(rpn, rqn)
            if rn < rnorm or rn <= tol:
                x, y, rp, rq, rnorm = xn, yn, rpn, rqn, rn
                break
            step *= 0.5
        else:
            raise InversionError(
                f"inversion failed: damping stalled at residual {rnorm:.3g}"
            )
    if rnorm <= tol:
        return InversionResult(x, y, max_iter, float(rnorm))
    raise InversionError(
        f"inversion failed: residual {rnorm:.3g} after {max_iter} iterations"
    )


# -- empirical injectivity --------------------------------------------------


@dataclass
class InjectivityReport:
    """Sample statement about collisions of xi; never a proof."""

    verdict: str  # injective_on_sample | collisions_found
    collisions: list
    bucket_tol: float
    pairs_checked: int

    @property
    def injective(self) -> bool:
        return self.verdict == "injective_on_sample"


def injectivity_scan(chart_or_xi, bucket_tol: float | None = None,
                     max_reported: int = 100) -> InjectivityReport:
    """Scan for distinct grid points whose xi values collide.

    Spatial hash with bucket size `bucket_tol` (default 10*max(hx,hy)*
    median |grad xi|). A pair at grid (Chebyshev) distance > 2 cells is
    reported when |xi1 - xi2| falls below the local one-cell image scale
    along the contracting direction, h * |det D(p,q)| / |grad xi|,
    evaluated at both points; thin anisotropic images then stop producing
    false positives while exact fold collisions (|diff| ~ 0) always
    register. The verdict is a statement about the sample only.
    """
    if isinstance(chart_or_xi, CanonicalChart):
        xi = chart_or_xi.xi
    else:
        xi = chart_or_xi
    spec = xi.spec
    h = max(spec.hx, spec.hy)

    xi_x = partial_x(xi)
    xi_y = partial_y(xi)
    grad = np.sqrt(np.abs(xi_x.values) ** 2 + np.abs(xi_y.values) ** 2)
    # real Jacobian of (p, q): Im(conj(xi_x) * xi_y)
    det = np.imag(np.conj(xi_x.values) * xi_y.values)
    interior = xi.mask & xi_x.mask & xi_y.mask

    grads = grad[interior]
    if grads.size == 0:
        return InjectivityReport("injective_on_sample", [], 0.0, 0)
    if bucket_tol is not None:
        # explicit tolerance: constant collision threshold everywhere
        local_tol = np.full_like(grad, float(bucket_tol))
        bucket = float(bucket_tol)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            local_tol = np.where(grad > 0, h * np.abs(det) / grad, 0.0)
        bucket = float(np.max(local_tol[interior]))

    from scipy.spatial import cKDTree

    idx = np.argwhere(interior)
    vals = xi.values[tuple(idx.T)]
    tols = local_tol[tuple(idx.T)]
    pts = np.column_stack([np.real(vals), np.imag(vals)])
    tree = cKDTree(pts)
    # each point queries with its own radius; a pair within max(tol_a, tol_b)
    # is found from the larger-tolerance side
    neighbor_lists = tree.query_ball_point(pts, np.maximum(tols, 0.0))

    collisions = []
    pairs_checked = 0
    xs, ys = spec.xs(), spec.ys()
    for na in range(len(pts)):
        ia, ja = int(idx[na, 0]), int(idx[na, 1])
        for nb in sorted(neighbor_lists[na]):
            if nb <= na:
                continue
            pairs_checked += 1
            ib, jb = int(idx[nb, 0]), int(idx[nb, 1])
            if max(abs(ia - ib), abs(ja - jb)) <= 2:
                continue
            dist = abs(vals[na] - vals[nb])
            if dist < max(tols[na], tols[nb]):
                collisions.append((
                    (float(xs[ia]), float(ys[ja])),
                    (float(xs[ib]), float(ys[jb])),
                    float(dist),
                ))
                if len(collisions) >= max_reported:
                    return InjectivityReport("collisions_found", collisions,
                                             bucket, pairs_checked)
    verdict = "collisions_found" if collisions else "injective_on_sample"
    return InjectivityReport(verdict, collisions, bucket, pairs_checked)
