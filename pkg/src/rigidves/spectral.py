"""The transport picture: spectral parameter, transport map, diagnostics.

lambda = (-beta + i*sqrt(disc))/2 is the upper-half-plane root of the
structure polynomial; the transport map sends U + V*i to U + V*lambda,
a pointwise algebra homomorphism. Rigidity is equivalent to lambda solving
the inviscid Burgers equation lambda_x + lambda*lambda_y = 0, and the
normalized transport defect rho_T = |lambda_x + lambda*lambda_y| / (Im
lambda)^2 is the diagnostic invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EllipticityError, StructureMismatchError
from .grids import (
    ComplexGridField,
    max_norm,
    partial_x,
    partial_y,
    rms_norm,
)
from .structures import GridStructure, SampledStructure
from .algebra import AlgebraSection, cr_apply


@dataclass
class SpectralField:
    """lambda over a grid, with provenance and optional analytic partials."""

    lam: ComplexGridField
    provenance: str  # from_structure | from_burgers | user_supplied
    lam_x: ComplexGridField | None = None
    lam_y: ComplexGridField | None = None

    def __post_init__(self):
        vals = self.lam.values[self.lam.mask]
        if vals.size and np.any(np.imag(vals) <= 0):
            raise EllipticityError("ellipticity violated: Im(lambda) <= 0")

    @property
    def spec(self):
        return self.lam.spec

    @property
    def has_analytic_partials(self) -> bool:
        return self.lam_x is not None and self.lam_y is not None

    def partials(self, order: int = 2) -> tuple[ComplexGridField, ComplexGridField, str]:
        """Analytic partials when attached, FD otherwise."""
        if self.has_analytic_partials:
            return self.lam_x, self.lam_y, "analytic"
        return partial_x(self.lam, order), partial_y(self.lam, order), "fd"

    def im(self) -> np.ndarray:
        return np.imag(self.lam.values)


def lambda_from_structure(structure: GridStructure) -> SpectralField:
    """Upper-half-plane root (-beta + i*sqrt(disc))/2, with exact partials
    when the structure carries closed forms (preferred) or analytic
    (alpha, beta) partials."""
    spec = structure.spec
    if structure.lam is not None:
        lam = ComplexGridField(spec, structure.lam, structure.mask)
        lx = ly = None
        if structure.lam_x is not None:
            lx = ComplexGridField(spec, structure.lam_x, structure.mask)
            ly = ComplexGridField(spec, structure.lam_y, structure.mask)
        return SpectralField(lam, "from_structure", lx, ly)
    sqrt_disc = np.sqrt(structure.disc)
    lam = ComplexGridField(spec, (-structure.beta + 1j * sqrt_disc) / 2.0,
                           structure.mask)
    lx = ly = None
    if structure.has_analytic_partials:
        disc_x = 4.0 * structure.alpha_x - 2.0 * structure.beta * structure.beta_x
        disc_y = 4.0 * structure.alpha_y - 2.0 * structure.beta * structure.beta_y
        lx = ComplexGridField(
            spec, (-structure.beta_x + 1j * disc_x / (2.0 * sqrt_disc)) / 2.0,
            structure.mask)
        ly = ComplexGridField(
            spec, (-structure.beta_y + 1j * disc_y / (2.0 * sqrt_disc)) / 2.0,
            structure.mask)
    return SpectralField(lam, "from_structure", lx, ly)


def structure_from_lambda(field: SpectralField) -> SampledStructure:
    """Vieta: beta = -2 Re(lambda), alpha = |lambda|^2, as a sampled structure.

    The discriminant is carried as 4 Im(lambda)^2 exactly, so the round trip
    through lambda_from_structure holds to rounding even when Im(lambda) is
    tiny against Re(lambda)."""
    lam = field.lam
    if np.any(np.imag(lam.values[lam.mask]) <= 0):
        raise EllipticityError("ellipticity violated: Im(lambda) <= 0")
    alpha = np.abs(lam.values) ** 2
    beta = -2.0 * np.real(lam.values)
    disc = 4.0 * np.imag(lam.values) ** 2
    return SampledStructure(lam.spec, alpha, beta, lam.mask.copy(), disc=disc)


def transport(section: AlgebraSection, field: SpectralField) -> ComplexGridField:
    """U + V*lambda; checks that lambda actually solves the section's fiber
    polynomial before mixing the two."""
    if section.spec != field.spec:
        raise StructureMismatchError("section and spectral field grids differ")
    lam = field.lam.values
    mask = section.mask & field.lam.mask
    root_res = np.abs(lam * lam + section.structure.beta * lam
                      + section.structure.alpha)
    scale = 1.0 + np.abs(lam) ** 2
    if np.any(root_res[mask] > 1e-9 * scale[mask]):
        raise StructureMismatchError(
            "lambda does not solve this structure's fiber polynomial"
        )
    return ComplexGridField(section.spec, section.u + section.v * lam, mask)


def untransport(f: ComplexGridField, field: SpectralField,
                structure: GridStructure) -> AlgebraSection:
    """Invert the transport map: V = Im f / Im lambda, U = Re f - V Re lambda."""
    lam = field.lam.values
    v = np.imag(f.values) / np.imag(lam)
    u = np.real(f.values) - v * np.real(lam)
    return AlgebraSection(structure, u, v, f.mask & field.lam.mask)


@dataclass
class TransportDiagnostics:
    """T = lambda_x + lambda*lambda_y and its normalized defect."""

    T: ComplexGridField
    rho_T: np.ndarray
    max_rho_T: float
    rms_rho_T: float
    tolerance: float
    rigid: bool
    route: str

    def to_json(self) -> dict:
        return {
            "max_rho_T": self.max_rho_T,
            "rms_rho_T": self.rms_rho_T,
            "rigid_verdict": bool(self.rigid),
            "tolerance": self.tolerance,
            "derivative_route": self.route,
        }


def transport_residual(field: SpectralField, order: int = 2,
                       tolerance: float | None = None,
                       erode: int = 2) -> TransportDiagnostics:
    """Transport defect of lambda with rho_T = |T|/(Im lambda)^2.

    Norms exclude `erode` cells near mask boundaries (stencil validity).
    The verdict threshold defaults to max(10*h^2, 1e-8).
    """
    lx, ly, route = field.partials(order)
    lam = field.lam
    T_vals = lx.values + lam.values * ly.values
    mask = lx.mask & ly.mask & lam.mask
    T = ComplexGridField(field.spec, T_vals, mask)
    rho = np.abs(T_vals) / np.imag(lam.values) ** 2
    rho_field = ComplexGridField(field.spec, rho, mask)
    if tolerance is None:
        h = field.spec.h
        tolerance = max(10.0 * h * h, 1e-8)
    use_erode = 0 if route == "analytic" else erode
    max_rho = max_norm(rho_field, erode=use_erode)
    rms_rho = rms_norm(rho_field, erode=use_erode)
    return TransportDiagnostics(T, rho, max_rho, rms_rho, tolerance,
                                max_rho < tolerance, route)


def intertwining_residual(section: AlgebraSection,
                          field: SpectralField | None = None,
                          order: int = 2, extra_mask=None) -> dict:
    """Residual of 2 (dbar W)_lambda = (W_lambda)_x + lambda (W_lambda)_y.

    Both sides use the same stencil order; the identity holds for every C^1
    section over every elliptic structure, so the residual must vanish at
    stencil order with no rigidity assumption. Returns the residual field
    and its norms.
    """
    if field is None:
        field = lambda_from_structure(section.structure)
    dec = cr_apply(section, order)
    lam = field.lam.values
    lhs = dec.p + lam * dec.q
    f = transport(section, field)
    fx = partial_x(f, order)
    fy = partial_y(f, order)
    rhs = fx.values + lam * fy.values
    mask = dec.mask & fx.mask & fy.mask
    res = ComplexGridField(section.spec, lhs - rhs, mask)
    return {
        "field": res,
        "max": max_norm(res, extra_mask=extra_mask),
        "rms": rms_norm(res, extra_mask=extra_mask),
    }


def divergence_form_residual(f: ComplexGridField, field: SpectralField,
                             order: int = 2) -> ComplexGridField:
    """FD check of f_x + (lambda f)_y = f_x + lambda f_y + lambda_y f."""
    if f.spec != field.spec:
        raise StructureMismatchError("field grids differ")
    _, ly, _ = field.partials(order)
    fx = partial_x(f, order)
    fy = partial_y(f, order)
    prod = ComplexGridField(f.spec, field.lam.values * f.values,
                            f.mask & field.lam.mask)
    prod_y = partial_y(prod, order)
    lhs = fx.values + prod_y.values
    rhs = fx.values + field.lam.values * fy.values + ly.values * f.values
    mask = fx.mask & fy.mask & prod_y.mask & ly.mask
    return ComplexGridField(f.spec, lhs - rhs, mask)
