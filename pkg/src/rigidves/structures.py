"""Variable elliptic structures: coefficient pairs (alpha, beta) with
4*alpha - beta**2 > 0, evaluable on grids.

A structure is either a named closed form carrying analytic partial
derivatives (and, where the closed form allows, an exact discriminant and
an exact spectral parameter with partials), or a pair of sampled real
grids. Ellipticity and domain containment are hard errors at grid
evaluation, never NaNs: every downstream formula divides by quantities
controlled by the discriminant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFiberError, DomainError
from .grids import ComplexGridField, GridSpec


@dataclass
class GridStructure:
    """A structure evaluated on a grid: arrays plus optional analytic data.

    `alpha_x` .. `beta_y` are analytic partials (None when only samples
    exist). `lam`/`lam_x`/`lam_y` are the exact spectral parameter and its
    partials when the structure has them in closed form.
    """

    spec: GridSpec
    alpha: np.ndarray
    beta: np.ndarray
    disc: np.ndarray
    mask: np.ndarray
    alpha_x: np.ndarray | None = None
    alpha_y: np.ndarray | None = None
    beta_x: np.ndarray | None = None
    beta_y: np.ndarray | None = None
    lam: np.ndarray | None = None
    lam_x: np.ndarray | None = None
    lam_y: np.ndarray | None = None

    @property
    def has_analytic_partials(self) -> bool:
        return self.alpha_x is not None


class EllipticStructure:
    """Base class; subclasses implement evaluation on coordinate arrays."""

    kind = "named"
    name = "structure"

    def __init__(self, description: str = ""):
        self.description = description or self.name

    # Subclasses override the evaluators below. Coordinates arrive as
    # arrays from GridSpec.mesh().

    def eval_alpha_beta(self, X, Y):
        raise NotImplementedError

    def eval_partials(self, X, Y):
        """(alpha_x, alpha_y, beta_x, beta_y) or None when unavailable."""
        return None

    def eval_disc(self, X, Y):
        """Exact discriminant when the closed form has one; else 4a - b^2."""
        alpha, beta = self.eval_alpha_beta(X, Y)
        return 4.0 * alpha - beta * beta

    def eval_lambda(self, X, Y):
        """(lam, lam_x, lam_y) closed form, or None."""
        return None

    def domain_mask(self, X, Y):
        """True where the structure is declared; default: everywhere."""
        return np.ones(np.shape(X), dtype=bool)

    def on_grid(self, spec: GridSpec) -> GridStructure:
        """Evaluate on the grid; errors on domain or ellipticity violations."""
        X, Y = spec.mesh()
        inside = self.domain_mask(X, Y)
        if not np.all(inside):
            bad = np.argwhere(~inside)[0]
            raise DomainError(
                f"{self.name}: grid point (x={X[tuple(bad)]:.6g}, "
                f"y={Y[tuple(bad)]:.6g}) is outside the declared domain"
            )
        alpha, beta = self.eval_alpha_beta(X, Y)
        alpha = np.asarray(alpha, dtype=float) + np.zeros_like(X)
        beta = np.asarray(beta, dtype=float) + np.zeros_like(X)
        disc = np.asarray(self.eval_disc(X, Y), dtype=float) + np.zeros_like(X)
        if np.any(disc <= 0):
            raise DegenerateFiberError(
                f"{self.name}: 4*alpha - beta^2 <= 0 somewhere on the grid "
                f"(min {disc.min():.3g})"
            )
        gs = GridStructure(
            spec=spec, alpha=alpha, beta=beta, disc=disc,
            mask=np.ones_like(inside),
        )
        partials = self.eval_partials(X, Y)
        if partials is not None:
            gs.alpha_x, gs.alpha_y, gs.beta_x, gs.beta_y = (
                np.asarray(p, dtype=float) + np.zeros_like(X) for p in partials
            )
        lam = self.eval_lambda(X, Y)
        if lam is not None:
            gs.lam, gs.lam_x, gs.lam_y = (
                np.asarray(v, dtype=np.complex128) + np.zeros_like(X, dtype=np.complex128)
                for v in lam
            )
        return gs

    def to_json(self) -> dict:
        return {"kind": self.kind, "name": self.name, "params": {}}


class ConstantStructure(EllipticStructure):
    """Constant (alpha, beta); the standard complex plane is (1, 0)."""

    name = "constant"

    def __init__(self, alpha: float = 1.0, beta: float = 0.0):
        if 4.0 * alpha - beta * beta <= 0:
            raise DegenerateFiberError("constant structure is not elliptic")
        super().__init__(f"constant(alpha={alpha}, beta={beta})")
        self.alpha0 = float(alpha)
        self.beta0 = float(beta)

    def eval_alpha_beta(self, X, Y):
        return np.full_like(X, self.alpha0), np.full_like(X, self.beta0)

    def eval_partials(self, X, Y):
        z = np.zeros_like(X)
        return z, z, z, z

    def eval_disc(self, X, Y):
        return np.full_like(X, 4.0 * self.alpha0 - self.beta0 ** 2)

    def eval_lambda(self, X, Y):
        lam0 = (-self.beta0 + 1j * np.sqrt(4.0 * self.alpha0 - self.beta0 ** 2)) / 2.0
        z = np.zeros_like(X, dtype=np.complex128)
        return np.full_like(z, lam0), z, z.copy()

    def to_json(self) -> dict:
        return {"kind": "named", "name": "constant",
                "params": {"alpha": self.alpha0, "beta": self.beta0}}


class DeltaFamilyStructure(EllipticStructure):
    """The family with spectral parameter (y + i*delta)/(1 + x) on x > -1.

    beta = -2y/(1+x), alpha = (y^2 + delta^2)/(1+x)^2, discriminant
    4*delta^2/(1+x)^2 exactly (the 4*alpha - beta^2 route cancels badly for
    small delta).
    """

    name = "delta_family"

    def __init__(self, delta: float = 1.0):
        if delta <= 0:
            raise ValueError("delta must be > 0")
        super().__init__(f"delta_family(delta={delta})")
        self.delta = float(delta)

    def domain_mask(self, X, Y):
        return X > -1.0

    def eval_alpha_beta(self, X, Y):
        one_px = 1.0 + X
        return (Y * Y + self.delta ** 2) / one_px ** 2, -2.0 * Y / one_px

    def eval_partials(self, X, Y):
        one_px = 1.0 + X
        d2 = self.delta ** 2
        alpha_x = -2.0 * (Y * Y + d2) / one_px ** 3
        alpha_y = 2.0 * Y / one_px ** 2
        beta_x = 2.0 * Y / one_px ** 2
        beta_y = -2.0 / one_px
        return alpha_x, alpha_y, beta_x, beta_y

    def eval_disc(self, X, Y):
        return 4.0 * self.delta ** 2 / (1.0 + X) ** 2

    def eval_lambda(self, X, Y):
        one_px = 1.0 + X
        lam = (Y + 1j * self.delta) / one_px
        lam_x = -(Y + 1j * self.delta) / one_px ** 2
        lam_y = 1.0 / one_px + 0j * Y
        return lam, lam_x, lam_y

    # closed-form chart pieces used as oracles in tests and `verify`
    def xi_exact(self, X, Y):
        return (Y - 1j * self.delta * X) / (1.0 + X)

    def phi_exact(self, X, Y):
        return 2j * self.delta / (1.0 + X) ** 2 + 0.0 * Y

    def jac_det_exact(self, X, Y):
        return self.delta / (1.0 + X) ** 3 + 0.0 * Y

    def invert_xi_exact(self, xi):
        """Closed-form inverse of the canonical coordinate."""
        p, q = np.real(xi), np.imag(xi)
        return -q / (self.delta + q), p * self.delta / (self.delta + q)

    def to_json(self) -> dict:
        return {"kind": "named", "name": "delta_family",
                "params": {"delta": self.delta}}


class AffineLambdaStructure(EllipticStructure):
    """Structure defined by an affine spectral parameter cx*x + cy*y + c0.

    The stock non-rigid control is cx=1, cy=0, c0=i (lambda = x + i, with
    transport defect identically 1). Ellipticity requires Im(lambda) > 0 on
    the evaluated grid.
    """

    name = "custom_lambda"

    def __init__(self, cx: complex = 1.0, cy: complex = 0.0, c0: complex = 1j):
        super().__init__(f"custom_lambda(lambda = ({cx})x + ({cy})y + ({c0}))")
        self.cx = complex(cx)
        self.cy = complex(cy)
        self.c0 = complex(c0)

    def _lam(self, X, Y):
        return self.cx * X + self.cy * Y + self.c0

    def eval_alpha_beta(self, X, Y):
        lam = self._lam(X, Y)
        if np.any(np.imag(lam) <= 0):
            raise DegenerateFiberError(
                "custom_lambda: Im(lambda) <= 0 on the grid"
            )
        return np.abs(lam) ** 2, -2.0 * np.real(lam)

    def eval_partials(self, X, Y):
        lam = self._lam(X, Y)
        # alpha = |lam|^2, beta = -2 Re lam with constant lam gradient
        alpha_x = 2.0 * np.real(np.conj(lam) * self.cx)
        alpha_y = 2.0 * np.real(np.conj(lam) * self.cy)
        beta_x = np.full_like(np.real(lam), -2.0 * np.real(self.cx))
        beta_y = np.full_like(np.real(lam), -2.0 * np.real(self.cy))
        return alpha_x, alpha_y, beta_x, beta_y

    def eval_disc(self, X, Y):
        return 4.0 * np.imag(self._lam(X, Y)) ** 2

    def eval_lambda(self, X, Y):
        lam = self._lam(X, Y)
        shape = np.shape(X)
        return (lam,
                np.full(shape, self.cx, dtype=np.complex128),
                np.full(shape, self.cy, dtype=np.complex128))

    def to_json(self) -> dict:
        from .seedlang import format_constant

        return {"kind": "named", "name": "custom_lambda",
                "params": {"cx": format_constant(self.cx),
                           "cy": format_constant(self.cy),
                           "c0": format_constant(self.c0)}}


class SampledStructure(EllipticStructure):
    """(alpha, beta) given as real samples on a fixed grid.

    Partial derivatives are left to finite differences downstream; the
    structure can only be evaluated on its own grid.
    """

    kind = "sampled"
    name = "sampled"

    def __init__(self, spec: GridSpec, alpha: np.ndarray, beta: np.ndarray,
                 mask: np.ndarray | None = None,
                 disc: np.ndarray | None = None):
        super().__init__("sampled structure")
        self.spec = spec
        self.alpha_values = np.asarray(alpha, dtype=float)
        self.beta_values = np.asarray(beta, dtype=float)
        if self.alpha_values.shape != (spec.nx, spec.ny):
            raise ValueError("alpha samples do not match the grid")
        if self.beta_values.shape != (spec.nx, spec.ny):
            raise ValueError("beta samples do not match the grid")
        self.sample_mask = (np.ones((spec.nx, spec.ny), dtype=bool)
                            if mask is None else np.asarray(mask, dtype=bool))
        # an exact discriminant may be supplied when the caller knows it
        # (structure_from_lambda does); 4a - b^2 cancels for Im(lambda) << |Re|
        self.disc_values = (4.0 * self.alpha_values - self.beta_values ** 2
                            if disc is None else np.asarray(disc, dtype=float))
        if np.any(self.disc_values[self.sample_mask] <= 0):
            raise DegenerateFiberError("sampled structure is not elliptic")

    def on_grid(self, spec: GridSpec) -> GridStructure:
        if spec != self.spec:
            raise DomainError("sampled structure only lives on its own grid")
        safe_disc = np.where(self.sample_mask, self.disc_values, 1.0)
        return GridStructure(
            spec=spec, alpha=self.alpha_values, beta=self.beta_values,
            disc=safe_disc, mask=self.sample_mask.copy(),
        )

    def eval_alpha_beta(self, X, Y):  # pragma: no cover - on_grid bypasses
        raise DomainError("sampled structure has no closed form")

    def to_json(self) -> dict:
        return {"kind": "sampled", "name": "sampled", "params": {}}


def structure_from_json(doc: dict, csv_reader=None) -> EllipticStructure:
    """Build a structure from its JSON description.

    Schema: {"kind": "named"|"sampled", "name": ..., "params": {...}} or
    {"kind": "sampled", "files": {"alpha": path, "beta": path}} with a
    reader callback for the CSV grids.
    """
    kind = doc.get("kind", "named")
    if kind == "named":
        name = doc.get("name")
        params = doc.get("params", {}) or {}
        if name == "constant":
            return ConstantStructure(float(params.get("alpha", 1.0)),
                                     float(params.get("beta", 0.0)))
        if name == "delta_family":
            return DeltaFamilyStructure(float(params.get("delta", 1.0)))
        if name == "custom_lambda":
            from .seedlang import parse_constant

            def cplx(key, default):
                raw = params.get(key, default)
                return parse_constant(raw) if isinstance(raw, str) else complex(raw)

            return AffineLambdaStructure(cplx("cx", 1.0), cplx("cy", 0.0),
                                         cplx("c0", 1j))
        raise DomainError(f"unknown named structure {name!r}")
    if kind == "sampled":
        files = doc.get("files")
        if not files or csv_reader is None:
            raise DomainError("sampled structure needs alpha/beta CSV files")
        alpha_field: ComplexGridField = csv_reader(files["alpha"])
        beta_field: ComplexGridField = csv_reader(files["beta"])
        if beta_field.spec != alpha_field.spec:
            raise DomainError("alpha and beta CSV grids differ")
        return SampledStructure(
            alpha_field.spec,
            np.real(alpha_field.values),
            np.real(beta_field.values),
            alpha_field.mask & beta_field.mask,
        )
    raise DomainError(f"unknown structure kind {kind!r}")
