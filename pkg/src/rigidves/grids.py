"""Uniform rectangular grids, finite differences, and convergence measurement.

This is the measurement substrate for every identity check in the package:
complex fields sampled on a uniform rectangle, central-difference partial
derivatives (interior only, boundary layers masked out rather than
one-sided), Wirtinger derivatives, masked norms, and least-squares
convergence-order estimation.

Array convention: ``values[i, j]`` samples the point ``(xs[i], ys[j])``
(``indexing="ij"``), so axis 0 is x and axis 1 is y.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    EmptyRegionError,
    ExactResidualError,
    GridUnderresolvedError,
)


@dataclass(frozen=True)
class GridSpec:
    """A uniform nx-by-ny point grid on [x_min, x_max] x [y_min, y_max]."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid bounds must satisfy min < max")
        if self.nx < 5 or self.ny < 5:
            raise ValueError("grids need at least 5 points per axis")

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def h(self) -> float:
        """Coarsest spacing; the h used in order estimates and tolerances."""
        return max(self.hx, self.hy)

    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    def refined(self, factor: int) -> "GridSpec":
        """Same rectangle with each cell split `factor` times (h -> h/factor)."""
        return GridSpec(
            self.x_min, self.x_max, self.y_min, self.y_max,
            (self.nx - 1) * factor + 1, (self.ny - 1) * factor + 1,
        )

    def axis_column(self) -> int:
        """Index of the x = 0 column, or -1 if 0 is not a grid point."""
        if not (self.x_min <= 0.0 <= self.x_max):
            return -1
        i = int(round(-self.x_min / self.hx))
        if abs(self.xs()[i]) <= 1e-12 * max(1.0, abs(self.x_max), abs(self.x_min)):
            return i
        return -1


@dataclass
class ComplexGridField:
    """Complex samples over a :class:`GridSpec` with a validity mask.

    ``mask[i, j]`` is True where the sample is valid. Pointwise operations
    AND their operands' masks; derivatives shrink the mask by the stencil
    margin. Masked points never contribute to norms.
    """

    spec: GridSpec
    values: np.ndarray
    mask: np.ndarray = dc_field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.spec.nx, self.spec.ny):
            raise ValueError(
                f"values shape {self.values.shape} != grid {(self.spec.nx, self.spec.ny)}"
            )
        if self.mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.values.shape:
                raise ValueError("mask shape differs from values shape")

    # -- constructors ---------------------------------------------------

    @classmethod
    def sample(cls, spec: GridSpec, fn) -> "ComplexGridField":
        """Sample fn(X, Y) over the grid (fn must be numpy-vectorized)."""
        X, Y = spec.mesh()
        return cls(spec, np.asarray(fn(X, Y), dtype=np.complex128))

    @classmethod
    def constant(cls, spec: GridSpec, value: complex) -> "ComplexGridField":
        return cls(spec, np.full((spec.nx, spec.ny), value, dtype=np.complex128))

    # -- pointwise arithmetic (masks AND) --------------------------------

    def _coerce(self, other):
        if isinstance(other, ComplexGridField):
            if other.spec != self.spec:
                raise ValueError("fields live on different grids")
            return other.values, other.mask
        return other, None

    def _binary(self, other, op) -> "ComplexGridField":
        vals, mask = self._coerce(other)
        out_mask = self.mask if mask is None else (self.mask & mask)
        with np.errstate(all="ignore"):
            out = op(self.values, vals)
        return ComplexGridField(self.spec, out, out_mask.copy())

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        vals, mask = self._coerce(other)
        out_mask = self.mask if mask is None else (self.mask & mask)
        return ComplexGridField(self.spec, vals - self.values, out_mask.copy())

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return ComplexGridField(self.spec, -self.values, self.mask.copy())

    def conj(self) -> "ComplexGridField":
        return ComplexGridField(self.spec, np.conj(self.values), self.mask.copy())

    def apply(self, fn) -> "ComplexGridField":
        with np.errstate(all="ignore"):
            return ComplexGridField(self.spec, fn(self.values), self.mask.copy())

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def with_mask(self, mask: np.ndarray) -> "ComplexGridField":
        return ComplexGridField(self.spec, self.values.copy(), self.mask & mask)


def _stencil_margin(order: int) -> int:
    if order not in (2, 4):
        raise ValueError("stencil order must be 2 or 4")
    return order // 2


def _check_resolved(n: int, margin: int, axis: str):
    if n - 2 * margin < 1:
        raise GridUnderresolvedError(
            f"grid underresolved: {n} points along {axis} cannot carry a "
            f"margin-{margin} interior stencil"
        )


def _central_diff(values: np.ndarray, mask: np.ndarray, h: float, order: int,
                  axis: int) -> tuple[np.ndarray, np.ndarray]:
    margin = _stencil_margin(order)
    out = np.zeros_like(values)
    ok = np.zeros_like(mask)
    sl = (slice(None),) * axis

    def shift(k):
        idx = sl + (slice(margin + k, values.shape[axis] - margin + k or None),)
        return idx

    center = sl + (slice(margin, values.shape[axis] - margin),)
    if order == 2:
        out[center] = (values[shift(1)] - values[shift(-1)]) / (2.0 * h)
        ok[center] = mask[shift(1)] & mask[shift(-1)] & mask[center]
    else:
        out[center] = (
            -values[shift(2)] + 8.0 * values[shift(1)]
            - 8.0 * values[shift(-1)] + values[shift(-2)]
        ) / (12.0 * h)
        ok[center] = (
            mask[shift(2)] & mask[shift(1)] & mask[center]
            & mask[shift(-1)] & mask[shift(-2)]
        )
    return out, ok


def partial_x(field: ComplexGridField, order: int = 2) -> ComplexGridField:
    """Central-difference d/dx on the interior; boundary layers masked out."""
    margin = _stencil_margin(order)
    _check_resolved(field.spec.nx, margin, "x")
    out, ok = _central_diff(field.values, field.mask, field.spec.hx, order, axis=0)
    return ComplexGridField(field.spec, out, ok)


def partial_y(field: ComplexGridField, order: int = 2) -> ComplexGridField:
    """Central-difference d/dy; mirror of :func:`partial_x`."""
    margin = _stencil_margin(order)
    _check_resolved(field.spec.ny, margin, "y")
    out, ok = _central_diff(field.values, field.mask, field.spec.hy, order, axis=1)
    return ComplexGridField(field.spec, out, ok)


def wirtinger(field: ComplexGridField, order: int = 2
              ) -> tuple[ComplexGridField, ComplexGridField]:
    """FD Wirtinger pair d_z = (dx - i dy)/2 and d_zbar = (dx + i dy)/2.

    By construction dx = d_z + d_zbar and dy = i(d_z - d_zbar) hold to
    rounding on the shared mask.
    """
    px = partial_x(field, order)
    py = partial_y(field, order)
    mask = px.mask & py.mask
    d_z = ComplexGridField(field.spec, 0.5 * (px.values - 1j * py.values), mask)
    d_zbar = ComplexGridField(field.spec, 0.5 * (px.values + 1j * py.values), mask.copy())
    return d_z, d_zbar


# -- masks and norms ------------------------------------------------------


def erode_mask(mask: np.ndarray, cells: int) -> np.ndarray:
    """Shrink the valid region by `cells` layers (8-neighbour erosion)."""
    out = mask.copy()
    for _ in range(cells):
        inner = out.copy()
        inner[1:, :] &= out[:-1, :]
        inner[:-1, :] &= out[1:, :]
        inner[:, 1:] &= out[:, :-1]
        inner[:, :-1] &= out[:, 1:]
        inner[0, :] = inner[-1, :] = False
        inner[:, 0] = inner[:, -1] = False
        out = inner
    return out


def physical_margin_mask(spec: GridSpec, margin: float) -> np.ndarray:
    """True where the point is at least `margin` away from the rectangle edge.

    Used by convergence studies so that every refinement level measures the
    same physical region (otherwise the max-norm location creeps toward the
    boundary as stencil margins shrink and pollutes the fitted order).
    """
    X, Y = spec.mesh()
    return (
        (X >= spec.x_min + margin) & (X <= spec.x_max - margin)
        & (Y >= spec.y_min + margin) & (Y <= spec.y_max - margin)
    )


def _masked_abs(field: ComplexGridField, erode: int, extra_mask) -> np.ndarray:
    mask = field.mask if erode == 0 else erode_mask(field.mask, erode)
    if extra_mask is not None:
        mask = mask & extra_mask
    vals = np.abs(field.values[mask])
    if vals.size == 0:
        raise EmptyRegionError("no unmasked points left for the norm")
    return vals


def max_norm(field: ComplexGridField, erode: int = 0, extra_mask=None) -> float:
    """Max of |values| over the (optionally eroded) unmasked region."""
    return float(np.max(_masked_abs(field, erode, extra_mask)))


def rms_norm(field: ComplexGridField, erode: int = 0, extra_mask=None) -> float:
    vals = _masked_abs(field, erode, extra_mask)
    return float(np.sqrt(np.mean(vals * vals)))


def convergence_order(residual_norms) -> float:
    """Least-squares slope of log(norm) against log(h).

    `residual_norms` is a sequence of (h, norm) pairs with h strictly
    decreasing and norms > 0. A zero/negative norm means the residual is
    exact (or invalid) and no order can be fitted.
    """
    pairs = list(residual_norms)
    if len(pairs) < 2:
        raise ValueError("need at least two (h, norm) pairs")
    hs = np.array([p[0] for p in pairs], dtype=float)
    norms = np.array([p[1] for p in pairs], dtype=float)
    if np.any(np.diff(hs) >= 0):
        raise ValueError("h must be strictly decreasing")
    if np.any(norms <= 0):
        raise ExactResidualError("exact or invalid residual")
    slope = np.polyfit(np.log(hs), np.log(norms), 1)[0]
    return float(slope)


def refinement_study(measure, spec: GridSpec, levels: int = 3,
                     margin_cells: float = 3.0) -> dict:
    """Run `measure(spec, region_mask)` over a dyadic grid sequence.

    `measure` returns a residual norm; the region mask excludes a fixed
    physical margin (`margin_cells` coarse cells) at every level. Returns
    the fitted order and the per-level (h, norm) pairs.
    """
    margin = margin_cells * spec.h
    pairs = []
    for k in range(levels):
        s = spec.refined(2 ** k)
        pairs.append((s.h, measure(s, physical_margin_mask(s, margin))))
    return {"pairs": pairs, "order": convergence_order(pairs)}
