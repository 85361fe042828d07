"""Periodic grids, sampled fields and the discrete Fourier convention.

The torus of side ``L`` stands in for R^n.  Both the space and the frequency
axes are stored in FFT order, so that

    x_j  = j h          for j <  N/2,   (j - N) h   for j >= N/2
    xi_k = k (2 pi/L)   for k <  N/2,   (k - N) 2pi/L for k >= N/2

and the transform pair is the Riemann-sum discretisation of

    f^(xi) = int f(x) e^{-i x.xi} dx,
    f(x)   = (2 pi)^{-n} int f^(xi) e^{i x.xi} dxi.

With these phases no fftshift is ever needed: ``f^ = h^n fftn(f)`` and
``f = L^{-n} N^n ifftn(f^)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "Field",
    "Region",
    "Side",
    "GridError",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "dilate",
    "translate",
    "restrict_norm",
    "is_power_of_two",
]


class GridError(ValueError):
    """Raised for invalid grids, side mismatches and off-lattice requests."""


class Side(str, enum.Enum):
    SPACE = "space"
    FREQUENCY = "frequency"


def is_power_of_two(n) -> bool:
    n = int(n)
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice with ``points_per_axis`` nodes per axis."""

    dim: int
    points_per_axis: int
    side_length: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if not is_power_of_two(self.points_per_axis):
            raise GridError(f"N must be a power of two, got {self.points_per_axis}")
        if not self.side_length > 0:
            raise GridError(f"side length must be positive, got {self.side_length}")

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def spacing(self) -> float:
        return self.side_length / self.points_per_axis

    @property
    def freq_spacing(self) -> float:
        return 2.0 * np.pi / self.side_length

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    @cached_property
    def x_axis(self) -> np.ndarray:
        return np.fft.fftfreq(self.n) * self.side_length

    @cached_property
    def xi_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        """Space coordinates, one array of ``shape`` per axis."""
        return tuple(np.meshgrid(*([self.x_axis] * self.dim), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Frequency coordinates, one array of ``shape`` per axis."""
        return tuple(np.meshgrid(*([self.xi_axis] * self.dim), indexing="ij"))

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.xi))

    @cached_property
    def x_norm(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.x))

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "N": self.points_per_axis,
            "L": float(self.side_length),
            "h": float(self.spacing),
        }


def make_grid(dim: int, N: int, L: float) -> Grid:
    if int(N) < 16:
        raise GridError(f"N must be at least 16, got {N}")
    return Grid(int(dim), int(N), float(L))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on ``grid``, on one side of the transform."""

    grid: Grid
    side: Side
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        side = Side(self.side)
        vals = np.array(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            if vals.size != self.grid.size:
                raise GridError(
                    f"expected {self.grid.size} values for grid {self.grid.shape}, got {vals.size}"
                )
            vals = vals.reshape(self.grid.shape)
        vals.flags.writeable = False
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "values", vals)

    @classmethod
    def space(cls, grid: Grid, values) -> "Field":
        return cls(grid, Side.SPACE, values)

    @classmethod
    def frequency(cls, grid: Grid, values) -> "Field":
        return cls(grid, Side.FREQUENCY, values)

    @property
    def measure(self) -> float:
        """Quadrature weight of one node on this side."""
        if self.side is Side.SPACE:
            return self.grid.cell_volume
        return self.grid.freq_spacing**self.grid.dim

    def l2norm(self) -> float:
        return float(np.sqrt(self.measure * np.sum(np.abs(self.values) ** 2)))

    def with_values(self, values) -> "Field":
        return Field(self.grid, self.side, values)

    def __add__(self, other: "Field") -> "Field":
        _same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _same(a: Field, b: Field) -> None:
    if a.grid != b.grid or a.side is not b.side:
        raise GridError("fields live on different grids or sides")


def _require(f: Field, side: Side) -> None:
    if f.side is not side:
        raise GridError(f"expected a {side.value}-side field, got {f.side.value}")


def forward_transform(f: Field) -> Field:
    _require(f, Side.SPACE)
    g = f.grid
    return Field(g, Side.FREQUENCY, g.cell_volume * sfft.fftn(f.values))


def inverse_transform(F: Field) -> Field:
    _require(F, Side.FREQUENCY)
    g = F.grid
    scale = (g.n / g.side_length) ** g.dim
    return Field(g, Side.SPACE, scale * sfft.ifftn(F.values))


def to_frequency(f: Field) -> Field:
    return f if f.side is Side.FREQUENCY else forward_transform(f)


def to_space(f: Field) -> Field:
    return f if f.side is Side.SPACE else inverse_transform(f)


def _power_of_two_exponent(R: float) -> int:
    e = np.log2(float(R))
    k = int(round(e))
    if R <= 0 or abs(e - k) > 1e-12:
        raise GridError(f"dilation factor must be an integer power of two, got {R}")
    return k


def dilate(f: Field, R: float) -> Field:
    """Return f_R(z) = f(R z) on the grid of side L/R with the same N.

    The sample values are unchanged: node z_j = x_j / R of the new grid maps
    onto node x_j of the old one, so no interpolation enters.  The spectrum
    dilates to R * supp(f^).  For R > 1 the input must be band-limited to
    (pi/h)/R so that the dilated field is still resolved at the original
    spacing h.
    """
    _require(f, Side.SPACE)
    _power_of_two_exponent(R)
    g = f.grid
    if R > 1:
        F = forward_transform(f).values
        energy = np.abs(F) ** 2
        outside = energy[g.xi_norm > g.nyquist / R].sum()
        if outside > 1e-20 * max(energy.sum(), np.finfo(float).tiny):
            raise GridError(
                f"field is not band-limited to |xi| <= {g.nyquist / R:.6g}; dilation by {R} would alias"
            )
    new = Grid(g.dim, g.n, g.side_length / R)
    return Field(new, Side.SPACE, f.values)


def translate(f: Field, h_vec) -> Field:
    """tau_h f(x) = f(x + h) for a lattice vector h."""
    g = f.grid
    h_vec = np.atleast_1d(np.asarray(h_vec, dtype=float))
    if h_vec.size == 1 and g.dim == 2:
        h_vec = np.repeat(h_vec, 2)
    if h_vec.size != g.dim:
        raise GridError(f"shift has {h_vec.size} components for a {g.dim}-d grid")
    steps = h_vec / g.spacing
    shifts = np.rint(steps).astype(int)
    if np.any(np.abs(steps - shifts) > 1e-9 * np.maximum(1.0, np.abs(steps))):
        raise GridError(f"shift {h_vec.tolist()} is not a multiple of the spacing {g.spacing}")
    if f.side is Side.SPACE:
        return f.with_values(np.roll(f.values, tuple(-shifts), axis=tuple(range(g.dim))))
    phase = sum(s * g.spacing * c for s, c in zip(shifts, g.xi))
    return f.with_values(f.values * np.exp(1j * phase))


@dataclass(frozen=True)
class Region:
    """Ball, annulus or the whole torus, measured with the periodic distance."""

    kind: str
    center: tuple[float, ...] = (0.0,)
    radius: float | None = None
    inner: float | None = None
    outer: float | None = None

    def __post_init__(self):
        if self.kind not in ("ball", "annulus", "all"):
            raise GridError(f"unknown region kind {self.kind!r}")
        if self.kind == "ball" and not (self.radius and self.radius > 0):
            raise GridError("ball needs a positive radius")
        if self.kind == "annulus":
            if self.inner is None or self.outer is None or not (0 <= self.inner < self.outer):
                raise GridError("annulus needs 0 <= inner < outer")

    @classmethod
    def ball(cls, radius: float, center=0.0) -> "Region":
        return cls("ball", tuple(np.atleast_1d(center).astype(float)), radius=float(radius))

    @classmethod
    def annulus(cls, inner: float, outer: float, center=0.0) -> "Region":
        return cls(
            "annulus", tuple(np.atleast_1d(center).astype(float)), inner=float(inner), outer=float(outer)
        )

    @classmethod
    def dyadic(cls, R: float) -> "Region":
        """A(R) = {R/2 <= |xi| <= 2R}."""
        return cls.annulus(R / 2.0, 2.0 * R)

    @classmethod
    def everything(cls) -> "Region":
        return cls("all")

    def check_fits(self, grid: Grid) -> None:
        if self.kind == "ball" and self.radius > grid.side_length / 2:
            raise GridError(
                f"ball of radius {self.radius} does not fit a torus of side {grid.side_length}"
            )
        if self.kind == "annulus" and self.outer > grid.side_length / 2:
            raise GridError(
                f"annulus of outer radius {self.outer} does not fit a torus of side {grid.side_length}"
            )

    def _distance(self, coords, period: float | None) -> np.ndarray:
        c = np.broadcast_to(np.asarray(self.center, dtype=float), (len(coords),))
        total = 0.0
        for axis, c0 in zip(coords, c):
            d = axis - c0
            if period is not None:
                d = (d + period / 2) % period - period / 2
            total = total + d**2
        return np.sqrt(total)

    def mask(self, grid: Grid, side: Side | str = Side.SPACE) -> np.ndarray:
        side = Side(side)
        if self.kind == "all":
            return np.ones(grid.shape, dtype=bool)
        if side is Side.SPACE:
            self.check_fits(grid)
            r = self._distance(grid.x, grid.side_length)
        else:
            r = self._distance(grid.xi, None)
        if self.kind == "ball":
            return r <= self.radius
        return (r >= self.inner) & (r <= self.outer)

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind != "all":
            d["center"] = list(self.center)
        if self.kind == "ball":
            d["radius"] = self.radius
        if self.kind == "annulus":
            d["inner"], d["outer"] = self.inner, self.outer
        return d


def restrict_norm(f: Field, region: Region, p: float = 2.0) -> float:
    """L^p norm of a space-side field over ``region`` (p may be ``inf``)."""
    _require(f, Side.SPACE)
    if p < 1:
        raise GridError(f"p must be >= 1, got {p}")
    vals = np.abs(f.values[region.mask(f.grid)])
    if vals.size == 0:
        return 0.0
    if np.isinf(p):
        return float(vals.max())
    return float((f.grid.cell_volume * np.sum(vals**p)) ** (1.0 / p))
