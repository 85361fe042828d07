"""Free dispersive evolution T_t = exp(i t phi(D)) on the periodic grid.

Every evaluation at a single time goes through ``_evolve``; the linearized
operator, the maximal function and the low-frequency / weighted variants are
all gathers over per-node results of that one routine, so their outputs agree
bit for bit whenever they select the same nodes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .grid import Field, Grid, GridError, Side, forward_transform, make_grid
from .lpdecomp import chi
from .phase import PhaseFn, phase_on_grid

log = logging.getLogger(__name__)

__all__ = [
    "TimeGrid",
    "TimeField",
    "MaximalResult",
    "TimeGridError",
    "AliasingBudgetError",
    "QuadratureError",
    "apply_T",
    "apply_T_linearized",
    "maximal_function",
    "apply_R_lowfreq",
    "apply_T_weighted",
    "evolve_many",
    "kernel_quadrature",
    "nonstationary_decay_probe",
    "NonstationaryReport",
    "required_side_length",
    "auto_time_count",
    "auto_grid",
    "check_aliasing_budget",
]


class TimeGridError(ValueError):
    """Time-field values off the node set, or an invalid time grid."""


class AliasingBudgetError(GridError):
    def __init__(self, message: str, required_L: float):
        super().__init__(message)
        self.required_L = required_L


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------- time grids


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time nodes in (0, T_max].

    ``uniform(Nt, T)`` gives t_j = j T / Nt for j = 1..Nt.  Index 0 is reserved
    for t = 0, which time-fields may use to select the identity.
    """

    nodes: np.ndarray
    T_max: float

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).ravel()
        if nodes.size < 1:
            raise TimeGridError("a time grid needs at least one node")
        if not self.T_max > 0:
            raise TimeGridError(f"T_max must be positive, got {self.T_max}")
        if np.any(np.diff(nodes) <= 0) or nodes[0] <= 0 or nodes[-1] > self.T_max * (1 + 1e-14):
            raise TimeGridError("nodes must be strictly increasing in (0, T_max]")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "T_max", float(self.T_max))

    @classmethod
    def uniform(cls, count: int, T_max: float = 1.0) -> "TimeGrid":
        count = int(count)
        if count < 1:
            raise TimeGridError(f"Nt must be >= 1, got {count}")
        return cls(np.arange(1, count + 1) * (float(T_max) / count), T_max)

    @property
    def count(self) -> int:
        return int(self.nodes.size)

    def time(self, index) -> np.ndarray:
        """Time for node indices, with index 0 meaning t = 0."""
        index = np.asarray(index)
        full = np.concatenate([[0.0], self.nodes])
        return full[index]

    def index_of(self, values, rtol: float = 1e-12) -> np.ndarray:
        """Node index (0 for t = 0, j for t_j) of every value; raise if off-node."""
        values = np.asarray(values, dtype=float)
        full = np.concatenate([[0.0], self.nodes])
        pos = np.clip(np.searchsorted(full, values), 1, full.size - 1)
        left = np.abs(values - full[pos - 1])
        right = np.abs(values - full[pos])
        idx = np.where(left <= right, pos - 1, pos)
        err = np.minimum(left, right)
        if np.any(err > rtol * self.T_max):
            bad = values.ravel()[np.argmax(err.ravel())]
            raise TimeGridError(f"time value {bad!r} is not on the time grid")
        return idx

    def snap(self, values) -> np.ndarray:
        """Nearest node (or 0) for arbitrary values in [0, T_max]."""
        values = np.asarray(values, dtype=float)
        full = np.concatenate([[0.0], self.nodes])
        pos = np.clip(np.searchsorted(full, values), 1, full.size - 1)
        take_left = np.abs(values - full[pos - 1]) <= np.abs(values - full[pos])
        return full[np.where(take_left, pos - 1, pos)]

    def scaled(self, factor: float) -> "TimeGrid":
        return TimeGrid(self.nodes * factor, self.T_max * factor)

    def describe(self) -> dict:
        return {"Nt": self.count, "T_max": self.T_max}


@dataclass(frozen=True, eq=False)
class TimeField:
    grid: Grid
    values: np.ndarray = field(repr=False)
    T_max: float = 1.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.size == 1 and self.grid.size > 1:
            vals = np.full(self.grid.shape, float(vals.ravel()[0]))
        if vals.size != self.grid.size:
            raise TimeGridError(f"time field has {vals.size} values for a grid of {self.grid.size}")
        vals = vals.reshape(self.grid.shape)
        if not self.T_max > 0:
            raise TimeGridError("T_max must be positive")
        if np.any(vals < 0) or np.any(vals > self.T_max * (1 + 1e-14)):
            raise TimeGridError(f"time field values must lie in [0, {self.T_max}]")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, t: float, T_max: float | None = None) -> "TimeField":
        return cls(grid, np.full(grid.shape, float(t)), T_max if T_max is not None else max(float(t), 1.0))

    @classmethod
    def from_indices(cls, grid: Grid, tgrid: TimeGrid, index) -> "TimeField":
        return cls(grid, tgrid.time(index), tgrid.T_max)


@dataclass(frozen=True, eq=False)
class MaximalResult:
    sup_field: Field
    argmax_tfield: TimeField
    argmax_index: np.ndarray = field(repr=False)


# ---------------------------------------------------------------- evaluation

def _phase_values(grid: Grid, phase: PhaseFn) -> np.ndarray:
    return phase_on_grid(phase, grid.xi)


def _spectrum(f: Field) -> np.ndarray:
    return (f if f.side is Side.FREQUENCY else forward_transform(f)).values


def _evolve(F: np.ndarray, t: float, phi: np.ndarray, grid: Grid, mult: np.ndarray | None = None) -> np.ndarray:
    """Space samples of the multiplier exp(i t phi) (times ``mult``) applied to F."""
    M = np.exp(1j * (t * phi))
    if mult is not None:
        M = M * mult
    scale = (grid.n / grid.side_length) ** grid.dim
    return scale * sfft.ifftn(F * M)


def apply_T(f: Field, t: float, phase: PhaseFn) -> Field:
    if not np.isfinite(t):
        raise TimeGridError(f"time must be finite, got {t}")
    g = f.grid
    return Field(g, Side.SPACE, _evolve(_spectrum(f), float(t), _phase_values(g, phase), g))


def _gather(f: Field, tf: TimeField, tgrid: TimeGrid, phase: PhaseFn, mult: np.ndarray | None) -> Field:
    g = f.grid
    if tf.grid != g:
        raise GridError("time field and data live on different grids")
    idx = tgrid.index_of(tf.values)
    F = _spectrum(f)
    phi = _phase_values(g, phase)
    out = np.empty(g.shape, dtype=np.complex128)
    for j in np.unique(idx):
        vals = _evolve(F, float(tgrid.time(j)), phi, g, mult)
        sel = idx == j
        out[sel] = vals[sel]
    return Field(g, Side.SPACE, out)


def apply_T_linearized(f: Field, tf: TimeField, tgrid: TimeGrid, phase: PhaseFn) -> Field:
    """T_{t(x)} f(x) by evaluating each used node once and gathering."""
    return _gather(f, tf, tgrid, phase, None)


def apply_R_lowfreq(
    f: Field, tf: TimeField, tgrid: TimeGrid, phase: PhaseFn, cutoff: Callable = chi
) -> Field:
    return _gather(f, tf, tgrid, phase, cutoff(f.grid.xi))


def japanese(xi) -> np.ndarray:
    return np.sqrt(1.0 + sum(c**2 for c in xi))


def apply_T_weighted(f: Field, tf: TimeField, tgrid: TimeGrid, phase: PhaseFn, exponent: float) -> Field:
    if exponent < 0:
        raise ValueError(f"weight exponent must be >= 0, got {exponent}")
    if exponent == 0:
        return _gather(f, tf, tgrid, phase, None)
    return _gather(f, tf, tgrid, phase, japanese(f.grid.xi) ** (-float(exponent)))


def maximal_function(f: Field, tgrid: TimeGrid, phase: PhaseFn) -> MaximalResult:
    """max_j |T_{t_j} f| with the smallest maximizing node index."""
    g = f.grid
    F = _spectrum(f)
    phi = _phase_values(g, phase)
    best = np.full(g.shape, -1.0)
    arg = np.zeros(g.shape, dtype=np.int64)
    for j in range(1, tgrid.count + 1):
        a = np.abs(_evolve(F, float(tgrid.nodes[j - 1]), phi, g))
        upd = a > best
        best[upd] = a[upd]
        arg[upd] = j
    return MaximalResult(Field(g, Side.SPACE, best), TimeField.from_indices(g, tgrid, arg), arg)


def evolve_many(F: np.ndarray, times: Sequence[float], phi: np.ndarray, grid: Grid, chunk: int = 64):
    """Yield (start, block) with block[k] = space samples at times[start + k].

    Batched transforms for the estimator's inner loops; results agree with
    ``_evolve`` to rounding, not bitwise.
    """
    times = np.asarray(times, dtype=float)
    scale = (grid.n / grid.side_length) ** grid.dim
    axes = tuple(range(1, grid.dim + 1))
    for s in range(0, times.size, chunk):
        tt = times[s : s + chunk].reshape((-1,) + (1,) * grid.dim)
        block = scale * sfft.ifftn(F[None] * np.exp(1j * tt * phi[None]), axes=axes)
        yield s, block


# ---------------------------------------------------------------- budgets

def required_side_length(R_max: float, a: float, T_max: float, data_support: float = 2.0, margin: float = 8.0) -> float:
    """Torus side needed so that waves from the data region cannot wrap around."""
    return float(data_support + 2.0 * a * (2.0 * R_max) ** (a - 1.0) * T_max + margin)


def auto_time_count(R_max: float, a: float, T_max: float) -> int:
    return int(8 * math.ceil(T_max * (2.0 * R_max) ** a - 1e-12))


def _next_pow2(x: float) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(x, 1.0)))))


def auto_grid(dim: int, R_max: float, a: float, T_max: float, data_support: float = 2.0, margin: float = 8.0) -> Grid:
    """Smallest power-of-two grid meeting the aliasing budget with Nyquist >= 2.5 R_max."""
    L = required_side_length(R_max, a, T_max, data_support, margin)
    N = max(16, _next_pow2(L * 2.0 * R_max * 1.25 / math.pi))
    return make_grid(dim, N, L)


def check_aliasing_budget(
    grid: Grid, R_max: float, a: float, T_max: float, data_support: float = 2.0, margin: float = 8.0, force: bool = False
) -> float:
    """Raise AliasingBudgetError when the torus is too small or under-resolves A(R_max)."""
    need = required_side_length(R_max, a, T_max, data_support, margin)
    problems = []
    if grid.side_length < need * (1 - 1e-12):
        problems.append(f"side length {grid.side_length:.6g} < required {need:.6g}")
    if grid.nyquist < 2.0 * R_max:
        problems.append(f"Nyquist {grid.nyquist:.6g} does not cover |xi| <= {2 * R_max:g}")
    if problems:
        msg = "aliasing budget violated: " + "; ".join(problems)
        if force:
            log.warning("%s (continuing because of --force)", msg)
        else:
            raise AliasingBudgetError(msg, need)
    return need


# ---------------------------------------------------------------- quadrature

_GL_ORDER = 16


def _gl_panels(breaks: Sequence[float], per_segment: int) -> tuple[np.ndarray, np.ndarray]:
    x0, w0 = np.polynomial.legendre.leggauss(_GL_ORDER)
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        edges = np.linspace(a, b, per_segment + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        xs.append(((hi - lo) / 2 * x0 + (hi + lo) / 2).ravel())
        ws.append(((hi - lo) / 2 * w0).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _adaptive(
    integrate: Callable[[int], np.ndarray], start: int, max_panels: int, what: str, floor: float = 1.0
) -> np.ndarray:
    """Double the panel count until successive results differ by < 1e-14 floor + 1e-8 |K|.

    ``floor`` is the integral of the modulus of the integrand, so the absolute
    part of the tolerance tracks the rounding level of the sum.
    """
    n = start
    prev = integrate(n)
    while True:
        n *= 2
        if n > max_panels:
            raise QuadratureError(f"{what}: quadrature did not converge with {max_panels} panels per segment")
        cur = integrate(n)
        if np.all(np.abs(cur - prev) < 1e-14 * floor + 1e-8 * np.abs(cur)):
            return cur
        prev = cur


def kernel_quadrature(
    x_minus_y,
    t: float,
    phase: PhaseFn,
    cutoff: Callable = chi,
    quad_points: int = 4,
    max_panels: int = 1 << 14,
) -> np.ndarray:
    """(2 pi)^{-n} int cutoff(xi) exp(i (z.xi + t phi(xi))) dxi by Gauss-Legendre panels.

    ``x_minus_y`` is a scalar or an array of shape (m,) in one dimension, or of
    shape (m, 2) in two; the cutoff is assumed supported in |xi| <= 2.  The
    panel count per segment starts at ``quad_points`` and doubles until the
    result changes by less than 1e-14 + 1e-8 |K|.
    """
    z = np.asarray(x_minus_y, dtype=float)
    dim = phase.dim or 1
    scalar = z.ndim == (0 if dim == 1 else 1)
    if dim == 1:
        zz = np.atleast_1d(z).ravel()

        def integrate(n):
            xi, w = _gl_panels([-2.0, -1.0, 0.0, 1.0, 2.0], n)
            amp = cutoff(xi) * np.exp(1j * t * phase(xi[None])) * w
            return np.exp(1j * np.outer(zz, xi)) @ amp / (2 * np.pi)

    else:
        zz = np.atleast_2d(z)

        def integrate(n):
            r, wr = _gl_panels([0.0, 1.0, 2.0], n)
            m_ang = 8 * n * _GL_ORDER
            th = np.arange(m_ang) * (2 * np.pi / m_ang)
            R, TH = np.meshgrid(r, th, indexing="ij")
            X = np.stack([R * np.cos(TH), R * np.sin(TH)])
            amp = cutoff((X[0], X[1])) * np.exp(1j * t * phase(X)) * (wr[:, None] * R * (2 * np.pi / m_ang))
            amp = amp.ravel()
            X = X.reshape(2, -1)
            out = np.empty(zz.shape[0], dtype=complex)
            for i, zi in enumerate(zz):
                out[i] = np.exp(1j * (zi[0] * X[0] + zi[1] * X[1])) @ amp
            return out / (2 * np.pi) ** 2

    K = _adaptive(integrate, max(1, int(quad_points)), max_panels, "kernel")
    return K[0] if scalar else K


# ---------------------------------------------------------------- non-stationary phase

@dataclass
class NonstationaryReport:
    params: np.ndarray
    integrals: np.ndarray
    bounds: np.ndarray
    min_grad: np.ndarray
    k: int
    exponent: float
    ratios: np.ndarray = field(init=False)

    def __post_init__(self):
        self.ratios = np.abs(self.integrals) / self.bounds

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "fitted_exponent": self.exponent,
            "params": self.params.tolist(),
            "abs_integral": np.abs(self.integrals).tolist(),
            "bound": self.bounds.tolist(),
            "min_grad": self.min_grad.tolist(),
        }


def _derivatives(F: Callable, xi: np.ndarray, k: int) -> list[np.ndarray]:
    """F and its first k derivatives on a uniform grid by repeated central differences."""
    out = [F(xi)]
    for _ in range(k):
        out.append(np.gradient(out[-1], xi, edge_order=2))
    return out


def nonstationary_decay_probe(
    F: Callable[[np.ndarray], np.ndarray],
    Phi_family: Callable[[float], tuple[Callable, Callable]],
    k: int,
    param_list: Sequence[float],
    support: Sequence[float] = (-2.0, -1.0, 0.0, 1.0, 2.0),
    rhs_points: int = 200001,
) -> NonstationaryReport:
    """Compare |int F e^{i Phi}| with sum_{j<=k} int |F^{(j)}| |Phi'|^{-k} in one dimension.

    ``Phi_family(p)`` returns the pair (Phi, Phi') for parameter p.  F must
    vanish outside ``[support[0], support[-1]]``; interior entries of
    ``support`` are quadrature breakpoints.  The fitted exponent is minus the
    log-log slope of |integral| against min |Phi'| on the support of F.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    params = np.asarray(list(param_list), dtype=float)
    lo, hi = float(support[0]), float(support[-1])
    xs = np.linspace(lo, hi, rhs_points)
    ders = _derivatives(F, xs, k)
    on_supp = np.abs(ders[0]) > 0
    dx = xs[1] - xs[0]
    integrals, bounds, mins = [], [], []
    for p in params:
        Phi, dPhi = Phi_family(p)
        g = np.abs(dPhi(xs))
        gmin = float(g[on_supp].min()) if on_supp.any() else float(g.min())
        if gmin <= 1e-12:
            raise ValueError(f"phase gradient vanishes on the support of F (parameter {p})")

        def integrate(n, Phi=Phi):
            x, w = _gl_panels(list(support), n)
            return np.atleast_1d(np.sum(F(x) * np.exp(1j * Phi(x)) * w))

        xq, wq = _gl_panels(list(support), 64)
        floor = max(1.0, float(np.sum(np.abs(F(xq)) * wq)))
        val = _adaptive(integrate, 4, 1 << 14, "oscillatory integral", floor)[0]
        rhs = sum(np.sum(np.abs(d[on_supp]) * g[on_supp] ** (-k)) * dx for d in ders)
        integrals.append(val)
        bounds.append(rhs)
        mins.append(gmin)
    integrals = np.array(integrals)
    mins = np.array(mins)
    ok = np.abs(integrals) > 0
    if ok.sum() >= 2:
        slope = np.polyfit(np.log(mins[ok]), np.log(np.abs(integrals[ok])), 1)[0]
    else:
        slope = -np.inf
    return NonstationaryReport(params, integrals, np.array(bounds), mins, int(k), float(-slope))
