"""Positively homogeneous phase functions phi(xi) and their structural constants.

A phase is evaluated on stacked coordinates: ``xi`` has shape ``(dim, ...)``
and ``grad`` returns the same shape.  All built-ins have closed forms; user
phases may omit the gradient, in which case central differences are used.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PhaseFn",
    "PhaseConstants",
    "PhaseCheckReport",
    "PhaseError",
    "builtin_phase",
    "parse_phase",
    "check_homogeneity",
    "derived_constants",
    "check_derivative_bounds",
    "phase_on_grid",
]

_EPS = np.finfo(float).eps


class PhaseError(ValueError):
    """Unknown phase, bad parameters, or a violated phase condition."""


@dataclass(frozen=True, eq=False)
class PhaseFn:
    name: str
    degree: float
    eval: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    grad: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    dim: int | None = None
    # (m, M) on the unit sphere when known in closed form
    sphere_grad: tuple[float, float] | None = field(default=None, repr=False)
    builtin: bool = False

    def __call__(self, xi) -> np.ndarray:
        return self.eval(np.asarray(xi, dtype=float))

    def gradient(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.grad is not None:
            return self.grad(xi)
        return _fd_gradient(self.eval, xi)

    def hessian_1d(self, xi) -> np.ndarray:
        """phi'' for one-dimensional phases, by central differences of the gradient."""
        xi = np.asarray(xi, dtype=float)
        d = 1e-4 * np.maximum(np.abs(xi), 1e-3)
        g = lambda s: self.gradient(s[None])[0]
        return (g(xi + d) - g(xi - d)) / (2 * d)

    @property
    def spec(self) -> str:
        if self.name == "fractional":
            return f"fractional:a={self.degree:g}"
        return self.name


def _fd_gradient(fn, xi: np.ndarray) -> np.ndarray:
    r = np.sqrt(np.sum(xi**2, axis=0))
    step = 1e-6 * np.maximum(r, 1e-3)
    out = np.empty_like(xi)
    for i in range(xi.shape[0]):
        e = np.zeros_like(xi)
        e[i] = step
        out[i] = (fn(xi + e) - fn(xi - e)) / (2 * step)
    return out


def _radial_power(a: float, name: str, dim: int) -> PhaseFn:
    def ev(xi):
        r2 = np.sum(xi**2, axis=0)
        if a == 2:
            return r2
        return np.sqrt(r2) ** a

    def gr(xi):
        r = np.sqrt(np.sum(xi**2, axis=0))
        if a == 2:
            return 2.0 * xi
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(r > 0, a * r ** (a - 2.0), 0.0)
        return coef * xi

    return PhaseFn(name, float(a), ev, gr, dim, (float(a), float(a)), True)


def _airy() -> PhaseFn:
    return PhaseFn(
        "airy",
        3.0,
        lambda xi: xi[0] ** 3,
        lambda xi: 3.0 * xi**2,
        1,
        (3.0, 3.0),
        True,
    )


def builtin_phase(name: str, dim: int = 1, a: float | None = None) -> PhaseFn:
    """wave |xi|, schrodinger |xi|^2, fractional |xi|^a (a >= 1) and airy xi^3."""
    if dim not in (1, 2):
        raise PhaseError(f"dim must be 1 or 2, got {dim}")
    if name == "wave":
        return _radial_power(1.0, "wave", dim)
    if name == "schrodinger":
        return _radial_power(2.0, "schrodinger", dim)
    if name == "fractional":
        if a is None:
            raise PhaseError("fractional phase needs a degree a")
        if a < 1:
            raise PhaseError(f"fractional degree must satisfy a >= 1, got {a}")
        return _radial_power(float(a), "fractional", dim)
    if name == "airy":
        if dim != 1:
            raise PhaseError("the airy phase xi^3 is only defined in one dimension")
        return _airy()
    raise PhaseError(f"unknown phase {name!r}")


_FRACTIONAL = re.compile(r"^fractional\s*[:(]\s*(?:a\s*=\s*)?([0-9.eE+-]+)\s*\)?$")


def parse_phase(text: str, dim: int = 1) -> PhaseFn:
    """Parse CLI phase strings such as ``schrodinger`` or ``fractional:a=1.5``."""
    text = text.strip().lower()
    m = _FRACTIONAL.match(text)
    if m:
        try:
            a = float(m.group(1))
        except ValueError as exc:
            raise PhaseError(f"bad fractional degree in {text!r}") from exc
        return builtin_phase("fractional", dim, a)
    return builtin_phase(text, dim)


def phase_on_grid(phase: PhaseFn, xi: tuple[np.ndarray, ...]) -> np.ndarray:
    """phi on stacked grid coordinates with phi(0) := 0."""
    stack = np.stack(xi)
    zero = np.sum(stack**2, axis=0) == 0
    with np.errstate(all="ignore"):
        vals = np.asarray(phase(stack), dtype=float)
    vals = np.where(zero, 0.0, vals)
    if not np.all(np.isfinite(vals)):
        raise PhaseError(f"phase {phase.name} is not finite on the grid away from the origin")
    return vals


def _unit_directions(dim: int, count: int, rng=None) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0, -1.0]])
    if rng is None:
        theta = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
    else:
        theta = rng.uniform(0.0, 2 * np.pi, count)
    return np.stack([np.cos(theta), np.sin(theta)])


def _phase_dim(phase: PhaseFn, dim: int | None) -> int:
    return dim or phase.dim or 1


def check_homogeneity(phase: PhaseFn, sample_count: int = 256, rng_seed: int = 0, dim: int | None = None) -> float:
    """Largest relative defect of phi(r xi) = r^a phi(xi) over random (r, xi)."""
    if sample_count < 1:
        raise PhaseError("sample_count must be >= 1")
    dim = _phase_dim(phase, dim)
    rng = np.random.default_rng(rng_seed)
    radii = np.exp(rng.uniform(np.log(0.1), np.log(10.0), sample_count))
    scales = np.exp(rng.uniform(np.log(0.1), np.log(10.0), sample_count))
    if dim == 1:
        dirs = rng.choice([-1.0, 1.0], sample_count)[None]
    else:
        dirs = _unit_directions(2, sample_count, rng)
    xi = dirs * radii
    a = phase.degree
    lhs = phase(scales * xi)
    rhs = scales**a * phase(xi)
    dev = np.abs(lhs - rhs) / (np.abs(rhs) + _EPS)
    return float(np.max(dev))


@dataclass(frozen=True)
class PhaseConstants:
    m: float
    M: float
    kappa: float

    def as_dict(self) -> dict:
        return {"m": self.m, "M": self.M, "kappa": self.kappa}


def derived_constants(phase: PhaseFn, sphere_samples: int = 1024, dim: int | None = None) -> PhaseConstants:
    """m = min and M = max of |grad phi| on the unit sphere, and kappa = 4^a M."""
    if sphere_samples < 64:
        raise PhaseError("sphere_samples must be >= 64")
    dim = _phase_dim(phase, dim)
    if phase.sphere_grad is not None:
        m, M = phase.sphere_grad
    else:
        dirs = _unit_directions(dim, sphere_samples)
        g = np.sqrt(np.sum(phase.gradient(dirs) ** 2, axis=0))
        m, M = float(g.min()), float(g.max())
    if m <= 1e-9:
        raise PhaseError(f"min |grad phi| on the unit sphere is {m:.3g}; the phase is degenerate")
    return PhaseConstants(float(m), float(M), float(4.0**phase.degree * M))


@dataclass
class PhaseCheckReport:
    homogeneity_dev: float
    derivative_bound_consts: dict[int, float]
    min_grad: float
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _partials(phase: PhaseFn, xi: np.ndarray, order: int) -> list[np.ndarray]:
    """All partial derivatives of the given order by central differences, step 1e-4 |xi|."""
    dim = xi.shape[0]
    step = 1e-4 * np.sqrt(np.sum(xi**2, axis=0))
    if order == 0:
        return [phase(xi)]
    if order == 1:
        out = []
        for i in range(dim):
            e = np.zeros_like(xi)
            e[i] = step
            out.append((phase(xi + e) - phase(xi - e)) / (2 * step))
        return out
    if order == 2:
        out = []
        f0 = phase(xi)
        for i in range(dim):
            for j in range(i, dim):
                ei = np.zeros_like(xi)
                ei[i] = step
                if i == j:
                    out.append((phase(xi + ei) - 2 * f0 + phase(xi - ei)) / step**2)
                else:
                    ej = np.zeros_like(xi)
                    ej[j] = step
                    out.append(
                        (phase(xi + ei + ej) - phase(xi + ei - ej) - phase(xi - ei + ej) + phase(xi - ei - ej))
                        / (4 * step**2)
                    )
        return out
    raise PhaseError("derivative checks are implemented for |alpha| <= 2")


def check_derivative_bounds(phase: PhaseFn, max_order: int = 2, dim: int | None = None) -> PhaseCheckReport:
    """Estimate C_alpha = sup |d^alpha phi(xi)| |xi|^{|alpha| - a} for |alpha| <= max_order.

    Samples sit on dyadic shells 1e-2 <= |xi| <= 1e2; a homogeneous phase gives
    the same supremum on every shell, so growth across shells is reported as
    a violation of the symbol bound.
    """
    dim = _phase_dim(phase, dim)
    a = phase.degree
    radii = np.logspace(-2, 2, 9)
    if dim == 1:
        dirs = np.array([[1.0, -1.0]])
    else:
        theta = np.concatenate([np.linspace(0, 2 * np.pi, 64, endpoint=False), [0.0, np.pi / 2]])
        dirs = np.stack([np.cos(theta), np.sin(theta)])
    consts: dict[int, float] = {}
    violations = []
    for order in range(max_order + 1):
        per_shell = []
        for r in radii:
            xi = dirs * r
            ders = _partials(phase, xi, order)
            sup = max(float(np.max(np.abs(d))) for d in ders)
            per_shell.append(sup * r ** (order - a))
        per_shell = np.array(per_shell)
        consts[order] = float(per_shell.max())
        if per_shell.max() > 10 * per_shell.min() + 1e-6:
            violations.append(
                f"|alpha|={order}: ratio grows from {per_shell.min():.3g} to {per_shell.max():.3g} across shells"
            )
    try:
        min_grad = derived_constants(phase, dim=dim).m
    except PhaseError as exc:
        min_grad = 0.0
        violations.append(str(exc))
    dev = check_homogeneity(phase, dim=dim)
    return PhaseCheckReport(dev, consts, min_grad, violations)


def degree_label(a: float) -> str:
    return f"{a:g}" if not math.isclose(a, round(a)) else str(int(round(a)))
