"""Sobolev norms, L^p ratios and a dyadic Hardy-Littlewood maximal function."""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .grid import Field, GridError, Region, Side, forward_transform, restrict_norm, to_space
from .propagator import japanese

__all__ = ["sobolev_norm", "hl_maximal", "lp_ratio_report"]


def sobolev_norm(f: Field, s: float) -> float:
    """(2 pi)^{-n/2} || <xi>^s f^ ||_2 with <xi> = (1 + |xi|^2)^{1/2}."""
    F = f if f.side is Side.FREQUENCY else forward_transform(f)
    g = F.grid
    weighted = np.abs(F.values) * japanese(g.xi) ** float(s)
    dxi = g.freq_spacing**g.dim
    return float(np.sqrt(dxi * np.sum(weighted**2)) / (2 * np.pi) ** (g.dim / 2))


def _dyadic_radii(grid) -> list[float]:
    h, half = grid.spacing, grid.side_length / 2
    out, r = [], h
    while r <= half * (1 + 1e-12):
        out.append(r)
        r *= 2
    return out


def _ball_average_1d(a: np.ndarray, m: int) -> np.ndarray:
    """Mean of a over the 2m - 1 periodic neighbours j with |j - i| < m."""
    n = a.size
    if 2 * m - 1 >= n:
        return np.full(n, a.mean())
    ext = np.concatenate([a[n - (m - 1):] if m > 1 else a[:0], a, a[: m - 1]])
    c = np.concatenate([[0.0], np.cumsum(ext)])
    width = 2 * m - 1
    return (c[width:] - c[:-width])[:n] / width


def hl_maximal(f: Field) -> Field:
    """Mf(x) = max over r in {h, 2h, ..., L/2} of the mean of |f| over the open ball B(x, r).

    The open ball of radius h contains only x itself, so Mf >= |f|.  One
    dimension uses periodic prefix sums; two dimensions use an FFT circular
    convolution with the lattice disk of each radius.
    """
    if f.side is not Side.SPACE:
        f = to_space(f)
    g = f.grid
    a = np.abs(f.values)
    best = a.copy()
    if g.dim == 1:
        for r in _dyadic_radii(g)[1:]:
            m = int(round(r / g.spacing))
            np.maximum(best, _ball_average_1d(a, m), out=best)
    else:
        A = sfft.rfftn(a)
        dist = g.x_norm
        for r in _dyadic_radii(g)[1:]:
            disk = (dist < r * (1 - 1e-12)).astype(float)
            avg = sfft.irfftn(A * sfft.rfftn(disk), s=g.shape) / disk.sum()
            np.maximum(best, avg, out=best)
    return Field(g, Side.SPACE, best)


def lp_ratio_report(op_output: Field, input: Field, p: float, region: Region | None = None) -> float:
    """||op_output||_{L^p(region)} / ||input||_{L^p(all)}."""
    if op_output.grid != input.grid:
        raise GridError("output and input live on different grids")
    region = region or Region.everything()
    den = restrict_norm(to_space(input), Region.everything(), p)
    if den == 0:
        raise ZeroDivisionError("input has zero L^p norm")
    return restrict_norm(to_space(op_output), region, p) / den
