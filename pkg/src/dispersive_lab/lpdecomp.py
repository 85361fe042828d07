"""Smooth dyadic partition of unity on frequency space.

chi is a radial bump equal to 1 on |xi| <= 1 and 0 on |xi| >= 2, built from
h(t) = exp(-1/t).  lambda(xi) = chi(xi) - chi(2 xi) lives on 1/2 <= |xi| <= 2 and
psi_0 = chi, psi_k(xi) = lambda(2^-k xi) sum to one.
"""
from __future__ import annotations

import numpy as np

from .grid import Field, Side, forward_transform, inverse_transform

__all__ = ["chi", "lambda_fn", "psi_k", "project", "theta_split", "LPError"]


class LPError(ValueError):
    pass


def _h(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _radius(xi) -> np.ndarray:
    if isinstance(xi, (tuple, list)):
        return np.sqrt(sum(np.asarray(c, dtype=float) ** 2 for c in xi))
    return np.abs(np.asarray(xi, dtype=float))


def chi_radial(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    a = _h(2.0 - r)
    b = _h(r - 1.0)
    out = np.where(r <= 1.0, 1.0, 0.0)
    mid = (r > 1.0) & (r < 2.0)
    out = out.astype(float)
    out[mid] = a[mid] / (a[mid] + b[mid])
    return out


def chi(xi) -> np.ndarray:
    """chi evaluated at |xi|; xi is an array or a tuple of coordinate arrays."""
    return chi_radial(_radius(xi))


def lambda_radial(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return chi_radial(r) - chi_radial(2.0 * r)


def lambda_fn(xi) -> np.ndarray:
    return lambda_radial(_radius(xi))


def psi_k(xi, k: int) -> np.ndarray:
    if int(k) != k or k < 0:
        raise LPError(f"k must be a non-negative integer, got {k}")
    r = _radius(xi)
    if k == 0:
        return chi_radial(r)
    return lambda_radial(r / 2.0**k)


def project(f: Field, k: int) -> Field:
    """P_k f, returned on the same side as f."""
    F = f if f.side is Side.FREQUENCY else forward_transform(f)
    out = F.with_values(F.values * psi_k(F.grid.xi, k))
    return out if f.side is Side.FREQUENCY else inverse_transform(out)


def theta_split(xi) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(theta, theta_1, theta_2, theta_3) with theta_1 = lambda(2 xi),
    theta_2 = lambda(xi), theta_3 = lambda(xi/2) and theta their sum.

    theta equals 1 on {1/2 <= |xi| <= 2} and vanishes off {1/4 < |xi| < 4}.
    """
    r = _radius(xi)
    t1, t2, t3 = lambda_radial(2.0 * r), lambda_radial(r), lambda_radial(r / 2.0)
    return t1 + t2 + t3, t1, t2, t3
