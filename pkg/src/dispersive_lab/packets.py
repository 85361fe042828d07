"""Traveling-chirp probes evaluated in a frame that moves with the group velocity.

A probe is a Gaussian bump in frequency centred at xi0 with width beta,
clipped to A(R) and pre-chirped by exp(-i delta phi~(eta)), where
phi~(eta) = phi(xi0 + eta) - phi(xi0) - v eta and v = phi'(xi0).  Writing
u(x, t) = e^{i(x xi0 + t phi(xi0))} g_t(x + v t), the envelope g_t has
transform g^(eta) exp(i t phi~(eta)).  It stays small and compact, so it
lives on a frame torus far smaller than the torus a global solution would
need, and |u| is exact up to the Gaussian tails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import Field, Grid, Side
from .phase import PhaseFn

__all__ = ["PacketProbe", "packet_probe", "verify_packet", "DEFAULT_FAMILY", "packet_family"]

# (xi0 / R, beta * sqrt|phi''(xi0)|, delta / T_max), identical at every R
DEFAULT_FAMILY = {
    "centers": (1.25, 1.5, 1.75),
    "widths": (0.5, 1.0, 1.5, 2.0),
    "delays": (0.25, 0.5, 0.75),
}

_BAND_SIGMAS = 4.0


@dataclass(eq=False)
class PacketProbe:
    R: float
    xi0: float
    beta: float
    delta: float
    T_max: float
    value: float
    frame: Grid
    ghat: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    velocity: float = 0.0
    times: np.ndarray = field(default=None, repr=False)
    x: np.ndarray = field(default=None, repr=False)
    sup: np.ndarray = field(default=None, repr=False)
    argmax: np.ndarray = field(default=None, repr=False)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.ghat) ** 2) / self.frame.side_length))

    def witness(self) -> Field:
        """Envelope transform on the frame grid; |u(x, t)| = |g_t(x + v t)|."""
        return Field(self.frame, Side.FREQUENCY, self.ghat)

    def describe(self) -> dict:
        return {
            "xi0": self.xi0,
            "beta": self.beta,
            "delta": self.delta,
            "velocity": self.velocity,
            "frame_N": self.frame.n,
            "frame_L": self.frame.side_length,
            "Nt": int(self.times.size),
        }


def _phi1(phase: PhaseFn, xi: np.ndarray) -> np.ndarray:
    return phase(np.asarray(xi, dtype=float)[None])


def _dphi1(phase: PhaseFn, xi) -> np.ndarray:
    return phase.gradient(np.atleast_1d(np.asarray(xi, dtype=float))[None])[0]


def packet_probe(
    phase: PhaseFn,
    R: float,
    xi0: float,
    beta: float,
    delta: float,
    T_max: float = 1.0,
    samples_per_width: float = 8.0,
) -> PacketProbe:
    """Evaluate ||sup_j |T_{t_j} f| ||_{L^2(R)} / ||f||_2 for one traveling chirp."""
    if (phase.dim or 1) != 1:
        raise ValueError("packet probes are implemented in one dimension")
    if beta <= 0:
        raise ValueError("packet width must be positive")
    v = float(_dphi1(phase, xi0)[0])
    band = _BAND_SIGMAS * beta
    probe = np.linspace(-band, band, 401)
    spread = float(np.max(np.abs(_dphi1(phase, xi0 + probe) - v)))
    Ly_min = 2.0 * T_max * spread + 32.0 / beta + 10.0
    dy_max = math.pi / (1.5 * band)
    Ny = max(16, 1 << int(math.ceil(math.log2(Ly_min / dy_max))))
    frame = Grid(1, Ny, max(Ly_min, Ny * dy_max))
    dy = frame.spacing
    eta = frame.xi_axis
    xi = xi0 + eta
    keep = (np.abs(eta) <= band) & (np.abs(xi) >= R / 2) & (np.abs(xi) <= 2 * R)
    residual = _phi1(phase, xi) - _phi1(phase, np.array([xi0]))[0] - v * eta
    ghat = np.where(keep, np.exp(-0.5 * (eta / beta) ** 2) * np.exp(-1j * delta * residual), 0.0)

    Nt = int(math.ceil(samples_per_width * abs(v) * T_max * beta)) + 1
    times = np.arange(1, Nt + 1) * (T_max / Nt)
    shifts = v * times
    ys = np.fft.fftshift(frame.x_axis)
    # x-line on the same lattice as every shifted frame: x_i = ys[0] + (i - kmax) dy
    kmax = int(math.floor(max(shifts.max(), 0.0) / dy))
    kmin = int(math.floor(min(shifts.min(), 0.0) / dy))
    nx = Ny + kmax - kmin
    S = np.full(nx, -1.0)
    arg = np.zeros(nx, dtype=np.int64)
    scale = Ny / frame.side_length
    for j, (t, sh) in enumerate(zip(times, shifts), start=1):
        k = math.floor(sh / dy)
        frac = sh / dy - k
        g = sfft.fftshift(sfft.ifft(ghat * np.exp(1j * (t * residual + eta * frac * dy)))) * scale
        i0 = kmax - k
        seg = np.abs(g)
        view = S[i0 : i0 + Ny]
        upd = seg > view
        view[upd] = seg[upd]
        arg[i0 : i0 + Ny][upd] = j
    covered = S >= 0
    S = np.where(covered, S, 0.0)
    value = float(np.sqrt(dy * np.sum(S**2)) / np.sqrt(np.sum(np.abs(ghat) ** 2) / frame.side_length))
    return PacketProbe(
        R=float(R),
        xi0=float(xi0),
        beta=float(beta),
        delta=float(delta),
        T_max=float(T_max),
        value=value,
        frame=frame,
        ghat=ghat,
        residual=residual,
        velocity=v,
        times=times,
        x=ys[0] + dy * (np.arange(nx) - kmax),
        sup=S,
        argmax=arg,
    )


def verify_packet(p: PacketProbe, chunk: int = 256) -> float:
    """Recompute the probe ratio by direct Fourier sums at every x and its selected time."""
    L = p.frame.side_length
    eta = p.frame.xi_axis
    sel = p.argmax > 0
    xs, js = p.x[sel], p.argmax[sel]
    t = p.times[js - 1]
    vals = np.empty(xs.size)
    for s in range(0, xs.size, chunk):
        y = xs[s : s + chunk] + p.velocity * t[s : s + chunk]
        tt = t[s : s + chunk]
        E = np.exp(1j * (np.outer(y, eta) + np.outer(tt, p.residual)))
        vals[s : s + chunk] = np.abs(E @ p.ghat) / L
    dy = p.frame.spacing
    return float(np.sqrt(dy * np.sum(vals**2)) / p.norm)


def packet_family(phase: PhaseFn, R: float, T_max: float = 1.0, family: dict | None = None):
    """Yield probes over the scale-invariant family; widths use beta ~ |phi''(xi0)|^{-1/2}."""
    fam = family or DEFAULT_FAMILY
    for c in fam["centers"]:
        xi0 = c * R
        curv = float(abs(phase.hessian_1d(np.array([xi0]))[0]))
        if curv <= 1e-12:
            raise ValueError(f"phase {phase.name} has no curvature at xi0={xi0}; packets do not apply")
        for w in fam["widths"]:
            beta = w / math.sqrt(curv)
            for d in fam["delays"]:
                yield packet_probe(phase, R, xi0, beta, d * T_max, T_max)
