import numpy as np
import pytest

from dispersive_lab import grid as G


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per criterion; the lines reappear in the terminal summary."""
    lines = request.config._acceptance_lines

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
        print(line)
        lines.append(line)
        return passed

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def band_limited(grid, rng, kmax):
    F = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return G.Field.frequency(grid, np.where(grid.xi_norm <= kmax, F, 0.0))


def brute_force_maximal(phase, cls, tgrid):
    """Exact maximal operator norm over the whole torus by enumerating every time selection.

    sup_f ||sup_j |T_{t_j} f| || / ||f|| equals the largest top singular value of
    the linearized operator over all maps x -> node.  Feasible only for tiny
    grids (Nt^N selections).
    """
    g = cls.grid
    x = np.stack([c.ravel() for c in g.x], axis=1)
    xi, phi = cls.xi, cls.phi(phase)
    scale = (g.spacing / g.side_length) ** (g.dim / 2)
    A = np.stack([scale * np.exp(1j * (x @ xi.T + t * phi[None])) for t in tgrid.nodes])
    P, Nt = x.shape[0], tgrid.count
    codes = np.arange(Nt**P)
    pats = (codes[:, None] // Nt ** np.arange(P)[None]) % Nt
    best = 0.0
    for s in range(0, codes.size, 8192):
        M = A[pats[s : s + 8192], np.arange(P)[None]]
        best = max(best, float(np.linalg.svd(M, compute_uv=False)[:, 0].max()))
    return best
