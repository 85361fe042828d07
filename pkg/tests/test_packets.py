import numpy as np
import pytest

from dispersive_lab.packets import DEFAULT_FAMILY, packet_family, packet_probe, verify_packet
from dispersive_lab.phase import builtin_phase

SCHR = builtin_phase("schrodinger")


@pytest.mark.parametrize("name, R", [("schrodinger", 8.0), ("airy", 4.0), ("fractional", 16.0)])
def test_probe_matches_direct_sums(name, R):
    p = builtin_phase(name, a=1.5 if name == "fractional" else None)
    xi0 = 1.5 * R
    beta = 1.0 / np.sqrt(abs(p.hessian_1d(np.array([xi0]))[0]))
    probe = packet_probe(p, R, xi0, beta, 0.5)
    assert verify_packet(probe) == pytest.approx(probe.value, rel=1e-10)


def test_probe_dominates_a_single_time():
    # the sup over times is at least |T_t f| at one time, whose L^2(R) norm is ||f||
    probe = packet_probe(SCHR, 8.0, 12.0, 0.5, 0.0)
    assert probe.value >= 1 - 1e-8
    assert probe.norm > 0
    assert probe.describe()["Nt"] == probe.times.size


def test_focusing_chirp_beats_unchirped_data():
    R, xi0 = 16.0, 24.0
    beta = 2.0 / np.sqrt(2.0)
    flat = packet_probe(SCHR, R, xi0, beta, 0.0)
    focus = packet_probe(SCHR, R, xi0, beta, 0.5)
    assert focus.value > flat.value


def test_packet_family_size_and_bounds():
    probes = list(packet_family(SCHR, 4.0))
    n = len(DEFAULT_FAMILY["centers"]) * len(DEFAULT_FAMILY["widths"]) * len(DEFAULT_FAMILY["delays"])
    assert len(probes) == n
    assert all(2.0 <= p.xi0 <= 8.0 for p in probes)


def test_probe_rejects_bad_input():
    with pytest.raises(ValueError):
        packet_probe(builtin_phase("schrodinger", 2), 4.0, 6.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        packet_probe(SCHR, 4.0, 6.0, 0.0, 0.5)
    with pytest.raises(ValueError, match="curvature"):
        list(packet_family(builtin_phase("wave"), 4.0))
