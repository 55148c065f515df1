import math

import numpy as np
import pytest

from flowmap.fields import DomainBounds, GriddedField
from flowmap.tracer import TraceConfig, advect, advect_batch, convergence_order, rk4_step

from conftest import constant_field, zero_field


def reference_rk4(velocity, p, t0, t1, steps):
    """Independent fixed-step RK4 used as the fine-step oracle."""
    p = np.asarray(p, dtype=np.float64).copy()
    h = (t1 - t0) / steps
    t = t0
    for k in range(steps):
        t = t0 + k * h
        k1 = velocity(p, t)
        k2 = velocity(p + 0.5 * h * k1, t + 0.5 * h)
        k3 = velocity(p + 0.5 * h * k2, t + 0.5 * h)
        k4 = velocity(p + h * k3, t + h)
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def test_rk4_zero_field_identity():
    f = zero_field()
    p = np.array([0.3, 0.4])
    assert np.array_equal(rk4_step(f, p, 0.0, 0.1), p)


def test_rk4_constant_field_exact():
    f = constant_field([1.0, 0.0])
    out = rk4_step(f, np.array([0.0, 0.0]), 0.0, 0.1)
    assert np.allclose(out, [0.1, 0.0], atol=1e-15)


def test_rk4_exact_for_cubic_time_polynomial():
    # v(t) = (3t^2, 2t - 1) integrates exactly under RK4
    class PolyField:
        dim = 2

        def domain(self):
            return DomainBounds(np.array([-10.0, -10.0]), np.array([10.0, 10.0]))

        def max_time(self):
            return math.inf

        def velocity_batch(self, pts, t):
            out = np.empty_like(np.atleast_2d(pts))
            out[:, 0] = 3 * t * t
            out[:, 1] = 2 * t - 1
            return out

    f = PolyField()
    p = rk4_step(f, np.array([0.0, 0.0]), 0.0, 0.7)
    assert np.allclose(p, [0.7 ** 3, 0.7 ** 2 - 0.7], atol=1e-12)


def test_rk4_double_gyre_matches_fine_oracle(double_gyre):
    p0 = np.array([1.0, 0.5])
    coarse = rk4_step(double_gyre, p0, 0.0, 0.01)
    fine = reference_rk4(lambda p, t: double_gyre.velocity(p, t), p0, 0.0, 0.01, 1000)
    assert np.linalg.norm(coarse - fine) < 1e-10  # O(delta^4) headroom


def test_advect_zero_field():
    f = zero_field()
    tr = advect(f, np.array([0.25, 0.5]), TraceConfig(0.1, 2, 4, 0.0, 1))
    assert np.allclose(tr.positions, [0.25, 0.5])
    assert tr.valid.all()


def test_advect_constant_field_records_file_cycles():
    f = constant_field([1.0, 0.0])
    tr = advect(f, np.array([0.0, 0.5]), TraceConfig(0.1, 1, 3, 0.0, 1))
    assert np.allclose(tr.positions, [[0.1, 0.5], [0.2, 0.5], [0.3, 0.5]], atol=1e-12)


def test_advect_matches_fine_oracle(double_gyre):
    cfg = TraceConfig(0.01, 5, 40, 0.0, 1)
    seed = np.array([0.5, 0.5])
    tr = advect(double_gyre, seed, cfg)
    vel = lambda p, t: double_gyre.velocity(p, t)
    for j in (0, 19, 39):
        t1 = (j + 1) * cfg.file_cycle_dt
        ref = reference_rk4(vel, seed, 0.0, t1, int(t1 / 1e-4))
        assert np.linalg.norm(tr.positions[j] - ref) < 1e-6


def test_advect_compositionality(double_gyre):
    # I=1 with n file cycles visits exactly the per-cycle rk4 states
    cfg = TraceConfig(0.01, 1, 12, 0.0, 1)
    seed = np.array([1.2, 0.4])
    tr = advect(double_gyre, seed, cfg)
    p = seed.copy()
    for j in range(12):
        p = rk4_step(double_gyre, p, cfg.t0 + j * cfg.delta, cfg.delta)
        assert np.array_equal(tr.positions[j], p)
        p = tr.positions[j]


def test_seed_outside_domain_rejected(double_gyre):
    with pytest.raises(ValueError, match="seed out of domain"):
        advect(double_gyre, np.array([3.0, 0.5]), TraceConfig(0.01, 1, 1, 0.0, 1))


def test_freeze_and_flag_on_exit():
    bounds = DomainBounds(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    f = constant_field([1.0, 0.0], bounds=bounds, nodes=3)
    tr = advect(f, np.array([0.75, 0.5]), TraceConfig(0.1, 1, 5, 0.0, 1))
    # exits after two steps (0.85, 0.95, then 1.05 is out)
    assert tr.valid.tolist() == [True, True, False, False, False]
    frozen = tr.positions[1]
    assert np.allclose(frozen, [0.95, 0.5])
    assert np.array_equal(tr.positions[2], frozen)
    assert np.array_equal(tr.positions[4], frozen)


def test_gridded_time_exhaustion_flags_invalid():
    bounds = DomainBounds(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    data = np.zeros((2, 2, 2, 2))
    f = GriddedField(bounds, 0.1, data)  # usable t range [0, 0.1]
    tr = advect(f, np.array([0.5, 0.5]), TraceConfig(0.05, 1, 4, 0.0, 1))
    assert tr.valid.tolist() == [True, True, False, False]


def test_double_gyre_never_flags_invalid(double_gyre):
    from flowmap.seeding import sobol

    seeds = sobol(2, 50, double_gyre.domain()).points
    _, valid = advect_batch(double_gyre, seeds, TraceConfig(0.01, 5, 60, 0.0, 1))
    assert valid.all()


def test_convergence_order_double_gyre(double_gyre):
    order = convergence_order(double_gyre, np.array([1.2, 0.3]), 0.0, 1.0)
    assert 3.5 <= order <= 4.5


def test_convergence_order_abc(abc_field):
    order = convergence_order(abc_field, np.array([1.0, 1.0, 1.0]), 0.0, 1.0)
    assert 3.5 <= order <= 4.5


def test_convergence_order_constant_field_exact():
    f = constant_field([0.7, -0.2])
    assert math.isinf(convergence_order(f, np.array([0.0, 0.0]), 0.0, 1.0))


def test_valid_monotone_non_increasing():
    bounds = DomainBounds(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    f = constant_field([1.0, 0.3], bounds=bounds, nodes=3)
    seeds = np.array([[0.1, 0.1], [0.5, 0.5], [0.9, 0.9]])
    _, valid = advect_batch(f, seeds, TraceConfig(0.05, 2, 8, 0.0, 1))
    diffs = valid[:, 1:].astype(int) - valid[:, :-1].astype(int)
    assert (diffs <= 0).all()
