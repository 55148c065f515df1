import numpy as np
import pytest

from flowmap.fields import DoubleGyreField
from flowmap.flow_maps import (
    extract_hybrid,
    extract_long,
    extract_short,
    load_flow_maps,
    save_flow_maps,
    to_training_samples,
)
from flowmap.seeding import SeedSet, sobol
from flowmap.tracer import TraceConfig

from conftest import constant_field, zero_field

CFG3 = TraceConfig(0.1, 1, 3, 0.0, 1)


def one_seed(x=0.0, y=0.5):
    return SeedSet(points=np.array([[x, y]]), strategy="manual")


def test_long_constant_field_row():
    fms = extract_long(constant_field([1.0, 0.0]), one_seed(), CFG3)
    assert np.allclose(fms.ends[0], [[0.1, 0.5], [0.2, 0.5], [0.3, 0.5]], atol=1e-12)
    assert fms.map_boundaries == []


def test_long_zero_field_stays_at_seed():
    seeds = SeedSet(points=np.array([[0.2, 0.3], [0.4, 0.1]]), strategy="manual")
    fms = extract_long(zero_field(), seeds, CFG3)
    for j in range(3):
        assert np.allclose(fms.ends[:, j, :], seeds.points)


def test_short_constant_field_repeats_displacement():
    fms = extract_short(constant_field([1.0, 0.0]), one_seed(), CFG3)
    assert np.allclose(fms.ends[0], [[0.1, 0.5], [0.1, 0.5], [0.1, 0.5]], atol=1e-12)
    assert fms.map_boundaries == [1, 2]


def test_short_steady_double_gyre_epoch_invariant():
    steady = DoubleGyreField(eps=0.0)
    seeds = sobol(2, 5, steady.domain())
    fms = extract_short(steady, seeds, TraceConfig(0.01, 5, 4, 0.0, 1))
    for j in range(1, 4):
        assert np.allclose(fms.ends[:, j, :], fms.ends[:, 0, :], atol=1e-13)


def test_hybrid_constant_field_two_maps():
    cfg = TraceConfig(0.1, 1, 4, 0.0, 2)
    fms = extract_hybrid(constant_field([1.0, 0.0]), one_seed(), cfg)
    assert np.allclose(
        fms.ends[0], [[0.1, 0.5], [0.2, 0.5], [0.1, 0.5], [0.2, 0.5]], atol=1e-12
    )
    assert fms.map_boundaries == [2]


def test_hybrid_degenerate_identities(double_gyre):
    seeds = sobol(2, 16, double_gyre.domain())
    cfg = TraceConfig(0.01, 5, 8, 0.0, 1)
    long_set = extract_long(double_gyre, seeds, cfg)
    short_set = extract_short(double_gyre, seeds, cfg)
    hyb_n = extract_hybrid(double_gyre, seeds, cfg, samples_per_map=8)
    hyb_1 = extract_hybrid(double_gyre, seeds, cfg, samples_per_map=1)
    assert np.array_equal(hyb_n.ends, long_set.ends)
    assert np.array_equal(hyb_n.valid, long_set.valid)
    assert hyb_n.map_boundaries == long_set.map_boundaries == []
    assert np.array_equal(hyb_1.ends, short_set.ends)
    assert np.array_equal(hyb_1.valid, short_set.valid)
    assert hyb_1.map_boundaries == short_set.map_boundaries


def test_hybrid_requires_divisible_cycles(double_gyre):
    seeds = sobol(2, 4, double_gyre.domain())
    with pytest.raises(ValueError, match="divisible"):
        extract_hybrid(double_gyre, seeds, TraceConfig(0.01, 5, 100, 0.0, 33))


def test_long_matches_fine_step_oracle(double_gyre):
    # independent fine-step advection as oracle for every recorded end
    seeds = sobol(2, 10, double_gyre.domain())
    cfg = TraceConfig(0.01, 5, 20, 0.0, 1)
    fms = extract_long(double_gyre, seeds, cfg)
    from flowmap.tracer import advect_batch

    ref_cfg = TraceConfig(1e-4, 500, 20, 0.0, 1)
    ref_pos, _ = advect_batch(double_gyre, seeds.points, ref_cfg)
    assert np.abs(fms.ends - ref_pos).max() < 1e-6


def test_training_samples_ordering():
    fms = extract_long(constant_field([1.0, 0.0]), one_seed(), TraceConfig(0.1, 1, 2, 0.0, 1))
    starts, cycles, targets, valid = to_training_samples(fms)
    assert starts.shape == (2, 2) and np.allclose(starts, [[0.0, 0.5], [0.0, 0.5]])
    assert cycles.tolist() == [0, 1]
    assert np.allclose(targets, [[0.1, 0.5], [0.2, 0.5]], atol=1e-12)

    seeds = SeedSet(points=np.array([[0.1, 0.5], [0.9, 0.5]]), strategy="manual")
    fms = extract_long(constant_field([1.0, 0.0]), seeds, TraceConfig(0.1, 1, 1, 0.0, 1))
    starts, cycles, targets, valid = to_training_samples(fms)
    assert cycles.tolist() == [0, 0]
    assert np.allclose(starts, seeds.points)


def test_training_samples_bijection(double_gyre):
    seeds = sobol(2, 7, double_gyre.domain())
    fms = extract_long(double_gyre, seeds, TraceConfig(0.01, 5, 5, 0.0, 1))
    starts, cycles, targets, valid = to_training_samples(fms)
    assert starts.shape[0] == 7 * 5 == cycles.size == targets.shape[0] == valid.size
    # sample i*n+j maps back to (seed i, cycle j)
    for i in (0, 3, 6):
        for j in (0, 2, 4):
            k = i * 5 + j
            assert np.array_equal(starts[k], seeds.points[i])
            assert cycles[k] == j
            assert np.array_equal(targets[k], fms.ends[i, j])


def test_save_load_round_trip(tmp_path, double_gyre):
    seeds = sobol(2, 6, double_gyre.domain())
    cfg = TraceConfig(0.01, 5, 6, 0.25, 3)
    fms = extract_hybrid(double_gyre, seeds, cfg)
    path = tmp_path / "maps.json"
    save_flow_maps(fms, path)
    back = load_flow_maps(path)
    assert back.method == fms.method
    assert np.array_equal(back.ends, fms.ends)
    assert back.ends.tobytes() == fms.ends.tobytes()
    assert np.array_equal(back.seeds, fms.seeds)
    assert np.array_equal(back.valid, fms.valid)
    assert back.cfg == fms.cfg
    assert back.map_boundaries == fms.map_boundaries
    assert np.array_equal(back.bounds.min, fms.bounds.min)


def test_npy_layout_of_saved_ends(tmp_path):
    fms = extract_long(constant_field([1.0, 0.0]), one_seed(), CFG3)
    save_flow_maps(fms, tmp_path / "m.json")
    arr = np.load(tmp_path / "m.npy")
    assert arr.shape == (1, 3, 2)
    assert arr.dtype == np.dtype("<f8")
    seeds = np.load(tmp_path / "m.seeds.npy")
    assert seeds.shape == (1, 2)
