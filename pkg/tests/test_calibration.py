import numpy as np
import pytest

from qvs import (alpha_m, bounding_sequence, calibrate, load_calibration,
                 simulate_vm_path, simulate_vm_uniform)
from qvs.calibration import CACHE_FILENAME, vm_from_q
from qvs.rand import substream


class ForcedDraws:
    """Stub stream handing out a fixed uniform sample."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def uniform(self, size):
        assert size == len(self.values)
        return self.values.copy()


# --- alpha_m

def test_alpha_m_formula():
    for m in (2, 7, 55, 199, 5000):
        assert alpha_m(m) == pytest.approx(1.0 / np.sqrt(np.log(m)),
                                           abs=1e-15)
    assert alpha_m(199) == pytest.approx(0.43466, abs=2e-5)
    assert alpha_m(2) == pytest.approx(1.20112, abs=2e-5)


def test_alpha_m_rejects_small_m():
    for m in (1, 0, -3):
        with pytest.raises(ValueError, match="m >= 2"):
            alpha_m(m)


# --- simulate_vm_uniform

def test_vm_uniform_single_point():
    assert simulate_vm_uniform(1, ForcedDraws([0.5])) == pytest.approx(1.0)


def test_vm_uniform_two_points():
    v = simulate_vm_uniform(2, ForcedDraws([0.1, 0.2]))
    assert v == pytest.approx(2.0)
    # unsorted input gives the same answer (order statistics)
    assert simulate_vm_uniform(2, ForcedDraws([0.2, 0.1])) == pytest.approx(2.0)


def test_vm_uniform_finite():
    rng = np.random.default_rng(0)
    vals = [simulate_vm_uniform(37, rng) for _ in range(50)]
    assert np.all(np.isfinite(vals))
    with pytest.raises(ValueError, match="positive"):
        simulate_vm_uniform(0, rng)


# --- simulate_vm_path

def test_vm_path_deterministic():
    a = simulate_vm_path(50, 100, "identity", substream(4, 1, 0))
    b = simulate_vm_path(50, 100, "identity", substream(4, 1, 0))
    assert a == b
    assert np.isfinite(a)


def test_vm_path_boundary_shape():
    v = simulate_vm_path(3, 2, "identity", substream(5, 1, 0))
    assert np.isfinite(v) or v == -np.inf


def test_vm_path_validation():
    with pytest.raises(ValueError, match="n >= 3"):
        simulate_vm_path(2, 5, "identity", substream(0, 1, 0))


def _vm_samples(n, p, reps, seed):
    return np.array([simulate_vm_path(n, p, "identity", substream(seed, 1, i))
                     for i in range(reps)])


@pytest.mark.xfail(
    strict=True,
    reason="at this problem size the null-path V_m law sits well below the "
    "uniform-process law (measured 0.4-quantile gap ~0.24, tolerance 0.15): "
    "the deviations are the half-path restriction plus finite-sample bias "
    "of the deep-path covariance statistics")
def test_vm_path_quantile_matches_uniform_oracle():
    vms = _vm_samples(100, 200, 500, seed=7)
    rng = np.random.default_rng(5)
    uniform = np.array([simulate_vm_uniform(99, rng) for _ in range(2000)])
    gap = abs(np.quantile(vms, 0.4) - np.quantile(uniform, 0.4))
    assert gap <= 0.15


def test_vm_path_sits_below_uniform_oracle():
    # regression guard for the measured ordering behind the xfail above
    vms = _vm_samples(100, 200, 200, seed=8)
    rng = np.random.default_rng(5)
    uniform = np.array([simulate_vm_uniform(99, rng) for _ in range(2000)])
    assert np.median(vms) < np.median(uniform)
    assert np.all(np.isfinite(vms))


def test_vm_from_q_half_range():
    # m = 4: only i in {1, 2} count
    q = np.array([0.1, 0.3, 0.9, 0.99])
    i = np.arange(1, 3)
    expected = np.max((i / 4 - q[:2]) / np.sqrt(q[:2] * (1 - q[:2])))
    assert vm_from_q(q) == pytest.approx(expected)
    assert vm_from_q(np.array([0.5])) == -np.inf


# --- bounding_sequence

def test_bounding_sequence_rank_convention():
    # rank rule ceil((1 - alpha) N), ascending: at N = 100, alpha = 0.2
    # the 80th smallest; alpha = 1 clamps to the minimum
    assert bounding_sequence(np.arange(1.0, 101.0), 0.2) == 80.0
    assert bounding_sequence(np.arange(1.0, 101.0), 1.0) == 1.0
    # same convention on repeated copies of 1..10: still the 0.8 quantile
    reps = np.concatenate([np.arange(1.0, 11.0)] * 10)
    assert bounding_sequence(reps, 0.2) == 8.0


def test_bounding_sequence_validation():
    with pytest.raises(ValueError, match="100 samples"):
        bounding_sequence(np.arange(50.0), 0.5)
    with pytest.raises(ValueError, match="alpha"):
        bounding_sequence(np.arange(100.0), 0.0)
    with pytest.raises(ValueError, match="alpha"):
        bounding_sequence(np.arange(100.0), 1.5)


def test_bounding_sequence_monotone_in_alpha():
    rng = np.random.default_rng(6)
    samples = rng.standard_normal(500)
    values = [bounding_sequence(samples, a)
              for a in (0.05, 0.2, 0.4, 0.6, 0.9, 1.0)]
    assert np.all(np.diff(values) <= 0)


# --- calibrate and its cache

def test_calibrate_uniform_stability_across_seeds():
    cs = [calibrate(200, 2000, reps=1000, method="uniform-oracle",
                    seed=s).c_m for s in (1, 2, 3)]
    assert max(cs) - min(cs) <= 0.1
    assert all(c > 0 for c in cs)


def test_calibrate_cache_roundtrip(tmp_path):
    cache = str(tmp_path)
    rec1 = calibrate(60, 40, design="identity", reps=120,
                     method="uniform-oracle", seed=9, cache_dir=cache)
    content1 = (tmp_path / CACHE_FILENAME).read_bytes()
    rec2 = calibrate(60, 40, design="identity", reps=120,
                     method="uniform-oracle", seed=9, cache_dir=cache)
    assert rec1 == rec2
    assert (tmp_path / CACHE_FILENAME).read_bytes() == content1
    line = content1.decode().strip().split("\t")
    assert len(line) == 9
    assert line[0] == "40" and line[3] == "identity"
    found = load_calibration(cache, 60, 40, "identity", "uniform-oracle")
    assert found == rec1
    assert load_calibration(cache, 61, 40, "identity", "uniform-oracle") is None


def test_calibrate_cache_replaced_on_new_settings(tmp_path):
    cache = str(tmp_path)
    rec1 = calibrate(30, 20, reps=100, method="uniform-oracle", seed=1,
                     cache_dir=cache)
    rec2 = calibrate(30, 20, reps=150, method="uniform-oracle", seed=1,
                     cache_dir=cache)
    assert rec2.reps == 150
    stored = load_calibration(cache, 30, 20, "identity", "uniform-oracle")
    assert stored == rec2 != rec1


def test_calibrate_null_path_stability():
    cs = [calibrate(60, 50, reps=200, method="null-path", seed=s).c_m
          for s in (1, 2)]
    assert abs(cs[0] - cs[1]) <= 0.1


def test_calibrate_validation():
    with pytest.raises(ValueError, match="reps"):
        calibrate(30, 20, reps=50, method="uniform-oracle")
    with pytest.raises(ValueError, match="method"):
        calibrate(30, 20, reps=100, method="bootstrap")


def test_calibrate_alpha_clamped_for_tiny_m():
    # m = 2: alpha_m > 1 is recorded raw but clamped as a percentile,
    # so c_m is the sample minimum
    rec = calibrate(3, 2, reps=100, method="uniform-oracle", seed=2)
    assert rec.m == 2
    assert rec.alpha_m == pytest.approx(1.20112, abs=5e-6)
    draws = [simulate_vm_uniform(2, substream(2, 101, i)) for i in range(100)]
    assert rec.c_m == pytest.approx(min(draws))


def test_calibrate_threads_deterministic():
    a = calibrate(30, 20, reps=100, method="uniform-oracle", seed=5)
    b = calibrate(30, 20, reps=100, method="uniform-oracle", seed=5,
                  threads=2)
    assert a == b
