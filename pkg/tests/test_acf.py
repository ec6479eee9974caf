import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sosfield.acf import (
    ACF_FUNCTIONS,
    AcfSamples,
    InvalidAcfError,
    exponential_acf,
    gauss_exp_acf,
    sample_acf,
)


@pytest.mark.parametrize(
    "d, expected",
    [(0.0, 1.0), (10.0, math.exp(-1)), (20.0, 0.1353352832366127)],
)
def test_exponential_values(d, expected):
    assert exponential_acf(d, 10.0) == pytest.approx(expected, rel=1e-12)
    assert abs(exponential_acf(10.0, 10.0) - 0.3679) < 1e-4


@pytest.mark.parametrize("d, expected", [(0.0, 1.0), (10.0, math.exp(-1)), (5.0, 0.7788007830714049)])
def test_gauss_exp_values(d, expected):
    assert gauss_exp_acf(d, 10.0) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("func", [exponential_acf, gauss_exp_acf])
@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_non_positive_decorr_rejected(func, bad):
    with pytest.raises(ValueError):
        func(1.0, bad)


def test_scalar_and_vector_forms_agree():
    d = np.array([0.0, 3.0, 12.0])
    np.testing.assert_array_equal(gauss_exp_acf(d, 10.0), [gauss_exp_acf(x, 10.0) for x in d])
    assert isinstance(exponential_acf(2.0, 10.0), float)


def test_gauss_exp_continuity():
    eps = 1e-9
    left = gauss_exp_acf(10.0 - eps, 10.0)
    right = gauss_exp_acf(10.0 + eps, 10.0)
    assert left == pytest.approx(math.exp(-1), abs=1e-8)
    assert right == pytest.approx(math.exp(-1), abs=1e-8)


@pytest.mark.parametrize("name", sorted(ACF_FUNCTIONS))
def test_builtins_strictly_decreasing(name):
    s = sample_acf(ACF_FUNCTIONS[name])
    assert np.all(np.diff(s.correlations) < 0)


def test_sample_acf_reference_grid():
    s = sample_acf(exponential_acf, 10.0, 0.25, 200)
    assert len(s) == 200
    assert s.distances[0] == 0.0
    assert s.distances[-1] == pytest.approx(49.75)
    assert s.d_max == pytest.approx(49.75)
    np.testing.assert_allclose(s.correlations, np.exp(-s.distances / 10.0), rtol=1e-15)


def test_sample_acf_gauss_at_decorr():
    s = sample_acf(gauss_exp_acf, 10.0, 0.25, 200)
    assert s.distances[40] == 10.0
    assert s.correlations[40] == pytest.approx(math.exp(-1), rel=1e-14)
    # Gaussian branch just below
    assert s.correlations[39] == pytest.approx(math.exp(-(9.75 / 10) ** 2), rel=1e-14)


def test_sample_acf_two_samples():
    s = sample_acf(lambda d, dl: math.cos(d), 10.0, 0.5, 2)
    assert len(s) == 2
    assert (s.distances[0], s.correlations[0]) == (0.0, 1.0)


def test_semigroup_property():
    s = sample_acf(exponential_acf, 10.0, 0.25, 200)
    r = s.correlations
    for a in range(0, 100, 7):
        for b in range(0, 100, 11):
            assert abs(r[a] * r[b] - r[a + b]) < 1e-12


@given(st.floats(0.5, 100.0), st.floats(0.01, 2.0), st.integers(2, 300))
@settings(max_examples=40, deadline=None)
def test_sample_acf_invariants(d_lambda, spacing, count):
    s = sample_acf(gauss_exp_acf, d_lambda, spacing, count)
    assert s.distances[0] == 0 and s.correlations[0] == 1
    assert np.all(np.diff(s.distances) > 0)
    assert np.all(np.abs(s.correlations) <= 1)
    np.testing.assert_allclose(s.distances, spacing * np.arange(count))


def test_invalid_acf_at_zero():
    with pytest.raises(InvalidAcfError):
        sample_acf(lambda d, dl: 0.9 * math.exp(-d / dl), 10.0)


def test_invalid_acf_out_of_range():
    with pytest.raises(InvalidAcfError):
        sample_acf(lambda d, dl: 1.0 + 0.1 * d, 10.0)


@pytest.mark.parametrize("spacing, count", [(0.0, 10), (-1.0, 10), (0.25, 1)])
def test_sample_acf_bad_grid(spacing, count):
    with pytest.raises(ValueError):
        sample_acf(exponential_acf, 10.0, spacing, count)


@pytest.mark.parametrize(
    "d, r",
    [
        ([0.5, 1.0], [1.0, 0.5]),  # does not start at zero
        ([0.0, 1.0, 1.0], [1.0, 0.5, 0.4]),  # not strictly increasing
        ([0.0, 1.0], [0.8, 0.5]),  # r[0] != 1
        ([0.0, 1.0], [1.0, -1.5]),  # out of range
    ],
)
def test_acf_samples_invariants(d, r):
    with pytest.raises(ValueError):
        AcfSamples(np.array(d), np.array(r), 1.0)


def test_acf_samples_immutable():
    s = sample_acf(exponential_acf)
    with pytest.raises(ValueError):
        s.correlations[3] = 0.0


def test_evaluate_interpolates_and_zero_beyond():
    s = sample_acf(exponential_acf, 10.0, 1.0, 5)
    assert s.evaluate(0.5) == pytest.approx(0.5 * (1 + math.exp(-0.1)))
    assert s.evaluate(100.0) == 0.0


def test_csv_round_trip(tmp_path):
    s = sample_acf(gauss_exp_acf, 10.0, 0.25, 200, name="gauss-exp")
    path = tmp_path / "acf.csv"
    s.to_csv(path)
    assert path.read_text().splitlines()[0].count(",") == 1
    t = AcfSamples.from_csv(path)
    np.testing.assert_array_equal(t.distances, s.distances)
    np.testing.assert_array_equal(t.correlations, s.correlations)
    # decorrelation distance recovered from the e^-1 crossing
    assert t.decorr_distance == pytest.approx(10.0, abs=0.25)
    assert AcfSamples.from_csv(path, decorr_distance=7.0).decorr_distance == 7.0
