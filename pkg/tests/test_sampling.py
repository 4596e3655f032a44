import io

import numpy as np
import pytest

from ggmstruct.exceptions import FactorizationFailure, InsufficientSamples
from ggmstruct.sampling import (
    MeanMode,
    SampleSet,
    covariance_root,
    empirical_covariance,
    read_samples_csv,
    sample,
    write_samples_csv,
)


def test_same_seed_is_bit_identical(triangle10):
    a = sample(triangle10, 50, seed=123)
    b = sample(triangle10, 50, seed=123)
    assert a.data.tobytes() == b.data.tobytes()
    c = sample(triangle10, 50, seed=124)
    assert not np.array_equal(a.data, c.data)


def test_root_squares_to_sigma(regular10):
    root = covariance_root(regular10.sigma)
    np.testing.assert_allclose(root @ root, regular10.sigma, atol=1e-10)
    np.testing.assert_allclose(root, root.T, atol=0)


def test_root_of_semidefinite():
    v = np.array([1.0, 1.0])
    root = covariance_root(np.outer(v, v))
    np.testing.assert_allclose(root @ root, np.outer(v, v), atol=1e-12)


def test_indefinite_rejected():
    with pytest.raises(FactorizationFailure):
        covariance_root(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(FactorizationFailure):
        covariance_root(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_empirical_covariance_converges(three_node):
    s = sample(three_node, 200_000, seed=5)
    est = empirical_covariance(s)
    assert est.n == 200_000
    np.testing.assert_allclose(est.sigma_hat, three_node.sigma, atol=0.05 * np.abs(three_node.sigma).max())


def test_known_mean_vs_centered():
    x = np.array([[1.0, 2.0], [3.0, 5.0], [-1.0, 0.5]])
    known = empirical_covariance(SampleSet(x)).sigma_hat
    np.testing.assert_allclose(known, x.T @ x / 3)
    cen = empirical_covariance(SampleSet(x, mean_mode=MeanMode.CENTERED)).sigma_hat
    np.testing.assert_allclose(cen, np.cov(x, rowvar=False))


def test_centered_needs_two_rows():
    with pytest.raises(InsufficientSamples):
        empirical_covariance(SampleSet(np.ones((1, 3)), mean_mode="centered"))


def test_nonzero_mean(three_node):
    shifted = three_node.with_mean(np.array([5.0, -2.0, 1.0]))
    s = sample(shifted, 20_000, seed=1, mean_mode="centered")
    np.testing.assert_allclose(s.data.mean(axis=0), [5.0, -2.0, 1.0], atol=0.1)
    est = empirical_covariance(s).sigma_hat
    np.testing.assert_allclose(est, three_node.sigma, atol=0.15 * np.abs(three_node.sigma).max())


@pytest.mark.parametrize("header", [False, True])
def test_csv_roundtrip(tmp_path, triangle10, header):
    s = sample(triangle10, 7, seed=9)
    path = tmp_path / "x.csv"
    write_samples_csv(s, path, header=header)
    back = read_samples_csv(path)
    assert back.data.tobytes() == s.data.tobytes()


def test_csv_to_stream(three_node):
    buf = io.StringIO()
    write_samples_csv(sample(three_node, 2, seed=0), buf, header=True)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x1,x2,x3" and len(lines) == 3


def test_bad_inputs(three_node):
    with pytest.raises(ValueError):
        sample(three_node, 0)
    with pytest.raises(ValueError):
        SampleSet(np.ones(3))
