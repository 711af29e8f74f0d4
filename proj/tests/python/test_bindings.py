"""Smoke tests for the rimle extension module."""

import numpy as np
import pytest

import rimle


def two_clusters(n=300, separation=8.0, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    data = np.vstack(
        [
            rng.normal(0.0, 1.0, size=(half, 2)),
            rng.normal(separation, 1.0, size=(n - half, 2)),
        ]
    )
    truth = [1] * half + [2] * (n - half)
    return data, truth


def test_fit_recovers_well_separated_clusters():
    data, truth = two_clusters()
    out = rimle.fit(data, 2, log_delta=-9.0, n_starts=8, seed=3)
    assert out["converged"]
    assert len(out["assignments"]) == len(truth)
    assert rimle.adjusted_rand(out["assignments"], truth) >= 0.9
    assert 0.0 <= out["noise_proportion"] <= 0.5
    weights = np.asarray(out["weights"])
    assert weights.shape == (2,)
    assert abs(out["noise_weight"] + weights.sum() - 1.0) < 1e-10


def test_fit_is_reproducible_for_a_fixed_seed():
    data, _ = two_clusters(seed=5)
    first = rimle.fit(data, 2, log_delta=-8.0, n_starts=5, seed=11)
    second = rimle.fit(data, 2, log_delta=-8.0, n_starts=5, seed=11)
    assert first["loglik"] == second["loglik"]
    assert first["assignments"] == second["assignments"]
    assert np.array_equal(np.asarray(first["means"]), np.asarray(second["means"]))


def test_fit_with_outliers_marks_them_as_noise():
    data, _ = two_clusters(n=200, seed=7)
    poisoned = np.vstack([data, np.full((10, 2), 1e5)])
    out = rimle.fit(poisoned, 2, log_delta=-20.0, n_starts=8, seed=1)
    assert all(label == 0 for label in out["assignments"][-10:])


def test_adjusted_rand_basics():
    assert rimle.adjusted_rand([1, 1, 2, 2], [5, 5, 9, 9]) == 1.0
    assert rimle.adjusted_rand([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(-0.5)


def test_mad_standardize_is_idempotent():
    rng = np.random.default_rng(2)
    data = rng.normal(3.0, 5.0, size=(50, 3))
    once, scales = rimle.mad_standardize(data)
    twice, rescales = rimle.mad_standardize(once)
    assert scales.shape == (3,)
    np.testing.assert_allclose(twice, once, atol=1e-12)
    np.testing.assert_allclose(rescales, 1.0, atol=1e-12)


def test_delta_scan_noise_share_rises():
    data, _ = two_clusters(seed=9)
    rows = rimle.delta_scan(data, 2, grid=[-20.0, -4.0], n_starts=4, seed=2)
    assert [row["log_delta"] for row in rows] == [-20.0, -4.0]
    assert all("error" not in row for row in rows)
    assert rows[1]["noise_proportion"] >= rows[0]["noise_proportion"]


def test_errors_surface_as_rimle_error():
    constant = np.ones((10, 2))
    with pytest.raises(rimle.RimleError):
        rimle.fit(constant, 2, log_delta=-5.0)
    with pytest.raises(rimle.RimleError):
        rimle.adjusted_rand([1, 2], [1])
