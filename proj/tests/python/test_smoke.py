import json
import math

import numpy as np
import pytest

import spatial_smooth as ss


def test_numerics():
    a = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    p = ss.pseudo_inverse(a)
    np.testing.assert_allclose(a @ p @ a, a, atol=1e-12)
    np.testing.assert_allclose(np.diag(p), [5 / 9, 2 / 9, 5 / 9], atol=1e-12)
    assert ss.icar_scaling(np.abs(a - np.diag(np.diag(a)))) == pytest.approx(0.4093, abs=1e-3)
    b = ss.double_center(np.array([[0.0, 3.0], [3.0, 0.0]]))
    np.testing.assert_allclose(b, [[2.25, -2.25], [-2.25, 2.25]], atol=1e-14)
    assert ss.sm_surface(0.2, 0.3) == pytest.approx(0.45632, abs=5e-6)


def test_region_and_coords():
    region = ss.make_grid_region(4, 5, seed=3)
    assert region.size == 20
    assert region.adjacency.shape == (20, 20)
    assert region.adjacency.sum() == 2 * (4 * 4 + 3 * 5)
    coords = ss.scaled_centroids(region)
    assert coords.points.min() == 0.0 and coords.points.max() == 1.0
    movement = ss.movement_coords(region)
    assert movement.label == "movement"
    assert movement.points.shape == (20, 2)
    flows = ss.gravity_flows(region)
    np.testing.assert_allclose(flows, flows.T)


def test_smooth_basis():
    coords = ss.scaled_centroids(ss.make_grid_region(6, 6))
    basis = ss.make_smooth(coords, 10)
    assert basis.design.shape == (36, 9)
    np.testing.assert_allclose(basis.design.sum(axis=0), 0.0, atol=1e-10)
    assert np.linalg.eigvalsh(basis.penalty).min() > -1e-9


def test_simulate_and_fit():
    region = ss.make_grid_region(6, 6, seed=2)
    coords = ss.scaled_centroids(region)
    data = ss.simulate(region, [coords], [0.7, 0.3], seed=5)
    assert data.y.shape == (36,)
    assert data.family == "poisson"
    shares = data.variance_shares
    assert len(shares) == 2 and math.isclose(sum(shares), 1.0)

    basis = ss.make_smooth(coords, 10)
    samples = ss.fit_spline(region, data.y, [basis], iterations=400, burn_in=150, seed=3)
    assert "alpha" in samples.scalar_names
    assert samples.term_labels[0] == "distance" or samples.term_labels[0] == coords.label
    decomposition = ss.variance_decomposition(samples)
    mean, lo, hi = decomposition[samples.term_labels[0]]
    assert lo <= mean <= hi
    w = ss.waic(samples.loglik)
    assert set(w) == {"waic", "p_waic", "lppd"}
    assert ss.mae(data.y, samples.fitted * region.offsets) >= 0.0

    alpha = samples.scalar("alpha")
    half = alpha.size // 2
    rhat, ess = ss.rhat_ess([alpha[:half], alpha[half:]])
    assert rhat > 0 and ess > 0


def test_binomial_metrics():
    y = np.array([0.0, 5.0, 10.0, 20.0])
    p = np.array([0.1, 0.3, 0.5, 0.9])
    assert ss.auroc(y, p, 20) > 0.5
    assert 0.0 <= ss.brier(y, p, 20) <= 1.0
    assert 0.0 <= ss.brier(y, p, 20, convention="per_area") <= 1.0


def test_errors_map_to_exception():
    with pytest.raises(ss.SpatialSmoothError):
        ss.make_grid_region(1, 1)
    with pytest.raises(ss.SpatialSmoothError):
        ss.double_center(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_field_map(tmp_path):
    region = ss.make_grid_region(3, 3)
    files = ss.export_field_map(region, np.arange(9.0), tmp_path / "field", "test")
    assert [f.suffix for f in files] == [".csv", ".svg"]
    assert files[0].read_text().startswith("id,x,y,value\n")


def test_run_experiment(tmp_path):
    config = tmp_path / "small.ini"
    config.write_text(
        "[experiment]\nstudy = sim1-distance\n"
        "[region]\nrows = 5\ncols = 5\n"
        "[simulation]\nphi_grid = 0.5\n"
        "[model]\nknots = 8\n"
        "[mcmc]\nchains = 2\niterations = 300\nburn_in = 100\n"
    )
    ss.validate_config(config)
    manifest, converged = ss.run_experiment(config, tmp_path / "out")
    data = json.loads(manifest.read_text())
    assert data["status"] == ("CONVERGED" if converged else "NOT-CONVERGED")
    assert (tmp_path / "out" / "metrics_spline.csv").exists()

    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nstudy = nothing\n")
    with pytest.raises(ss.SpatialSmoothError):
        ss.validate_config(bad)
