import numpy as np
import pytest

import gsr


@pytest.fixture
def ring():
    g = gsr.Graph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 0.5)])
    return gsr.Laplacian(g)


def test_laplacian(ring):
    lap = ring.matrix()
    assert np.allclose(lap, lap.T)
    assert np.allclose(lap.sum(axis=1), 0.0)
    assert ring.lambda_max == pytest.approx(ring.eigenvalues()[-1])


def test_solvers_agree(ring):
    y = np.array([1.0, -0.5, 2.0, 0.3])
    w = np.array([0.4, 0.5, 0.3, 0.6])
    direct, _ = gsr.solve(ring, w, y)
    cg, _ = gsr.solve(ring, w, y, method="cg", tol=1e-12)
    h = np.linalg.inv(np.eye(4) + np.outer(w, w) * ring.matrix())
    assert np.allclose(direct, h @ y)
    assert np.allclose(cg, direct)
    assert np.allclose(gsr.filter_matrix(ring, w), h)


def test_invariant_reduction(ring):
    y = np.array([1.0, -0.5, 2.0, 0.3])
    a, _ = gsr.solve(ring, 0.2, y)
    b, _ = gsr.solve(ring, np.full(4, np.sqrt(0.2)), y)
    assert np.allclose(a, b, rtol=1e-12)


def test_lemma1_variance(ring):
    x = np.array([1.0, -0.4, 0.8, 2.0])
    w = np.array([0.6, -0.7, 0.55, 0.9])
    assert gsr.check_lemma1(0.25, w)
    na = gsr.decompose_error(ring, w, x, 0.5)
    ni = gsr.decompose_error(ring, 0.25, x, 0.5)
    assert na["variance"] <= ni["variance"] + 1e-12
    assert na["mse"] == pytest.approx(na["bias_sq"] + na["variance"])


def test_prony_design(ring):
    x = np.array([1.0, -0.4, 0.8, 2.0])
    r = gsr.design_prony(ring, x, 0.1)
    assert r["omega"].shape == (4,)
    assert np.all(np.diag(r["Omega"]) >= 0.1 - 1e-8)
    assert 0.0 < r["rank1_quality"] <= 1.0 + 1e-12


def test_recover_omega_round_trip(ring):
    omega = np.diag([1.0, 1.2, 0.8, 1.5])
    omega[0, 1] = omega[1, 0] = 0.3
    h = np.linalg.inv(np.eye(4) + omega * ring.matrix())
    assert np.allclose(gsr.recover_omega(h, ring), omega, atol=1e-6)


def test_run_experiment():
    cfg = "\n".join([
        "experiment = SyntheticDenoise",
        "n = 12",
        "bandwidth = 4",
        "snr_grid_db = 0, 10",
        "methods = NI, NaiveNA",
        "n_noise = 3",
    ])
    text = gsr.run_experiment(cfg)
    assert text == gsr.run_experiment(cfg)
    rows = gsr.read_csv_rows(text)
    assert len(rows) == 4
    assert all(r["n_trials"] == 3 for r in rows)


def test_errors_map_to_python(ring):
    with pytest.raises(ValueError):
        gsr.solve(ring, np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        gsr.run_experiment("colour = blue")
