import math
import os
import tempfile

import numpy as np
import pytest

import spcp


def small_series(seed=3):
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 1.0, 8)
    obs = np.maximum(0.0, 3.0 - 4.0 * np.maximum(0.0, times - 0.5) + 0.1 * rng.standard_normal((4, 8)))
    return spcp.VFSeries.from_observations("eye", [1, 2, 3, 4], times, obs)


def test_standard_graph():
    g = spcp.standard_graph()
    assert g.size == 52
    assert len(g.blind_spot_ids) == 2
    assert all(a < b for a, b in g.edges)


def test_fit_shapes_and_determinism():
    s, _ = spcp.simulate(5, seed=11, visits=10)
    g = spcp.standard_graph()
    a = spcp.fit(s, g, n_iter=600, n_burn=100, n_thin=10, seed=4)
    b = spcp.fit(s, g, n_iter=600, n_burn=100, n_thin=10, seed=4)
    assert a.draws == 50
    assert a.phi.shape == (50, 52, 5)
    assert a.delta.shape == (50, 5)
    assert a.sigma.shape == (50, 5, 5)
    assert np.array_equal(a.phi, b.phi)
    assert np.allclose(a.sigma, np.transpose(a.sigma, (0, 2, 1)))
    assert all(0.0 < x for x in a.alpha)


def test_diagnostics_and_cli(tmp_path):
    s = small_series()
    fit = spcp.fit(s, _graph_for(s), variant="ns-latent",
                   n_iter=800, n_burn=200, n_thin=5, seed=2)
    d = spcp.dic(fit, s)
    assert math.isclose(d["dic"], d["mean_deviance"] + d["p_d"])
    p = spcp.cp_probability(fit, 1.0)
    assert p.shape == (4,) and np.all((p >= 0) & (p <= 1))
    assert spcp.max_metric(fit) == pytest.approx(p.max())
    assert spcp.mspe(fit, 1.0, s.obs[:, -1]) >= 0.0

    spcp.write_samples_dir(str(tmp_path / "fit"), fit)
    back = spcp.read_samples_dir(str(tmp_path / "fit"))
    assert np.allclose(back.phi, fit.phi)
    assert spcp.cli(["--help"]) == 0
    assert spcp.cli(["fit"]) == 1


def test_validation_error():
    with pytest.raises(ValueError):
        spcp.fit(small_series(), spcp.standard_graph(), variant="nope")


def _graph_for(series):
    # Four sites on a 2 x 2 block.
    fd, path = tempfile.mkstemp(suffix=".csv")
    with os.fdopen(fd, "w") as f:
        f.write("site_id,row,col,angle_deg,is_blind_spot\n")
        for k, sid in enumerate(series.site_ids):
            f.write(f"{sid},{k // 2},{k % 2},{100 + 10 * k},0\n")
    try:
        return spcp.graph_from_angle_csv(path)
    finally:
        os.remove(path)
