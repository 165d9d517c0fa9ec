import numpy as np
import pytest

from segsample.bench import (
    ADDITIVE2,
    PRODUCT2,
    IntegrationConfig,
    McmcConfig,
    analytic_mse,
    batch_means_variance,
    clt_check,
    load_points,
    mc_integrate,
    probit_gibbs,
    pumps_mwg,
    sampling_time_study,
    synthetic_probit_data,
    wang_sloan,
)
from segsample.errors import BadData, SingularDesign, ValidationError


def test_wang_sloan_values():
    assert wang_sloan(np.full(20, 0.5), 0.1, 0.1) == 1.0
    assert wang_sloan([1.0], 10.0, 0.5) == pytest.approx(3.5)
    assert wang_sloan([1.0, 1.0], 10.0, 0.5) == pytest.approx(3.5 * 2.25)


def test_constant_integrand_zero_mse():
    rows = mc_integrate(IntegrationConfig(integrand="constant", n_points=[10], replications=20, schemes=["mc-iid", "glh-ccv", "glh-iid"]))
    assert all(r.mse == 0.0 for r in rows)


def test_mse_matches_analytic():
    cfg = IntegrationConfig(p=5, a=1.0, tau=0.8, n_points=[10, 100], replications=4000, schemes=["mc-iid", "glh-ccv"], seed=1)
    for r in mc_integrate(cfg):
        assert abs(r.mse - r.analytic_mse) < 4 * r.mse_se


def test_iid_mse_scales_inverse_n():
    assert analytic_mse("mc-iid", 100, 0.1, 0.1, 20) * 100 == pytest.approx(analytic_mse("mc-iid", 1, 0.1, 0.1, 20))
    assert analytic_mse("glh-iid", 10, 0.1, 0.1, 20) is None


def test_point_file(tmp_path):
    pts = tmp_path / "pts.csv"
    np.savetxt(pts, np.full((4, 3), 0.5), delimiter=",")
    rows = mc_integrate(IntegrationConfig(p=3, n_points=[4], schemes=["external-point-file"], point_file=str(pts), replications=2))
    assert rows[0].mse == 0.0
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(BadData):
        load_points(tmp_path / "empty.csv", 3)
    with pytest.raises(BadData):
        load_points(pts, 5)


def test_integration_reproducible():
    cfg = IntegrationConfig(p=3, n_points=[10], replications=100, seed=5)
    assert [r.mse for r in mc_integrate(cfg)] == [r.mse for r in mc_integrate(cfg)]


def test_config_validation():
    with pytest.raises(ValidationError):
        IntegrationConfig(schemes=["bogus"])
    with pytest.raises(ValidationError):
        McmcConfig(d=1)
    with pytest.raises(ValidationError):
        McmcConfig(iterations=10, burn_in=10)


def test_clt_small():
    rows = clt_check(PRODUCT2, [64], reps=2000, seed=1)
    r = rows[0]
    assert abs(r.variance - 1 / 144) < 4 * r.variance_se
    rows = clt_check(ADDITIVE2, [64], reps=200, base="aj", seed=1)
    assert rows[0].variance < 1e-20


def test_batch_means_iid():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((400, 10_000, 1))
    v = batch_means_variance(x)
    assert v.mean() == pytest.approx(1.0, abs=0.05)


def test_probit_small_run():
    cfg = McmcConfig(iterations=300, burn_in=50, replications=8, seed=2)
    res = probit_gibbs(cfg)
    assert len(res.params) == 3 and np.all(res.ratio > 0)
    again = probit_gibbs(cfg)
    np.testing.assert_array_equal(res.ratio, again.ratio)


def test_probit_singular_design():
    y, X = synthetic_probit_data(n=10)
    X = np.column_stack([X, X[:, 1]])
    with pytest.raises(SingularDesign):
        probit_gibbs(McmcConfig(iterations=20, burn_in=5, replications=2), data=(y, X))


def test_probit_bad_file(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("y,x1,x2\n")
    with pytest.raises(BadData):
        probit_gibbs(McmcConfig(data=str(f), iterations=20, burn_in=5, replications=2))


def test_pumps_small_run():
    res = pumps_mwg(McmcConfig(model="pumps", iterations=300, burn_in=50, replications=8, seed=3))
    assert res.params[-1] == "beta" and np.all(np.isfinite(res.ratio))


def test_timing():
    assert sampling_time_study(["rbs"], [5], n=0, reps=3) == []
    rows = sampling_time_study(["rbs", "aj"], [5], n=100, reps=2)
    assert len(rows) == 2 and all(r.mean_time > 0 for r in rows)
