import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sosfield import CorrelatedField, DualMobilityField, SOSFitter
from sosfield import fitter as F
from sosfield.generator import acf_of, evaluate3, to_uniform


@pytest.fixture(scope="module")
def fitted(request):
    from sosfield.acf import exponential_acf, sample_acf

    acf = sample_acf(exponential_acf)
    return SOSFitter(n_sinusoids=30, dims=2, max_sweeps=3, n_restarts=2, random_state=7).fit(acf)


def test_params_and_clone():
    est = SOSFitter(n_sinusoids=12, dims=2)
    params = est.get_params()
    assert params["n_sinusoids"] == 12 and params["dims"] == 2
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(max_sweeps=3)
    assert est.max_sweeps == 3
    assert clone(CorrelatedField(uniform=True)).uniform is True


def test_fit_attributes(fitted):
    assert fitted.sinusoids_.n_sinusoids == 30
    assert fitted.restart_ase_db_.shape == (2,)
    assert fitted.ase_db_ == fitted.restart_ase_db_.min()
    assert len(fitted.test_directions_) == 28


def test_matches_functional_api(fitted):
    config = F.FitConfig(n_sinusoids=30, dims=2, max_sweeps=3, n_restarts=2, rng_seed=7)
    direct = F.fit(fitted.acf_, config)
    np.testing.assert_array_equal(direct.freqs, fitted.sinusoids_.freqs)


def test_fit_from_arrays():
    d = np.linspace(0, 20, 81)
    r = np.exp(-d / 5)
    est = SOSFitter(n_sinusoids=10, max_sweeps=2).fit(d.reshape(-1, 1), r)
    assert est.acf_.decorr_distance == pytest.approx(5.0, abs=0.25)
    with pytest.raises(ValueError):
        SOSFitter().fit(d)
    with pytest.raises(ValueError):
        SOSFitter().fit(np.column_stack([d, d]), r)


def test_predict_and_score(fitted):
    acf = fitted.acf_
    disp = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(fitted.predict(disp), acf_of(fitted.sinusoids_, disp))
    radial = fitted.predict(acf.distances.reshape(-1, 1))
    assert radial[0] == 1.0
    ase_lin = np.mean((radial - acf.correlations) ** 2)
    # mean over directions before squaring cannot exceed the direction-averaged error
    assert 10 * np.log10(ase_lin) <= fitted.ase_db_ + 1e-9
    assert fitted.score(acf) == pytest.approx(-fitted.ase_db_, abs=1e-6)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        SOSFitter().predict([[0, 0, 0]])
    with pytest.raises(NotFittedError):
        CorrelatedField().transform([[0, 0, 0]])


def test_correlated_field(fitted):
    s = fitted.sinusoids_
    field = CorrelatedField(s, random_state=3).fit()
    x = np.random.default_rng(0).uniform(0, 50, (40, 3))
    out = field.transform(x)
    assert out.shape == (40, 1)
    np.testing.assert_array_equal(out[:, 0], evaluate3(field.process_, x))
    # 2-D positions sit at z = 0
    np.testing.assert_array_equal(field.transform(x[:, :2])[:, 0], evaluate3(field.process_, np.c_[x[:, :2], np.zeros(40)]))
    uni = CorrelatedField(s, uniform=True, random_state=3).fit_transform(x)
    np.testing.assert_allclose(uni[:, 0], to_uniform(out[:, 0]))
    wide = CorrelatedField(s, decorr_distance=20.0, random_state=3).fit()
    np.testing.assert_array_equal(wide.transform(2 * x), out)
    with pytest.raises(TypeError):
        CorrelatedField().fit()
    with pytest.raises(ValueError):
        field.transform(np.zeros((3, 4)))


def test_dual_field(fitted):
    s = fitted.sinusoids_
    dual = DualMobilityField(s, random_state=1).fit()
    x = np.random.default_rng(2).uniform(0, 50, (25, 6))
    out = dual.transform(x)
    assert out.shape == (25, 1)
    assert dual.process_.rx_sinusoids is s
    with pytest.raises(TypeError):
        DualMobilityField(s, rx_sinusoids="nope").fit()
    with pytest.raises(ValueError):
        dual.transform(x[:, :3])
