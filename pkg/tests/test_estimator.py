import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import netlist_system
from krylovmor import FrequencySweep, reduce_per_port
from krylovmor.estimator import KrylovReducer
from krylovmor.exceptions import DimensionMismatch
from krylovmor.generators import power_grid, rc_ladder


def test_params_round_trip():
    est = KrylovReducer(method="aeks", order=6, modulo=2)
    assert est.get_params() == {"method": "aeks", "order": 6, "modulo": 2,
                                "per_port": True, "workers": None}
    twin = clone(est).set_params(order=10)
    assert twin.order == 10 and est.order == 6


def test_predict_matches_pipeline(small_grid):
    omega = np.logspace(8, 12, 9)
    est = KrylovReducer(method="eks", order=8).fit(small_grid)
    expected = reduce_per_port(small_grid, "eks", 8, sweep=FrequencySweep(omega)).sweep.values
    np.testing.assert_allclose(est.predict(omega), expected, rtol=1e-13)
    assert est.solve_counts_ == {"A": 12, "E": 12}


def test_fit_accepts_netlist_text_and_path(tmp_path):
    text = rc_ladder(40)
    path = tmp_path / "ladder.sp"
    path.write_text(text)
    a = KrylovReducer(order=4).fit(text).predict([1.0, 10.0])
    b = KrylovReducer(order=4).fit(str(path)).predict([1.0, 10.0])
    np.testing.assert_array_equal(a, b)
    with pytest.raises(TypeError):
        KrylovReducer().fit(42)


def test_mimo_mode_and_transform(small_grid):
    est = KrylovReducer(method="mm", order=9, per_port=False).fit(small_grid)
    assert len(est.roms_) == 1 and est.roms_[0].order == 9
    X = np.random.default_rng(0).standard_normal((small_grid.order, 2))
    Z = est.transform(X)
    assert Z.shape == (9, 2)
    # projecting an element of the basis span is lossless
    V = est.bases_[0].V
    np.testing.assert_allclose(est.inverse_transform(est.transform(V @ Z)), V @ Z, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        est.transform(np.ones(3))


def test_singular_system_is_regularized():
    sys = netlist_system(power_grid(100, 2, cap_dropout=0.3, seed=9))
    est = KrylovReducer(method="aeks", order=6).fit(sys)
    assert est.singular_E_ and est.n_eliminated_ == 30
    assert est.system_.order == 70
    H = est.predict([1e9, 1e10])
    assert H.shape == (2, 2, 2) and np.all(np.isfinite(H))


def test_unfitted_and_invalid():
    with pytest.raises(NotFittedError):
        KrylovReducer().predict([1.0])
    with pytest.raises(ValueError):
        KrylovReducer(method="svd").fit(rc_ladder(5))
    with pytest.raises(ValueError):
        KrylovReducer(modulo=0).fit(rc_ladder(5))
    est = KrylovReducer(order=2).fit(rc_ladder(5))
    with pytest.raises(ValueError):
        est.predict([np.inf])
