import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from modeforge import ModeCombiner
from modeforge.codebook import build_codebook
from modeforge.combiners import CombinerSpec


def test_get_set_params():
    mc = ModeCombiner(scheme="hybrid", criterion="gef", phase_levels=4)
    params = mc.get_params()
    assert params["scheme"] == "hybrid" and params["phase_levels"] == 4
    mc.set_params(scheme="analog")
    assert mc.scheme == "analog"
    assert clone(mc).get_params() == mc.get_params()


def test_not_fitted():
    with pytest.raises(NotFittedError):
        ModeCombiner().predict([0])


def test_fit_rejects_non_patterns():
    with pytest.raises(TypeError):
        ModeCombiner().fit(np.zeros((2, 3)))


def test_invalid_param_surfaces_at_fit(coarse4):
    with pytest.raises(ValueError):
        ModeCombiner(scheme="nope").fit(coarse4)


def test_predict_matches_build(coarse4):
    mc = ModeCombiner(scheme="hybrid", criterion="ef", phase_levels=4).fit(coarse4)
    cb = build_codebook(coarse4, [-30, 0, 30], CombinerSpec("hybrid", "ef", 4))
    np.testing.assert_array_equal(mc.predict([-30, 0, 30]), cb.weights)
    metrics = mc.transform([-30, 0, 30])
    assert metrics.shape == (3, 3)
    np.testing.assert_array_equal(metrics[:, 1], cb.efs)
    assert mc.n_candidates_ == 4 ** 0 * 4 + 6 * 4 + 4 * 16 + 64


def test_closed_form_has_no_context(coarse4):
    mc = ModeCombiner().fit(coarse4)
    assert mc.context_ is None
    w = mc.predict(np.array([10.0, 20.0]))
    np.testing.assert_allclose(np.linalg.norm(w, axis=1), 1.0, atol=1e-12)


def test_score_is_mean_criterion(coarse4):
    mc = ModeCombiner(scheme="selection", criterion="gain").fit(coarse4)
    assert mc.score(37) == pytest.approx(np.mean(mc.to_codebook(37).gains))


def test_fit_transform(coarse4):
    out = ModeCombiner(scheme="analog", phase_levels=4).fit_transform(coarse4, targets=5)
    assert out.shape == (5, 3)
    assert np.all((out[:, 1] >= 0) & (out[:, 1] <= 1))


def test_targets_out_of_range(coarse4):
    mc = ModeCombiner(scheme="selection").fit(coarse4)
    with pytest.raises(ValueError):
        mc.predict([95.0])
