"""Model construction, fiber maps, validation and JSON round trips."""

import numpy as np
import pytest

from disscat import (
    BUILTIN_NAMES,
    ChebyshevMap,
    DomainError,
    GaussMap,
    Interval,
    Model,
    ZeroMap,
    builtin_model,
    chebyshev_fit,
    eval_fiber,
    interior_grid,
    model_from_json,
    model_to_json,
    validate_model,
)


def test_interval_basic():
    iv = Interval(0.0, 4.0)
    assert iv.width == 4.0
    assert iv.mid == 2.0
    assert iv.margin == pytest.approx(0.04)
    assert iv.in_interior(2.0)
    assert not iv.in_interior(0.01)
    iv.require_interior(1.0)
    with pytest.raises(DomainError):
        iv.require_interior(4.0)


def test_interval_rejects_bad_data():
    with pytest.raises(DomainError):
        Interval(1.0, 1.0)
    with pytest.raises(DomainError):
        Interval(0.0, np.inf)
    with pytest.raises(DomainError):
        Interval(0.0, 4.0, margin=2.0)
    with pytest.raises(DomainError):
        Interval(0.0, 4.0, margin=0.0)


def test_interior_grid_spans_interior():
    iv = Interval(0.0, 4.0, margin=0.5)
    g = interior_grid(iv, 11)
    assert g[0] == 0.5 and g[-1] == 3.5 and len(g) == 11


def test_gauss_map_matches_formula():
    fm = GaussMap(0.0, 4.0, amp=[[0.8]], center=[[2.0]], width=[[0.6]],
                  window_pow=[[1]])
    lams = np.linspace(0.2, 3.8, 17)
    vals = fm.eval_many(lams)
    win = 4.0 * lams * (4.0 - lams) / 16.0
    want = 0.8 * np.exp(-((lams - 2.0) ** 2) / (2 * 0.36)) * win
    assert np.abs(vals[:, 0, 0] - want).max() < 1e-14
    assert abs(fm.eval(2.0)[0, 0] - 0.8) < 1e-14


def test_gauss_map_guards():
    with pytest.raises(DomainError):
        GaussMap(0.0, 4.0, amp=[[1.0]], center=[[2.0]], width=[[0.0]],
                 window_pow=[[1]])
    with pytest.raises(DomainError):
        GaussMap(0.0, 4.0, amp=[[1.0]], center=[[2.0]], width=[[0.5]],
                 window_pow=[[-1]])
    fm = GaussMap(0.0, 4.0, amp=[[1.0]], center=[[2.0]], width=[[0.5]],
                  window_pow=[[1]])
    with pytest.raises(DomainError):
        fm.eval_many(np.array([4.5]))


def test_zero_map():
    fm = ZeroMap(0.0, 4.0, 2, 3)
    vals = fm.eval_many(np.linspace(0.0, 4.0, 5))
    assert vals.shape == (5, 2, 3)
    assert np.all(vals == 0)


def test_chebyshev_fit_roundtrip():
    src = GaussMap(0.0, 4.0, amp=[[0.7, 0.2], [0.1, 0.5]],
                   center=[[1.5, 2.5], [2.0, 1.0]],
                   width=[[0.6, 0.8], [0.7, 0.9]],
                   window_pow=[[1, 1], [2, 0]])
    fit = chebyshev_fit(src, 80)
    assert isinstance(fit, ChebyshevMap)
    assert fit.degree == 80
    lams = np.linspace(0.0, 4.0, 301)
    err = np.abs(fit.eval_many(lams) - src.eval_many(lams)).max()
    assert err < 1e-12


def test_chebyshev_fit_callable_needs_domain():
    fn = lambda lams: np.ones((len(lams), 1, 1), complex)
    with pytest.raises(DomainError):
        chebyshev_fit(fn, 4)
    fit = chebyshev_fit(fn, 4, lo=0.0, hi=1.0)
    assert np.abs(fit.eval(0.3) - 1.0).max() < 1e-14


def test_eval_fiber_scalar_and_array():
    fm = ZeroMap(0.0, 1.0, 1, 1)
    assert eval_fiber(fm, 0.5).shape == (1, 1)
    assert eval_fiber(fm, np.array([0.2, 0.7])).shape == (2, 1, 1)


def test_model_shape_guards():
    iv = Interval(0.0, 4.0)
    z0g = GaussMap(0.0, 4.0, amp=[[1.0]], center=[[2.0]], width=[[0.5]],
                   window_pow=[[1]])
    z0c = ZeroMap(0.0, 4.0, 1, 1)
    with pytest.raises(DomainError):
        Model(iv, k=1, m=2, r=1, K=np.zeros((2, 2)), z0g=z0g, z0c=z0c)
    with pytest.raises(DomainError):
        Model(iv, k=2, m=1, r=1, K=[[0.0]], z0g=z0g, z0c=z0c)
    with pytest.raises(DomainError):
        Model(iv, k=1, m=1, r=1, K=[[0.0]], z0g=z0g,
              z0c=ZeroMap(0.0, 5.0, 1, 1))


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtin_zoo_validates(name):
    model = builtin_model(name)
    report = validate_model(model)
    assert report.ok, report.violations
    assert model.K.shape == (model.m, model.m)
    assert model.z0g.shape == (model.k, model.m)
    assert model.z0c.shape == (model.k, model.r)


def test_builtin_free_has_no_couplings():
    model = builtin_model("free")
    assert np.all(model.K == 0)
    lams = interior_grid(model.interval, 7)
    assert np.all(model.z0c.eval_many(lams) == 0)


def test_builtin_unknown_name():
    with pytest.raises(DomainError):
        builtin_model("no-such-model")


def test_rank1_params_scale_absorber():
    weak = builtin_model("rank1-gauss", params={"g_c": 0.5})
    strong = builtin_model("rank1-gauss", params={"g_c": 1.5})
    lam = 2.0
    ratio = strong.z0c.eval(lam)[0, 0] / weak.z0c.eval(lam)[0, 0]
    assert abs(ratio - 3.0) < 1e-12
    assert weak.meta["g_c"] == 0.5


def test_validate_flags_non_hermitian_k():
    iv = Interval(0.0, 4.0)
    z0g = GaussMap(0.0, 4.0, amp=[[0.4, 0.3]], center=[[1.5, 2.5]],
                   width=[[0.6, 0.6]], window_pow=[[1, 1]])
    z0c = ZeroMap(0.0, 4.0, 1, 1)
    model = Model(iv, k=1, m=2, r=1, K=[[0.0, 1.0], [0.0, 0.0]],
                  z0g=z0g, z0c=z0c)
    report = validate_model(model)
    assert not report.ok
    assert any(v["code"] == "k-not-hermitian" for v in report.violations)


def test_validate_flags_bad_holder_exponent():
    iv = Interval(0.0, 4.0)
    z0g = GaussMap(0.0, 4.0, amp=[[0.4]], center=[[2.0]], width=[[0.6]],
                   window_pow=[[1]], holder_exponent=0.4)
    model = Model(iv, k=1, m=1, r=1, K=[[0.3]], z0g=z0g,
                  z0c=ZeroMap(0.0, 4.0, 1, 1))
    report = validate_model(model)
    assert any(v["code"] == "bad-holder-exponent" for v in report.violations)


def test_validate_flags_stored_energy_outside_interior():
    model = builtin_model("rank1-gauss")
    model.meta["lam0"] = 3.999
    report = validate_model(model)
    assert any(v["code"] == "lam0-outside-interior" for v in report.violations)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_json_roundtrip(name):
    model = builtin_model(name)
    back = model_from_json(model_to_json(model))
    assert back.k == model.k and back.m == model.m and back.r == model.r
    assert np.array_equal(back.K, model.K)
    assert back.meta == model.meta
    lams = interior_grid(model.interval, 13)
    for attr in ("z0g", "z0c"):
        a = getattr(model, attr).eval_many(lams)
        b = getattr(back, attr).eval_many(lams)
        assert np.array_equal(a, b)


def test_json_roundtrip_chebyshev():
    model = builtin_model("rank1-gauss")
    model.z0g = chebyshev_fit(model.z0g, 40)
    back = model_from_json(model_to_json(model))
    assert isinstance(back.z0g, ChebyshevMap)
    lams = interior_grid(model.interval, 9)
    assert np.array_equal(back.z0g.eval_many(lams), model.z0g.eval_many(lams))


def test_tuned_calibration_meta():
    model = builtin_model("tuned-singularity")
    meta = model.meta
    assert meta["lam0"] == 2.0
    assert meta["gc_scale"] == 1.0
    assert meta["g_c"] == pytest.approx(meta["g_c_critical"])
    assert model.interval.in_interior(meta["c_center"])
    again = builtin_model("tuned-singularity")
    assert again.meta["g_c"] == meta["g_c"]
    assert again.meta["c_center"] == meta["c_center"]


def test_tuned_boost_scales_calibrated_coupling():
    base = builtin_model("tuned-singularity")
    boosted = builtin_model("tuned-singularity", params={"gc_scale": 1.4})
    assert boosted.meta["g_c"] == pytest.approx(1.4 * base.meta["g_c"])
    assert boosted.meta["g_c_critical"] == pytest.approx(base.meta["g_c"])
    with pytest.raises(DomainError):
        builtin_model("tuned-singularity", params={"gc_scale": -1.0})
