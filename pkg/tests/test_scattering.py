"""Scattering matrices: unitarity, contraction, cross routes, inverses."""

import numpy as np
import pytest

from disscat import (
    DomainError,
    SpectralSingularityError,
    builtin_model,
    defect_closed_form_v0,
    gamma_blocks,
    interior_grid,
    s_inverse,
    s_matrix,
    s_v_matrix,
)
from disscat.boundary import boundary_bundle
from disscat.scattering import _gamma_from_bundle


@pytest.mark.parametrize("name", ["rank1-gauss", "rank2-mixed"])
def test_s_v_unitary(name):
    model = builtin_model(name)
    for lam in interior_grid(model.interval, 15):
        sv, residual = s_v_matrix(model, lam)
        assert residual < 1e-10
        gram = sv.conj().T @ sv - np.eye(model.k)
        assert np.linalg.norm(gram, 2) < 1e-8


@pytest.mark.parametrize("name", ["rank1-gauss", "rank2-mixed"])
def test_cross_route_residuals(name):
    model = builtin_model(name)
    for lam in interior_grid(model.interval, 9):
        res = s_matrix(model, lam).cross_check_residuals
        assert res["kuroda_forms"] < 1e-10
        assert res["rf_forms"] < 1e-10
        assert res["left_right"] < 1e-8


@pytest.mark.parametrize("name", ["rank1-gauss", "rank2-mixed", "free"])
def test_contraction_and_defect(name):
    model = builtin_model(name)
    for lam in interior_grid(model.interval, 9):
        out = s_matrix(model, lam)
        assert out.sigma_max <= 1.0 + 1e-9
        herm = np.abs(out.defect - out.defect.conj().T).max()
        assert herm < 1e-12
        assert np.linalg.eigvalsh(out.defect).min() >= -1e-10


def test_free_model_is_trivial():
    model = builtin_model("free")
    out = s_matrix(model, 2.0)
    assert np.abs(out.s - np.eye(model.k)).max() < 1e-12
    assert np.abs(out.s_v - np.eye(model.k)).max() < 1e-12


def test_defect_closed_form_when_k_vanishes():
    model = builtin_model("rank1-gauss", params={"g_v": 0.0})
    for lam in interior_grid(model.interval, 7):
        out = s_matrix(model, lam)
        closed = defect_closed_form_v0(model, lam)
        assert np.abs(out.defect - closed).max() < 1e-9
        assert np.linalg.eigvalsh(closed).min() >= -1e-12
    with pytest.raises(DomainError):
        defect_closed_form_v0(builtin_model("rank1-gauss"), 2.0)


@pytest.mark.parametrize("name", ["rank1-gauss", "rank2-mixed"])
def test_absorber_matrix_jump(name):
    # A(+) - A(-) = 2 pi u u^dagger with u the perturbed C-column fiber.
    model = builtin_model(name)
    for lam in (1.1, 2.1, 3.2):
        b = boundary_bundle(model, lam)
        u = _gamma_from_bundle(model, b).zvc_plus
        diff = b.a_matrix("plus") - b.a_matrix("minus")
        assert np.abs(diff - 2.0 * np.pi * (u.conj().T @ u)).max() < 1e-12


def test_small_coupling_continuity():
    lam = 2.1
    weak = builtin_model("rank1-gauss", params={"g_v": 1e-8})
    none = builtin_model("rank1-gauss", params={"g_v": 0.0})
    gb = gamma_blocks(weak, lam)
    assert np.abs(gb.zvc_plus - weak.z0c.eval(lam)).max() < 1e-6
    drift = np.abs(s_matrix(weak, lam).s - s_matrix(none, lam).s).max()
    assert drift < 1e-6


@pytest.mark.parametrize("name", ["rank1-gauss", "rank2-mixed"])
def test_inverse_at_regular_energies(name):
    model = builtin_model(name)
    for lam in interior_grid(model.interval, 9):
        out = s_matrix(model, lam)
        assert out.s_inv is not None
        assert np.linalg.norm(out.s @ out.s_inv - np.eye(model.k), 2) < 1e-8
        direct = s_inverse(model, lam)
        assert np.abs(direct - out.s_inv).max() < 1e-12


def test_singular_energy_blocks_inverse():
    model = builtin_model("tuned-singularity")
    lam0 = model.meta["lam0"]
    out = s_matrix(model, lam0)
    assert out.s_inv is None
    assert out.sigma_min <= 1e-6
    assert out.sigma_max <= 1.0 + 1e-9
    with pytest.raises(SpectralSingularityError):
        s_inverse(model, lam0)
    regular = s_inverse(model, lam0 + 0.4)
    s_reg = s_matrix(model, lam0 + 0.4).s
    assert np.linalg.norm(s_reg @ regular - np.eye(model.k), 2) < 1e-8
