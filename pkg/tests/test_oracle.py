"""Brute-force oracles: discretization, matrix resolvents, Cook integrals."""

import numpy as np
import pytest
from scipy.linalg import expm

from disscat import (
    DomainError,
    NumericalFailure,
    builtin_model,
    crc_full_plus,
    r0_block,
    rv_block,
    s_matrix,
)
from disscat.oracle import (
    absorption_probabilities,
    default_horizon,
    discretize,
    intertwining_residual,
    matrix_boundary_block,
    scatt_operator,
    subspaces,
    wave_minus,
    wave_plus_adj,
)


@pytest.fixture(scope="module")
def rank1_sys():
    return discretize(builtin_model("rank1-gauss"), 200)


def test_discretize_invariants():
    model = builtin_model("rank2-mixed")
    sys_ = discretize(model, 64)
    assert sys_.dim == 64 * model.k
    assert np.abs(sys_.v - sys_.v.conj().T).max() < 1e-14
    assert np.abs(sys_.cc - sys_.cc.conj().T).max() < 1e-14
    assert np.linalg.eigvalsh(sys_.cc).min() > -1e-12
    rebuilt = np.diag(sys_.h0diag.astype(complex)) + sys_.v - 1j * sys_.cc
    assert np.abs(sys_.h - rebuilt).max() == 0.0
    assert np.linalg.matrix_rank(sys_.v) == model.m
    assert np.linalg.matrix_rank(sys_.cc) == model.r
    with pytest.raises(DomainError):
        discretize(model, 16)


def test_free_discretization_is_real_diagonal():
    sys_ = discretize(builtin_model("free"), 48)
    assert np.abs(sys_.v).max() == 0.0
    assert np.abs(sys_.cc).max() == 0.0
    assert np.abs(sys_.h - np.diag(sys_.nodes.astype(complex))).max() == 0.0


def test_spectrum_stays_in_lower_half_plane(rank1_sys):
    evals, _, _, cond = rank1_sys.eig()
    assert evals.imag.max() <= 1e-10
    assert cond < 1e3
    for t in (0.5, 3.0, 20.0):
        norm = np.linalg.norm(expm(-1j * t * rank1_sys.h), 2)
        assert norm <= 1.0 + 1e-8


def test_operator_and_coupling_labels(rank1_sys):
    assert np.abs(rank1_sys.operator("R0")
                  - np.diag(rank1_sys.h0diag.astype(complex))).max() == 0.0
    rv = rank1_sys.operator("RV")
    assert np.abs(rv - rv.conj().T).max() < 1e-14
    assert rank1_sys.operator("Rfull") is rank1_sys.h
    assert rank1_sys.coupling("G").shape == (rank1_sys.dim, 1)
    with pytest.raises(DomainError):
        rank1_sys.operator("R1")
    with pytest.raises(DomainError):
        rank1_sys.coupling("V")


def test_matrix_oracle_matches_continuum(rank1_sys):
    model = rank1_sys.model
    for lam in (1.3, 2.0, 2.9):
        pairs = [
            (("G", "G", "R0", "plus"), r0_block(model, "G", "G", mu=lam, side="plus")),
            (("C", "C", "RV", "plus"), rv_block(model, "C", "C", mu=lam, side="plus")),
            (("C", "C", "RV", "minus"), rv_block(model, "C", "C", mu=lam, side="minus")),
            (("C", "C", "Rfull", "plus"), crc_full_plus(model, lam)),
        ]
        for spec_args, want in pairs:
            got = matrix_boundary_block(rank1_sys, *spec_args[:3], lam, spec_args[3])
            rel = np.abs(got - want).max() / max(np.abs(want).max(), 1e-300)
            assert rel < 5e-3, (spec_args, lam, rel)


def test_matrix_oracle_guards(rank1_sys):
    lam_edge = rank1_sys.nodes[0] + rank1_sys.local_spacing(rank1_sys.nodes[0])
    with pytest.raises(DomainError):
        matrix_boundary_block(rank1_sys, "C", "C", "RV", lam_edge, "plus")
    with pytest.raises(DomainError):
        matrix_boundary_block(rank1_sys, "C", "C", "RV", 2.0, "up")
    _, est = matrix_boundary_block(rank1_sys, "C", "C", "RV", 2.0, "plus",
                                   return_estimate=True)
    assert est < 1e-3


def test_wave_minus_is_identity_for_free():
    sys_ = discretize(builtin_model("free"), 48)
    assert np.abs(wave_minus(sys_) - np.eye(sys_.dim)).max() == 0.0


def test_wave_operator_contracts(rank1_sys):
    w = wave_minus(rank1_sys)
    assert np.linalg.norm(w, 2) <= 1.0 + 1e-9
    assert intertwining_residual(rank1_sys, w) <= 5e-2
    wp = wave_plus_adj(rank1_sys)
    assert np.linalg.norm(wp, 2) <= 1.0 + 1e-9
    t_final, dt = default_horizon(rank1_sys)
    assert t_final > 0 and 0 < dt < t_final


def test_scatt_operator_fibers_match_stationary():
    model = builtin_model("rank1-gauss")
    sys_ = discretize(model, 128)
    out = scatt_operator(sys_)
    assert out.offdiag_max <= 5e-2
    errs = []
    for j, fib in out.fibers.items():
        want = s_matrix(model, float(sys_.nodes[j])).s
        errs.append(np.abs(fib - want).max() / max(np.abs(want).max(), 1e-300))
        assert j in out.raw_diag
    errs = np.array(errs)
    assert errs.max() <= 5e-2
    assert np.median(errs) <= 1e-2


def test_ill_conditioned_eigenbasis_is_rejected():
    sys_ = discretize(builtin_model("free"), 32)
    sys_.h = np.eye(sys_.dim, dtype=complex) + np.diag(np.ones(sys_.dim - 1), 1)
    sys_._eig = None
    with pytest.raises(NumericalFailure):
        wave_minus(sys_)


def test_subspaces_plain_model(rank1_sys):
    report = subspaces(rank1_sys)
    assert report.dim_Hb == 0
    assert report.dim_Hp_H == 0
    assert report.hd_decay_checks == []
    assert report.ran_w_minus_angle == 0.0
    assert report.im_cut == float("inf")


def test_subspaces_boosted_model():
    model = builtin_model("tuned-singularity", params={"gc_scale": 1.4})
    sys_ = discretize(model, 160)
    report = subspaces(sys_)
    assert report.dim_Hp_H == 1
    assert report.ran_w_minus_angle <= 5e-2
    assert all(c["consistent"] for c in report.hd_decay_checks)
    # The window rolloff truncates a few band-edge directions, so the rank
    # sits a little below dim - dim_Hp_H; the angle is the real check.
    assert 0.85 * sys_.dim <= report.rank_w_minus <= sys_.dim - report.dim_Hp_H
    blob = report.to_json_dict()
    assert blob["dim_Hp_H"] == 1


def test_absorption_probabilities(rank1_sys):
    rng = np.random.default_rng(5)
    u0 = rng.normal(size=rank1_sys.dim) + 1j * rng.normal(size=rank1_sys.dim)
    res = absorption_probabilities(rank1_sys, u0)
    assert res.p_scatt + res.p_abs == 1.0
    assert 0.0 < res.p_abs < 1.0
    assert np.all(np.diff(res.norms_sq) <= 1e-12)
    with pytest.raises(DomainError):
        absorption_probabilities(rank1_sys, np.zeros(rank1_sys.dim))


def test_absorption_exact_without_absorber():
    sys_ = discretize(builtin_model("rank1-gauss", params={"g_c": 0.0}), 64)
    rng = np.random.default_rng(6)
    u0 = rng.normal(size=sys_.dim) + 1j * rng.normal(size=sys_.dim)
    res = absorption_probabilities(sys_, u0)
    assert res.p_scatt == 1.0
    assert res.p_abs == 0.0
    assert res.converged


def test_absorption_of_decaying_eigenstate():
    model = builtin_model("tuned-singularity", params={"gc_scale": 1.4})
    sys_ = discretize(model, 160)
    evals, p, _, _ = sys_.eig()
    j = int(np.argmin(evals.imag))
    res = absorption_probabilities(sys_, p[:, j],
                                   t_final=10.0 / abs(evals[j].imag))
    assert res.p_abs >= 0.99
