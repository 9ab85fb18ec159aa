"""Radial optical-model solver against closed forms and unitarity."""

import numpy as np
import pytest

from disscat import DomainError, NumericalFailure
from disscat.optical import (
    Potential,
    RadialProblem,
    assemble_s_matrix,
    cpa_tune,
    infinity_regularity,
    potential_from_json,
    resonance_scan,
    results_to_csv,
    solve_partial_wave,
    square_well_s0,
)

ZERO = Potential("zero")


def _well(value, radius=1.0):
    return Potential("square-well", {"value": value, "radius": radius})


def test_potential_families():
    r = np.array([0.0, 0.5, 1.2])
    sq = _well(-2.0)
    assert np.allclose(sq.eval(r), [-2.0, -2.0, 0.0])
    ga = Potential("gaussian", {"value": 3.0, "sigma": 0.5})
    assert np.allclose(ga.eval(r), 3.0 * np.exp(-0.5 * (r / 0.5) ** 2))
    ws = Potential("woods-saxon", {"value": 1.0, "radius": 1.0, "a": 0.1})
    assert abs(ws.eval(np.array([1.0]))[0] - 0.5) < 1e-14
    assert np.all(ZERO.eval(r) == 0.0)
    assert sq.depth == 2.0 and ZERO.depth == 0.0


def test_potential_validation():
    with pytest.raises(DomainError):
        Potential("coulomb")
    with pytest.raises(DomainError):
        Potential("square-well", {"value": 1.0})
    with pytest.raises(DomainError):
        Potential("gaussian", {"value": 1.0, "sigma": 0.0})
    with pytest.raises(DomainError):
        Potential("woods-saxon", {"value": 1.0, "radius": 1.0, "a": -0.2})


def test_potential_json_roundtrip():
    pot = Potential("gaussian", {"value": -1.5, "sigma": 0.4})
    back = potential_from_json(pot.to_json_dict())
    assert back == pot


def test_radial_problem_validation():
    with pytest.raises(DomainError):
        RadialProblem(ell=-1, v=ZERO, w=ZERO, r_match=1.5)
    with pytest.raises(DomainError):
        RadialProblem(ell=0, v=ZERO, w=ZERO, r_match=1.5, r_min=2.0)
    with pytest.raises(DomainError):
        RadialProblem(ell=0, v=ZERO, w=_well(-1.0), r_match=1.5)
    with pytest.raises(DomainError):
        RadialProblem(ell=0, v=_well(-2.0, radius=3.0), w=ZERO, r_match=1.5)


def test_free_partial_waves_unitary():
    for ell in range(6):
        prob = RadialProblem(ell=ell, v=ZERO, w=ZERO, r_match=1.5)
        for lam in (0.5, 1.0, 2.0):
            res = solve_partial_wave(prob, lam)
            assert abs(res.s_ell - 1.0) <= 1e-8
            assert res.method_residual <= 1e-8


def test_threshold_guard():
    prob = RadialProblem(ell=0, v=ZERO, w=ZERO, r_match=1.5)
    with pytest.raises(DomainError):
        solve_partial_wave(prob, 1e-4)


def test_real_square_well_unitary_and_exact():
    v = _well(-2.0)
    for lam in (0.4, 1.0, 2.5, 5.0):
        want = square_well_s0(-2.0, 0.0, 1.0, lam)
        assert abs(abs(want) - 1.0) < 1e-12
        prob = RadialProblem(ell=0, v=v, w=ZERO, r_match=1.5)
        res = solve_partial_wave(prob, lam)
        assert abs(res.abs_s - 1.0) <= 1e-8
        assert abs(res.s_ell - want) <= 1e-6
    for ell in (1, 2, 3):
        prob = RadialProblem(ell=ell, v=v, w=ZERO, r_match=1.5)
        assert abs(solve_partial_wave(prob, 1.3).abs_s - 1.0) <= 1e-8


def test_absorbing_square_well_contracts():
    v, w = _well(-2.0), _well(1.5)
    prob0 = RadialProblem(ell=0, v=v, w=w, r_match=1.5)
    for lam in np.linspace(0.3, 8.0, 25):
        res = solve_partial_wave(prob0, lam)
        want = square_well_s0(-2.0, 1.5, 1.0, lam)
        assert abs(res.s_ell - want) <= 1e-6
        assert res.abs_s <= 1.0 + 1e-9
    for ell in (1, 3, 5):
        prob = RadialProblem(ell=ell, v=v, w=w, r_match=1.5)
        for lam in (0.7, 2.2, 6.0):
            assert solve_partial_wave(prob, lam).abs_s <= 1.0 + 1e-9


def test_perfect_absorption_tuning():
    v0, w0 = cpa_tune()
    assert w0 > 0
    assert abs(square_well_s0(v0, w0, 1.0, 1.0)) <= 1e-10
    prob = RadialProblem(ell=0, v=_well(v0), w=_well(w0), r_match=1.5)
    assert solve_partial_wave(prob, 1.0).abs_s <= 1e-6


def test_resonance_scan_finds_the_absorption_zero():
    v0, w0 = cpa_tune()
    grid = np.linspace(0.6, 1.4, 33)
    found = resonance_scan(_well(v0), _well(w0), 1.5, grid, ell_max=3)
    zeros = [f for f in found if f["is_zero"]]
    assert len(zeros) == 1
    assert zeros[0]["ell"] == 0
    assert abs(zeros[0]["lam_zero"] - 1.0) <= 1e-6
    assert zeros[0]["abs_s"] <= 1e-6


def test_resonance_scan_empty_for_real_potential():
    grid = np.linspace(0.5, 3.0, 21)
    assert resonance_scan(_well(-2.0), ZERO, 1.5, grid, ell_max=2) == []
    with pytest.raises(DomainError):
        resonance_scan(ZERO, ZERO, 1.5, np.array([1.0]))


def test_assemble_s_matrix_summary():
    results = [solve_partial_wave(
        RadialProblem(ell=ell, v=ZERO, w=ZERO, r_match=1.5), 1.0)
        for ell in range(3)]
    summary = assemble_s_matrix(results)
    assert summary.sigma_min == pytest.approx(1.0, abs=1e-10)
    assert summary.sigma_max == pytest.approx(1.0, abs=1e-10)
    blob = summary.to_json_dict()
    assert [e["multiplicity"] for e in blob["entries"]] == [1, 3, 5]
    with pytest.raises(DomainError):
        assemble_s_matrix([])
    other = solve_partial_wave(
        RadialProblem(ell=0, v=ZERO, w=ZERO, r_match=1.5), 2.0)
    with pytest.raises(DomainError):
        assemble_s_matrix(results + [other])


def test_infinity_regularity_verdicts():
    verdict = infinity_regularity(_well(-2.0), _well(1.5), 1.5, 150.0,
                                  ell_max=4)
    assert verdict.bounded
    assert verdict.exponent <= -0.3
    free = infinity_regularity(ZERO, ZERO, 1.5, 150.0, ell_max=2)
    assert free.bounded and free.trivial
    with pytest.raises(DomainError):
        infinity_regularity(_well(-2.0), _well(1.5), 1.5, 10.0)


def test_step_budget_exhaustion():
    prob = RadialProblem(ell=0, v=_well(-2.0), w=ZERO, r_match=1.5,
                         max_steps=40)
    with pytest.raises(NumericalFailure):
        solve_partial_wave(prob, 1.0)


def test_results_to_csv():
    results = [solve_partial_wave(
        RadialProblem(ell=ell, v=_well(-2.0), w=_well(1.5), r_match=1.5), 1.7)
        for ell in range(2)]
    text = results_to_csv(results)
    lines = text.strip().split("\n")
    assert lines[0] == "lambda,ell,re_s,im_s,abs_s,residual"
    assert len(lines) == 3
    cells = lines[1].split(",")
    assert float(cells[0]) == 1.7
    assert int(cells[1]) == 0
    assert complex(float(cells[2]), float(cells[3])) == results[0].s_ell
