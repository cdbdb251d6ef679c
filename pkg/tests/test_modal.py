import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavebeam.errors import ConditioningError, InvalidInput, InvalidParameter
from wavebeam.modal import (FinalData, cauchy_init_vector, coefficient_estimates, compute_calD, compute_dn,
                            fifth_order_equivalence, modal_coefficients, modal_residual, reconstruct_initial,
                            solve_mode, solve_vandermonde, synthesize_solutions)
from wavebeam.spectrum import ModelParams, SpectralBranch, solve_branch

# 50-digit Vandermonde solutions from tests/oracles/freeze_values.py
FROZEN_C = {
    (1, (1.0, 0.0, 0.0, 0.0)): [-0.24119877628178043, 0.61263282840892372 - 0.075589194502290142j,
                                0.61263282840892372 + 0.075589194502290142j,
                                0.0079665597319664949 + 0.038168849879653029j,
                                0.0079665597319664949 - 0.038168849879653029j],
    (3, (0.3, -1.0, 0.7, 0.2)): [-0.063958030715265513, 0.18149290607154931 + 0.16026620841341124j,
                                 0.18149290607154931 - 0.16026620841341124j,
                                 0.00048610928608343716 - 1.1979273966913365e-5j,
                                 0.00048610928608343716 + 1.1979273966913365e-5j],
}


def single_mode(n, values, N=None):
    N = N or n
    arrs = np.zeros((4, N))
    arrs[:, n - 1] = values
    return FinalData(*arrs)


def test_cauchy_vector_unit_position():
    v = cauchy_init_vector(single_mode(1, (1, 0, 0, 0)), ModelParams(), 1)
    assert np.allclose(v, [1, 0, -1, 0.5, 0.51], atol=1e-15)


def test_cauchy_vector_zero_and_range():
    assert np.all(cauchy_init_vector(FinalData.zeros(3), ModelParams(), 2) == 0)
    with pytest.raises(InvalidInput):
        cauchy_init_vector(FinalData.zeros(3), ModelParams(), 4)


@pytest.mark.parametrize("key", sorted(FROZEN_C))
def test_vandermonde_matches_oracle(params, key):
    n, vals = key
    sol = solve_mode(solve_branch(params, n), single_mode(n, vals), params)
    assert np.allclose(sol.C, FROZEN_C[key], rtol=1e-11, atol=1e-14)


def test_vandermonde_reconstructs_derivatives(params, rng):
    br = solve_branch(params, 5)
    init = rng.standard_normal(5)
    C, res = solve_vandermonde(br.roots, init)
    derivs = [np.sum(C * br.roots ** k) for k in range(5)]
    assert np.allclose(derivs, init, atol=1e-10)
    assert res < 1e-8 * np.linalg.norm(init)


def test_vandermonde_zero_and_singular():
    C, _ = solve_vandermonde(np.array([1, 2, 3, 4, 5], dtype=complex), np.zeros(5))
    assert np.all(C == 0)
    with pytest.raises(ConditioningError):
        solve_vandermonde(np.array([1, 1, 3, 4, 5], dtype=complex), np.ones(5))


def test_leading_wave_coefficient_half(params):
    sol = solve_mode(solve_branch(params, 40), single_mode(40, (1, 0, 0, 0)), params)
    assert abs(sol.C[1] - 0.5) < 1e-2


def test_final_data_json_exact_keys():
    d = FinalData.random(3, np.random.default_rng(0))
    assert FinalData.from_json(d.to_json()).to_json() == d.to_json()
    with pytest.raises(InvalidInput):
        FinalData.from_json({"alpha1": [1], "rho1": [1], "alpha2": [1]})
    with pytest.raises(InvalidInput):
        FinalData([1, 2], [1], [1], [1])


def test_final_data_norms():
    d = FinalData([1, 1], [2, 0], [0, 1], [0, 4])
    assert d.norms() == {"z10_H1": 5.0, "z11_L2": 4.0, "z20_H1": 4.0, "z21_Hm1": 4.0}


@pytest.mark.parametrize("N", [8, 32, 64])
def test_round_trip_reconstruction(params, branches64, N):
    data = FinalData.random(N, np.random.default_rng(N))
    co = modal_coefficients(data, params, branches64)
    rec = reconstruct_initial(co)
    assert np.linalg.norm(rec.as_vector() - data.as_vector()) < 1e-7 * np.linalg.norm(data.as_vector())
    C = co.C
    assert np.allclose(C[:, 2], np.conj(C[:, 1])) and np.allclose(C[:, 4], np.conj(C[:, 3]))


def test_modal_residual_small(params, branches16):
    data = FinalData.random(16, np.random.default_rng(1))
    co = modal_coefficients(data, params, branches16)
    t = np.linspace(0, params.T, 101)
    assert max(modal_residual(m, params, t) for m in co.modes) < 1e-8


def test_synthesis_real_and_initial(params, branches8):
    data = FinalData.random(8, np.random.default_rng(2))
    co = modal_coefficients(data, params, branches8)
    syn = synthesize_solutions(co, branches8)
    x = np.linspace(0, np.pi, 9)
    # u2(0, x) equals the sine series of the alpha2 coefficients
    assert np.allclose(syn.u2(0.0, x)[0], np.sin(np.outer(x, np.arange(1, 9))) @ data.alpha2, atol=1e-8)
    t = np.linspace(0, 7, 31)
    assert syn.trace_u1x().realness_residue(t) < 1e-10
    assert syn.trace_u2x().realness_residue(t) < 1e-10


def test_zero_data_gives_zero_solution(params, branches8):
    syn = synthesize_solutions(modal_coefficients(FinalData.zeros(8), params, branches8), branches8)
    assert np.all(syn.u1(np.linspace(0, 1, 3), np.linspace(0, 3, 4)) == 0)


def test_variation_of_constants_matches_closed_form(params, branches16):
    data = FinalData.random(16, np.random.default_rng(3))
    syn = synthesize_solutions(modal_coefficients(data, params, branches16), branches16)
    t = np.linspace(0, 7, 57)
    for n in range(1, 17):
        a, b = syn.f2(n)(t), syn.f2_variation(n)(t)
        assert np.max(np.abs(a - b)) <= 1e-9 * max(1.0, np.max(np.abs(a)))


def test_beam_pair_form_gap_is_predicted(params, branches16):
    # the d_n form keeps only part of the beam amplitude; the gap matches its closed form
    data = FinalData.random(16, np.random.default_rng(4))
    syn = synthesize_solutions(modal_coefficients(data, params, branches16), branches16)
    gap, pred = syn.dn_form_gap(), syn.dn_form_gap_predicted()
    assert np.allclose(gap, pred, rtol=1e-6, atol=1e-14)
    assert np.all(gap[4:] < 1e-9)
    assert gap[0] > 1e-3


def test_dn_interval_and_large_n(params, branches64):
    q = np.array([abs(compute_dn(b, params)) / abs(b.p) ** 2 for b in branches64])
    assert q.min() > 0 and np.isfinite(q.max())
    for b in branches64[15:]:
        assert abs(compute_dn(b, params) * params.A / b.p ** 2 - 1) < 0.1


def test_dn_memoryless_and_guards():
    p = ModelParams(beta=0.0)
    br = solve_branch(p, 3)
    assert compute_dn(br, p) == pytest.approx((br.p ** 2 - br.p.real) / p.A)
    with pytest.raises(InvalidParameter):
        compute_dn(br, ModelParams(A=0.0))


def test_calD_hand_value():
    br = SpectralBranch(n=1, r=-0.5, omega=1 + 0.25j, p=1 + 0j, p_shift=0j)
    assert compute_calD([1.0], [br], ModelParams()) == pytest.approx(-5.0)
    assert compute_calD([0.0], [br], ModelParams()) == 0.0


def test_coefficient_limits(params, branches64):
    data = FinalData.random(64, np.random.default_rng(5))
    est = coefficient_estimates(modal_coefficients(data, params, branches64), data)
    assert est.tail_mean("i") == pytest.approx(0.25, rel=0.05)
    assert est.tail_mean("iii") == pytest.approx(params.A ** 2 / 4, rel=0.05)
    lo, hi = est.ranges()["ii"]
    assert hi < 10


def test_coefficient_estimates_vacuous_branch(params, branches8):
    data = FinalData(np.zeros(8), np.zeros(8), np.ones(8), np.ones(8))
    est = coefficient_estimates(modal_coefficients(data, params, branches8), data)
    assert est.vacuous_i and not est.vacuous_iii
    with pytest.raises(InvalidInput):
        coefficient_estimates(modal_coefficients(FinalData.zeros(4), params, branches8), FinalData.zeros(4))


def test_coupled_path_requires_coupling():
    p = ModelParams(A=0.0, B=0.0)
    with pytest.raises(InvalidParameter):
        modal_coefficients(FinalData.zeros(2), p)


@pytest.mark.parametrize("data", [(1, 0, 0, 0), (0, 0, 1, 0), (0.3, -1, 0.7, 0.2)])
def test_fifth_order_equivalence(params, data):
    assert fifth_order_equivalence(params, 2, data, T=5.0) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.1, 10))
def test_coefficients_linear_in_data(vals, s):
    p = ModelParams()
    br = solve_branch(p, 2)
    a = solve_mode(br, single_mode(2, vals), p).C
    b = solve_mode(br, single_mode(2, [s * v for v in vals]), p).C
    assert np.allclose(b, s * a, rtol=1e-10, atol=1e-12)
