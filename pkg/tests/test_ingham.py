import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from wavebeam import ingham as ig
from wavebeam.errors import InvalidInput, PreconditionError
from wavebeam.expsum import ExponentialSum
from wavebeam.spectrum import ModelParams, solve_spectrum, validate_hypotheses

# mpmath quadrature (tests/oracles/freeze_values.py), T = 7, u = 1 + 0.3i
FROZEN_SINE = -0.42806987343755831 + 0.31151768575849696j
FROZEN_COSINE = -0.44941461621366271 + 1.6931560492738613j

# first green run, N = 16, T = 7, 1000 draws, seeds 0 / 1000 / 2000
C1_BASELINE = [52.96231696842232, 46.26447496873714, 65.809265946573]
C2_BASELINE = [4476942.1969481995, 4437812.911586793, 4780156.59828081]


def test_sine_window_at_zero():
    w = ig.WindowSine(7.0)
    assert w.K(0) == pytest.approx(7 / np.pi)
    assert w.transform(0) == pytest.approx(2 * 7 / np.pi)
    assert ig.window_transform_identity_check(w, 0.0) < 1e-13


def test_window_transforms_match_oracle():
    u = 1 + 0.3j
    assert abs(ig.WindowSine(7.0).transform(u) - FROZEN_SINE) < 1e-13
    assert abs(ig.WindowCosine(7.0).transform(u) - FROZEN_COSINE) < 1e-13
    for w in (ig.WindowSine(7.0), ig.WindowCosine(7.0)):
        assert ig.window_transform_identity_check(w, u) < 1e-10


def test_cosine_window_is_doubled_sine_window_of_twice_the_horizon():
    u = np.array([0.3, 1.1 + 0.2j, -2.5 + 0.7j])
    assert np.allclose(ig.WindowCosine(3.0).K(u), 2 * ig.WindowSine(6.0).K(u))


def test_pole_guard():
    with pytest.raises(InvalidInput):
        ig.window_transform_identity_check(ig.WindowSine(7.0), np.pi / 7)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-2, 2))
def test_kernel_conjugation_symmetry(a, b):
    w = ig.WindowSine(7.0)
    u = complex(a, b)
    if w.pole_distance(u) > 1e-6:
        assert abs(w.K(u)) == pytest.approx(abs(w.K(np.conj(u))), rel=1e-12)


def test_windows_nonnegative():
    t = np.linspace(-10, 10, 2001)
    assert np.all(ig.WindowSine(7.0).k(t) >= 0)
    assert np.all(ig.WindowCosine(7.0).k(t) >= 0)
    assert ig.WindowSine(7.0).k(8.0) == 0 and ig.WindowCosine(7.0).k(-7.5) == 0


def test_windowed_norm_against_quadrature(branches8, params):
    fam = ig.SeriesFamily(branches8, params)
    f = fam.u1(fam.draw(np.random.default_rng(0)))
    q = quad(lambda t: np.sin(np.pi * t / 7) * f(t) ** 2, 0, 7, limit=400)[0]
    assert ig.windowed_norm2(f, 7.0) == pytest.approx(q, rel=1e-9)


def test_telescoping_sum():
    assert ig.tail_reciprocal_sum(1) == 0.5
    M = 20000
    m = np.arange(3, M + 1, dtype=float)
    # partial sums telescope to (1/2)(1/(2 n0 - 1) - 1/(2M + 1))
    assert np.sum(1 / (4 * m * m - 1)) + 0.5 / (2 * M + 1) == pytest.approx(ig.tail_reciprocal_sum(3), rel=1e-12)


def test_kernel_sums_default_and_decoupled(branches16, params):
    rep = validate_hypotheses(branches16, params)
    b = ig.kernel_sum_bounds(branches16, 7.0, 0.1, rep.gamma_hat)
    assert b.holds and b.n0_hat == 1
    q = ModelParams(A=0.0, B=0.0)
    bd = ig.kernel_sum_bounds(solve_spectrum(q, 16), 7.0, 0.1, 1.0)
    assert bd.holds


def test_kernel_sums_single_mode(branches8):
    b = ig.kernel_sum_bounds(branches8[:1], 7.0, 0.1, 1.0)
    assert b.holds and b.minus_sums[0] == 0


def test_kernel_sums_preconditions(branches8):
    with pytest.raises(PreconditionError):
        ig.kernel_sum_bounds(branches8, 7.0, 0.1, 0.5)
    with pytest.raises(InvalidInput):
        ig.kernel_sum_bounds(branches8, 7.0, 1.5, 1.0)


def test_single_mode_inverse_ratio(branches8, params):
    fam = ig.SeriesFamily(branches8, params)
    theta = np.zeros(4 * fam.N)
    theta[0] = 1.0  # C_1 = 1, so R_1 = 1 and D = 0
    u1 = fam.u1(theta)
    br = branches8[0]
    direct = lambda t: (np.exp(br.r * t) + 2 * np.real(np.exp(1j * br.omega * t)))
    q = quad(lambda t: direct(t) ** 2, 0, 7, limit=200)[0]
    assert u1.norm2(0, 7) == pytest.approx(q, rel=1e-10)
    Q = fam.quadratic_form(0, 7)
    W = fam.coefficient_weights(True)
    assert theta @ Q @ theta / (theta @ W @ theta) == pytest.approx(q, rel=1e-10)


def test_quadratic_form_is_closed_form_norm(branches8, params):
    fam = ig.SeriesFamily(branches8, params)
    th = fam.draw(np.random.default_rng(3))
    Q = fam.quadratic_form(0, 7)
    assert th @ Q @ th == pytest.approx(fam.u1(th).norm2(0, 7) + fam.u2(th).norm2(0, 7), rel=1e-10)
    assert fam.calD(th) == pytest.approx(fam.u2(th).amplitude_at(-params.eta).real, rel=1e-12)


@pytest.fixture(scope="module")
def constants(branches16, params):
    c1 = [ig.estimate_inverse_constant(branches16, 1000, 7.0, s, params) for s in (0, 1000, 2000)]
    c2 = [ig.estimate_direct_constant(branches16, 1000, 7.0, s, params) for s in (0, 1000, 2000)]
    return c1, c2


def test_inverse_and_direct_constants(constants):
    c1, c2 = constants
    v1 = np.array([c.value for c in c1])
    v2 = np.array([c.value for c in c2])
    assert np.all(v1 > 0) and np.all(np.isfinite(v2))
    # Monte-Carlo extremes stay inside the exact generalized eigenvalue range
    assert np.all(v1 >= c1[0].exact * (1 - 1e-12)) and np.all(v2 <= c2[0].exact * (1 + 1e-12))
    assert v1.max() / v1.min() <= 1.5 and v2.max() / v2.min() <= 1.5
    assert np.allclose(v1, C1_BASELINE, rtol=1e-9)
    assert np.allclose(v2, C2_BASELINE, rtol=1e-9)


def test_sandwich_per_draw(constants):
    c1, c2 = constants
    for a, b in zip(c1, c2):
        assert np.all(a.ratios >= min(x.value for x in c1))
        assert np.all(b.ratios <= max(x.value for x in c2))
        # [0, T] with the extra calD weight never exceeds [-T, T] without it
        assert np.all(a.ratios <= b.ratios)


def test_ratios_scale_invariant(branches8, params):
    fam = ig.SeriesFamily(branches8, params)
    Q, W = fam.quadratic_form(0, 7), fam.coefficient_weights(True)
    th = np.array([fam.draw(np.random.default_rng(i)) for i in range(5)])
    assert np.allclose(ig._ratios(Q, W, th), ig._ratios(Q, W, 2 * th), rtol=1e-13)


def test_constant_preconditions(branches16, params):
    with pytest.raises(PreconditionError):
        ig.estimate_inverse_constant(branches16, 50, 7.0, 0, params)
    with pytest.raises(PreconditionError):
        ig.estimate_inverse_constant(branches16, 100, 5.0, 0, params)
    with pytest.raises(PreconditionError):
        ig.estimate_direct_constant(branches16, 10, 3.0, 0, params)


def test_annihilator_kills_own_exponential():
    z = 1.3 - 0.2j
    op = ig.Annihilator(0.3, z)
    assert len(ig.annihilate(op, ExponentialSum([2.0], [1j * z]))) == 0


def test_annihilator_on_constant():
    z, d = 2.0 + 0.1j, 0.4
    out = ig.annihilate(ig.Annihilator(d, z), ExponentialSum([1.0], [0.0]))
    assert out.amplitudes[0] == pytest.approx(1 - (np.exp(-1j * z * d) - 1) / (-1j * z * d), rel=1e-14)


def test_annihilator_quadrature_cross_check():
    op = ig.Annihilator(0.35, 0.7 + 0.1j)
    f = ExponentialSum([1.0, 0.5 - 1j, 0.5 + 1j], [-0.2, 2j - 0.1, -2j - 0.1])
    t = np.linspace(0, 3, 7)
    assert np.allclose(op.apply_samples(f.evaluate, t), ig.annihilate(op, f).evaluate(t), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(-3, 3), st.floats(-3, 3))
def test_annihilators_commute(d1, d2, z1, z2):
    f = ExponentialSum([1.0, 2 - 1j, 0.3j], [0.0, 1.5j - 0.2, -0.7j])
    a, b = ig.Annihilator(d1, z1), ig.Annihilator(d2, z2)
    ab = ig.annihilate(a, ig.annihilate(b, f))
    ba = ig.annihilate(b, ig.annihilate(a, f))
    t = np.linspace(0, 2, 5)
    assert np.allclose(ab.evaluate(t), ba.evaluate(t), atol=1e-12)


def test_composed_annihilator_kills_a_mode(branches8, params):
    fam = ig.SeriesFamily(branches8, params)
    u1 = fam.u1(fam.draw(np.random.default_rng(0)))
    for br in branches8[:3]:
        out = ig.annihilate(ig.ComposedAnnihilator.for_branch(br, 0.2), u1)
        assert all(abs(out.amplitude_at(z, 1e-9)) == 0 for z in br.roots)
        assert len(out) == len(u1) - 5


def test_composed_annihilator_growth_bound(branches8, params):
    fam = ig.SeriesFamily(branches8, params)
    rng = np.random.default_rng(1)
    for i in range(20):
        f = fam.u1(fam.draw(rng))
        op = ig.ComposedAnnihilator.for_branch(branches8[i % 8], float(rng.uniform(0.05, 0.5)))
        lhs, rhs = ig.annihilator_bound_check(op, f, 7.0)
        assert lhs <= rhs


def test_choose_delta_keeps_survivors(branches8):
    survivors = np.concatenate([b.roots for b in branches8[3:]] + [[-1.0]])
    d = ig.choose_delta(0.1, 4, 2 * np.pi, survivors, branches8[:3])
    fac = np.ones(survivors.size, dtype=complex)
    for b in branches8[:3]:
        fac *= ig.ComposedAnnihilator.for_branch(b, d).factor(survivors)
    assert np.min(np.abs(fac)) > 1e-12
    assert d >= min(0.1 / 20, 2 * np.pi / 8)


def test_haraux_shift_removes_constants():
    f = ExponentialSum([3.0, 1.0], [0.0, -1.0], real=True)
    h = ig.haraux_shift(f, 0.5)
    assert h.amplitude_at(0.0) == 0
    t = np.linspace(0, 2, 5)
    direct = np.array([quad(lambda s: f(x) - f(x + s), 0, 0.5)[0] for x in t])
    assert np.allclose(h(t), direct, atol=1e-12)


def test_finite_deficiency_report(branches16, params):
    fam = ig.SeriesFamily(branches16, params)
    rng = np.random.default_rng(7)
    th = fam.draw(rng, n0=2)
    rep = ig.finite_deficiency_inverse(branches16, th, 7.0, 0.1, params, n0=2)
    assert np.all(rep.positivity_546 > 0)
    assert rep.slack_546 > 0 and rep.slack_shifted > 0
    assert rep.implied_c_541 > 0 and rep.implied_c_window > 0 and rep.implied_c_552 > 0
    assert "positivity_min" in rep.to_json()


def test_finite_deficiency_wave_only_reduces_to_window_bound(branches16, params):
    fam = ig.SeriesFamily(branches16, params)
    th = fam.draw(np.random.default_rng(8), n0=2)
    th[2 * fam.N:] = 0.0
    rep = ig.finite_deficiency_inverse(branches16, th, 7.0, 0.1, params, n0=2)
    assert rep.d_penalty == 0 and rep.lhs_546 == 0
    # the window is at most 1, so the plain integral dominates the windowed one
    assert rep.lhs_541 >= rep.window_lhs > 0


def test_finite_deficiency_rejects_low_modes(branches16, params):
    fam = ig.SeriesFamily(branches16, params)
    th = fam.draw(np.random.default_rng(9))
    with pytest.raises(PreconditionError):
        ig.finite_deficiency_inverse(branches16, th, 7.0, 0.1, params, n0=3)


def test_calD_constant_derived_and_printed(branches64, params):
    from wavebeam.modal import FinalData, modal_coefficients
    C = ig.calD_bound_constant(branches64, params)
    Cp = ig.calD_bound_constant(branches64, params, as_printed=True)
    w4 = np.abs([b.p for b in branches64]) ** 4
    ratios = []
    for i in range(20):
        co = modal_coefficients(FinalData.random(64, np.random.default_rng(i)), params, branches64)
        ratios.append(co.calD ** 2 / np.sum(np.abs(co.Dn) ** 2 * w4))
    assert max(ratios) <= C
    # the printed constant is too small for generic data
    assert max(ratios) > Cp
