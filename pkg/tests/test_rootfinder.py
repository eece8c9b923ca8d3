import numpy as np
import pytest

from app.services import asymptotics
from app.services.dispersion import FOUR_PI, d_epsilon_values, resolvent_correction_kernel
from app.services.errors import (
    BracketError, ConvergenceError, EigenvalueRangeError, IllConditionedError, InvalidConfigError,
    SplitBracketError, UnsupportedRegimeError,
)
from app.services.riemann import A_CONST, SheetPoint
from app.services.rootfinder import (
    LOG_MAX, Method, Sign, SingularityKind, classify_regime, continued_bound_state, continued_zeros,
    deep_eigenvalue_search, eigenvalue_bisection, eigenvalue_fixed_point, expand_bracket,
    find_singularities, negative_axis_roots, newton_oracle, positive_axis_profile, positive_axis_scan,
    regime_brackets, resonance_fixed_point, root_cluster, scan_window, verify_resonant_state,
    virtual_state, zero_resonance_detector,
)


def resonance(params):
    return resonance_fixed_point(params)[0].location


def threshold_eigenvalue(params):
    (bracket,) = regime_brackets(params)
    return eigenvalue_bisection(params, bracket).location.real


@pytest.mark.parametrize('d, theta0, c, label, case', [
    (1, 1.0, -1.0, 'd=1, c<0, theta0>0', 1),
    (2, 0.0, -1.0, 'd=2, c<0, theta0=0', 2),
    (3, -1.0, -2.0, 'd=3, c<0, theta0<0', 3),
    (1, 0.0, 0.0, 'd=1, c=0, theta0=0', 4),
    (2, 0.0, 0.0, 'd=2, c=0, theta0=0', 5),
    (3, 0.5, 0.0, 'd=3, c=0, theta0>0', 6),
    (2, -1.0, 3.0, 'd=2, c>0, theta0<0', 7),
])
def test_classify_regime(make_params, d, theta0, c, label, case):
    regime = classify_regime(make_params(d, theta0, c, 0.1))
    assert regime.label == label
    assert regime.case_number == case


def test_regime_flags(make_params):
    assert classify_regime(make_params(1, 1.0, -1.0, 0.1)).has_resonance
    assert not classify_regime(make_params(1, 1.0, -1.0, 0.1)).has_threshold_eigenvalue
    assert classify_regime(make_params(1, 0.0, 0.0, 0.1)).has_cluster
    assert classify_regime(make_params(2, 0.0, 1.0, 0.1)).has_runaway_eigenvalue
    regime = classify_regime(make_params(3, 0.0, 0.0, 0.1))
    assert regime.has_zero_resonance and regime.has_virtual_state and not regime.has_resonance
    assert Sign.of(-0.0) == Sign.ZERO


def test_decoupled_bisection_is_exact(make_params):
    params = make_params(1, 0.0, 1.0, 0.1, b=0.0)
    result = eigenvalue_bisection(params, (0.05, 0.2))
    assert result.kind == SingularityKind.ISOLATED_EIGENVALUE
    assert result.method == Method.BISECTION
    assert result.location.real == pytest.approx(-0.1025, rel=1e-13)


def test_bisection_without_sign_change(make_params):
    with pytest.raises(BracketError):
        eigenvalue_bisection(make_params(1, 0.0, 1.0, 0.1, b=0.0), (0.2, 0.5))


def test_bisection_refuses_split_bracket(make_params):
    params = make_params(2, 0.0, 0.0, 1.2)
    with pytest.raises(SplitBracketError) as excinfo:
        eigenvalue_bisection(params, (1.0, float(np.exp(500.0))))
    assert excinfo.value.log_asymptote == pytest.approx(FOUR_PI * (1 / A_CONST + A_CONST / 1.44))


def test_expand_bracket():
    lo, hi = expand_bracket(lambda x: x - 50.0, 1.0, 2.0)
    assert lo < 50.0 < hi
    with pytest.raises(BracketError):
        expand_bracket(lambda x: 1.0, 1.0, 2.0, max_tries=3)


RESONANCE_CELLS = [
    (1, 1.0, -1.0), (1, 2.0, 0.0), (1, 0.0, -1.0), (1, -1.0, -1.0),
    (2, 5.0, 0.0), (2, 1.0, -1.0), (2, -1.0, -1.0), (2, 0.0, -1.0),
    (3, 1.0, -2 * np.pi), (3, -1.0, -2 * np.pi), (3, 0.0, -2 * np.pi),
]


@pytest.mark.parametrize('eps', [1e-2, 1e-3, 1e-4])
@pytest.mark.parametrize('d, theta0, c', RESONANCE_CELLS)
def test_recursion_and_newton_agree(make_params, d, theta0, c, eps):
    params = make_params(d, theta0, c, eps)
    found, trace = resonance_fixed_point(params)
    assert trace.converged
    polished = newton_oracle(params, found.location)
    assert polished.sheet == -1
    assert polished.location == pytest.approx(found.location, rel=1e-10)


def test_recursion_contracts_inside_a_small_ball(make_params, ladder):
    for eps in ladder:
        _, trace = resonance_fixed_point(make_params(1, 1.0, -1.0, eps))
        # the first step leaves the seed and the last one may sit at the rounding floor
        interior = trace.ratios[1:-1]
        assert interior
        assert max(interior) <= 2.0 * eps ** 1.5
        assert max(abs(z) for z in trace.iterates) <= 2.0 * eps


@pytest.mark.parametrize('d, theta0, c, slope', [
    (1, 1.0, -1.0, 1.0),
    (3, 1.0, -2 * np.pi, 1.0),
    (1, 2.0, 0.0, 2.0),
])
def test_resonance_size_scaling(make_params, ladder, d, theta0, c, slope):
    sizes = [abs(resonance(make_params(d, theta0, c, eps))) for eps in ladder]
    fitted = np.polyfit(np.log(ladder), np.log(sizes), 1)[0]
    assert fitted == pytest.approx(slope, abs=0.05)


def test_cluster_eigenvalue_size_scaling(make_params, ladder):
    sizes = []
    for eps in ladder:
        (eigen,) = [r for r in root_cluster(make_params(1, 0.0, 0.0, eps)) if r.sheet == 0]
        sizes.append(abs(eigen.location))
    fitted = np.polyfit(np.log(ladder), np.log(sizes), 1)[0]
    assert fitted == pytest.approx(4 / 3, abs=0.05)


def test_newton_refuses_a_flat_derivative(make_params, monkeypatch):
    monkeypatch.setattr('app.services.rootfinder.d_epsilon_derivative', lambda *args: 1e-20 + 0j)
    with pytest.raises(IllConditionedError):
        newton_oracle(make_params(1, 1.0, -1.0, 1e-2), 0.05 - 0.01j)


def test_continued_zeros_d1_virtual_states(make_params):
    params = make_params(1, 0.0, 1.0, 1e-3)
    zeros = continued_zeros(params)
    assert [z.kind for z in zeros] == [SingularityKind.VIRTUAL_STATE] * 2
    assert all(z.sheet == -1 and z.location.imag == 0 for z in zeros)
    # sigma^3 - c eps sigma + eps^2/2 = 0 with z = -sigma^2
    assert zeros[0].location.real == pytest.approx(-2.5e-7, rel=1e-2)
    assert zeros[1].location.real == pytest.approx(-9.84e-4, rel=1e-2)


def test_continued_zeros_d1_resonance_pair(make_params):
    params = make_params(1, 0.0, 0.05, 1e-2)
    first, second = continued_zeros(params)
    assert first.kind == second.kind == SingularityKind.RESONANCE
    assert first.location.real > 0 and second.location.real > 0
    assert first.location == pytest.approx(np.conj(second.location), rel=1e-8)
    for zero in (first, second):
        assert abs(d_epsilon_values(params, zero.location, -1, 0)) < 1e-14


def test_continued_zero_d2(make_params):
    params = make_params(2, 0.0, 1.0, 1e-3)
    (zero,) = continued_zeros(params)
    assert zero.kind == SingularityKind.RESONANCE and zero.sheet == -1
    assert zero.location.real == pytest.approx(-FOUR_PI * 1e-3 / A_CONST ** 2, rel=0.05)
    assert zero.location.imag < 0


@pytest.mark.parametrize('d, theta0, c', [(1, 1.0, 1.0), (3, 0.0, 1.0), (2, 0.0, -1.0)])
def test_continued_zeros_need_their_cell(make_params, d, theta0, c):
    with pytest.raises(UnsupportedRegimeError):
        continued_zeros(make_params(d, theta0, c, 1e-3))


def test_negative_coupling_d1_resonance(make_params, ladder):
    numeric = {}
    for eps in ladder:
        params = make_params(1, 1.0, -1.0, eps)
        found, trace = resonance_fixed_point(params)
        assert trace.converged
        assert found.sheet == -1 and found.location.imag < 0
        polished = newton_oracle(params, found.location)
        assert polished.location == pytest.approx(found.location, rel=1e-10)
        numeric[eps] = found.location
    expansion = asymptotics.leading_order(make_params(1, 1.0, -1.0, 1e-3))
    fit = asymptotics.fit_remainder_order(numeric, expansion)
    assert fit.fitted_slope == pytest.approx(3.0, abs=0.2)
    # eps^3 coefficient of the remainder: -|c| (4/theta0^3 + 1/(2 theta0))
    residual = numeric[1e-3] - expansion.evaluate(1e-3)
    assert residual / 1e-9 == pytest.approx(-4.5, rel=0.1)


def test_negative_coupling_d1_theta0_zero(make_params, ladder):
    numeric = {}
    for eps in ladder:
        params = make_params(1, 0.0, -1.0, eps)
        numeric[eps] = resonance(params)
        energy = threshold_eigenvalue(params)
        assert -eps ** 2 / 4 < energy < 0
        assert energy >= asymptotics.eigenvalue_bound(params)
    expansion = asymptotics.leading_order(make_params(1, 0.0, -1.0, 1e-3))
    fit = asymptotics.fit_remainder_order(numeric, expansion)
    assert fit.fitted_slope == pytest.approx(2.0, abs=0.3)


@pytest.mark.parametrize('theta0', [0.0, 1.0, -1.0])
def test_negative_coupling_d3_imaginary_part(make_params, ladder, theta0):
    numeric = {eps: resonance(make_params(3, theta0, -2 * np.pi, eps)) for eps in ladder}
    assert all(z.imag < 0 for z in numeric.values())
    expansion = asymptotics.leading_order(make_params(3, theta0, -2 * np.pi, 1e-3)).component('imag')
    fit = asymptotics.fit_remainder_order(numeric, expansion)
    assert fit.fitted_slope >= 2.9


def test_threshold_cluster_d1(make_params):
    eps = 1e-3
    params = make_params(1, 0.0, 0.0, eps)
    roots = root_cluster(params)
    assert len(roots) == 3
    moduli = [abs(r.location) for r in roots]
    assert max(moduli) - min(moduli) <= 10 * eps ** (8 / 3)
    args = sorted((SheetPoint(r.location, r.sheet).arg, r.sheet) for r in roots)
    expected = sorted([(np.pi, 0), (-np.pi / 3, -1), (-5 * np.pi / 3, -1)])
    for (arg, sheet), (want, want_sheet) in zip(args, expected):
        assert sheet == want_sheet
        assert arg == pytest.approx(want, abs=0.05)


def test_threshold_cluster_eigenvalue_order(make_params, ladder):
    numeric = {}
    for eps in ladder:
        roots = root_cluster(make_params(1, 0.0, 0.0, eps))
        (eigen,) = [r for r in roots if r.sheet == 0]
        assert eigen.kind == SingularityKind.ISOLATED_EIGENVALUE
        numeric[eps] = eigen.location
    expansion = asymptotics.leading_order(make_params(1, 0.0, 0.0, 1e-3))
    fit = asymptotics.fit_remainder_order(numeric, expansion)
    assert fit.fitted_slope == pytest.approx(8 / 3, abs=0.3)


def test_eigenvalue_recursion_matches_bisection(make_params):
    params = make_params(1, -1.0, 0.0, 1e-2)
    recursed, trace = eigenvalue_fixed_point(params)
    assert trace.converged
    assert recursed.location.real == pytest.approx(threshold_eigenvalue(params), rel=1e-9)
    with pytest.raises(UnsupportedRegimeError):
        eigenvalue_fixed_point(make_params(1, 1.0, 0.0, 1e-2))


def test_positive_coupling_eigenvalue_d1(make_params):
    params = make_params(1, 1.0, 1.0, 1e-3)
    energy = threshold_eigenvalue(params)
    assert energy == pytest.approx(-1e-3, rel=0.1)
    with pytest.raises(UnsupportedRegimeError):
        resonance_fixed_point(params)


def test_d2_eigenvalue_respects_bound(make_params):
    for eps in (0.2, 0.1):
        params = make_params(2, 0.0, -1.0, eps)
        energy = threshold_eigenvalue(params)
        bound = asymptotics.eigenvalue_bound(params)
        assert energy < 0
        assert energy >= bound * (1 + 1e-9)


def test_runaway_eigenvalue_moves_down(make_params):
    energies = [deep_eigenvalue_search(make_params(2, 0.0, 0.0, eps)).location.real for eps in (1.5, 1.2, 1.0)]
    assert energies[0] > energies[1] > energies[2]
    with pytest.raises(EigenvalueRangeError) as excinfo:
        deep_eigenvalue_search(make_params(2, 0.0, 0.0, 0.5))
    assert excinfo.value.log_asymptote > LOG_MAX


@pytest.mark.parametrize('c', [-1.0, 0.0])
def test_d2_resonance_real_part_ratio(make_params, ladder, c):
    theta0 = 1.0 if c else 5.0
    params = make_params(2, theta0, c, 1e-5)
    ratio = resonance(params).real / asymptotics.leading_order(params).evaluate(1e-5)
    assert 0.8 <= ratio <= 1.2
    for eps in ladder:
        assert resonance(make_params(2, theta0, c, eps)).imag < 0


def test_d2_resonance_theta0_zero_ratio(make_params, ladder):
    params = make_params(2, 0.0, -1.0, 1e-5)
    ratio = resonance(params).real / asymptotics.leading_order(params).evaluate(1e-5)
    assert 0.8 <= ratio <= 1.2
    assert all(resonance(make_params(2, 0.0, -1.0, eps)).imag < 0 for eps in ladder)


def test_d2_threshold_eigenvalue_ratio(make_params):
    params = make_params(2, 0.0, 0.0, 1e-5)
    ratio = threshold_eigenvalue(params) / asymptotics.leading_order(params).evaluate(1e-5).real
    assert 0.8 <= ratio <= 1.5


def test_zero_energy_resonance_d3(make_params):
    eps = 0.1
    params = make_params(3, 0.5, 0.0, eps)
    report = zero_resonance_detector(params)
    detected, coefficient = report
    assert detected and report.behavior == 'finite'
    assert coefficient == pytest.approx(1j * eps ** 2 / (16 * np.pi ** 2), rel=1e-3)
    assert verify_resonant_state(params)


def test_zero_energy_limit_behaviors(make_params):
    assert zero_resonance_detector(make_params(3, 0.5, 0.0, 0.0)).behavior == 'vanishing'
    report = zero_resonance_detector(make_params(3, 0.5, 1.0, 0.1))
    assert not report.detected and report.behavior == 'diverging'
    with pytest.raises(UnsupportedRegimeError):
        zero_resonance_detector(make_params(1, 0.5, 0.0, 0.1))


def test_wrong_state_fails_verification(make_params):
    params = make_params(3, 0.5, 0.0, 0.1)
    assert not verify_resonant_state(params, state=lambda r: (1.0 / r, np.exp(-r) / r), check_pde=False)


def test_kernel_blows_up_like_inverse_sqrt(make_params):
    params = make_params(3, 0.5, 0.0, 1.0)
    z = SheetPoint(-1e-12, 0)
    scaled = np.sqrt(-1e-12 + 0j) * resolvent_correction_kernel(params, z, 1.0, 2.0, 1, 1)
    expected = asymptotics.kernel_singular_coefficient(params, 1.0, 2.0)
    assert scaled == pytest.approx(expected, rel=1e-3)


def test_virtual_state(make_params):
    params = make_params(3, 0.0, 0.0, 0.1)
    state = virtual_state(params)
    k = (0.1 / FOUR_PI) ** 2
    assert state.kind == SingularityKind.VIRTUAL_STATE and state.sheet == -1
    assert state.location.real == pytest.approx(-4 * k ** 2, rel=1e-6)
    assert abs(d_epsilon_values(params, state.location, -1, 0)) < 1e-14


def test_continued_bound_state_d1(make_params):
    found = continued_bound_state(make_params(1, 1.0, -1.0, 1e-2))
    assert found.kind == SingularityKind.ISOLATED_EIGENVALUE
    assert found.location.real == pytest.approx(-0.25, rel=1e-2)
    assert continued_bound_state(make_params(1, 0.0, -1.0, 1e-2)) is None


def test_no_eigenvalue_in_resonance_window(make_params):
    params = make_params(1, 1.0, -1.0, 1e-3)
    assert scan_window(params) == pytest.approx(0.125)
    assert negative_axis_roots(params) == []


@pytest.mark.parametrize('d, theta0, c, eps', [
    (1, 1.0, -1.0, 0.1), (1, 0.0, -1.0, 0.1), (1, 0.0, 0.0, 0.1), (1, 1.0, 1.0, 0.1),
    (1, 1.0, 0.0, 0.1), (1, -1.0, 0.0, 0.1),
    (2, 1.0, -1.0, 0.1), (2, 0.0, -1.0, 0.2), (2, 0.0, 0.0, 0.2),
    (2, 1.0, 0.0, 0.2), (2, -1.0, 0.0, 0.2), (2, 0.0, 1.0, 0.2), (2, 1.0, 1.0, 0.2),
    (3, 0.0, -1.0, 0.5), (3, 0.0, 1.0, 0.5),
])
def test_no_embedded_eigenvalues(make_params, d, theta0, c, eps):
    params = make_params(d, theta0, c, eps)
    profile = positive_axis_profile(params)
    assert profile.size == 100_000
    floor = positive_axis_scan(params)
    assert floor > 0
    assert floor >= 1e-3 * np.median(profile)


def test_zero_resonance_cell_scan_floor_sits_at_threshold(make_params):
    profile = positive_axis_profile(make_params(3, 0.5, 0.0, 0.1))
    assert profile.min() > 0
    assert int(np.argmin(profile)) == 0


def test_scan_rejects_non_positive_grid(make_params):
    with pytest.raises(InvalidConfigError):
        positive_axis_profile(make_params(1, 1.0, 0.0, 0.1), np.array([0.0, 1.0]))


def test_solver_guards(make_params):
    with pytest.raises(InvalidConfigError):
        resonance_fixed_point(make_params(1, 1.0, -1.0, 0.0))
    with pytest.raises(InvalidConfigError):
        resonance_fixed_point(make_params(1, 1.0, -1.0, 0.8))
    with pytest.raises(ConvergenceError) as excinfo:
        resonance_fixed_point(make_params(1, 1.0, -1.0, 1e-2), max_iter=1)
    assert len(excinfo.value.trace.iterates) == 2


def test_find_singularities_cluster_cell(make_params):
    found, notes = find_singularities(make_params(1, 0.0, 0.0, 1e-3))
    assert len(found) == 3 and notes == []


def test_find_singularities_zero_resonance_cell(make_params):
    found, _ = find_singularities(make_params(3, 0.0, 0.0, 0.1))
    kinds = {s.kind for s in found}
    assert kinds == {SingularityKind.ZERO_ENERGY_RESONANCE, SingularityKind.VIRTUAL_STATE}


def test_find_singularities_reports_unrepresentable_runaway(make_params):
    found, notes = find_singularities(make_params(2, 0.0, 0.0, 0.1))
    assert [s.kind for s in found] == [SingularityKind.ISOLATED_EIGENVALUE]
    assert any('runaway' in note for note in notes)


def test_find_singularities_positive_coupling_cell(make_params):
    found, notes = find_singularities(make_params(1, 0.0, 1.0, 1e-3))
    kinds = [s.kind for s in found]
    assert kinds.count(SingularityKind.ISOLATED_EIGENVALUE) == 1
    assert kinds.count(SingularityKind.VIRTUAL_STATE) == 2
    assert notes == []
