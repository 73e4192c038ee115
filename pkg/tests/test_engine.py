import math

import numpy as np
import pytest
from scipy.special import j0, jn_zeros

from conftest import dense_operator
from spindrive.engine import (
    ConditionError,
    CyclicityError,
    commutator_series,
    cosine_ising_domain,
    cosine_response_closed,
    effective_hamiltonian,
    response_series,
    site_correction,
    solution_surface,
    solve_condition,
    square_ising_domain,
    square_response_closed,
    xxz_recursion_residual,
    _analytic_moments,
)
from spindrive.models import SpinModel, dipolar_couplings
from spindrive.pauli import PauliString, SpinOperator, axis_field, commutator, nested_commutator
from spindrive.pulses import Convention, MomentTable, PulseProfile, PulseShape, compute_moments


def bessel0_power_series(z, terms=80):
    """Independent oracle: sum (-1)^p (z/2)^{2p} / (p!)^2 with term recursion."""
    total = 1.0
    term = 1.0
    for p in range(1, terms):
        term *= -((z / 2) ** 2) / (p * p)
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def cosine_profile(v, t_sub=1.0):
    return PulseProfile.transverse_pair(PulseShape.cosine(), v, t_sub)


class TestResponseScalars:
    def test_series_vanishes_at_zero_strength(self):
        table = _analytic_moments("cosine", 10)
        assert response_series(0.0, table).value == 0.0

    def test_cosine_closed_matches_series(self):
        table = _analytic_moments("cosine", 60)
        got = response_series(0.25, table).value
        assert abs(got - cosine_response_closed(0.25)) < 1e-12

    def test_square_closed_matches_series(self):
        table = _analytic_moments("square", 60)
        got = response_series(0.5, table).value
        assert abs(got - square_response_closed(0.5)) < 1e-12

    def test_cosine_closed_at_zero(self):
        assert cosine_response_closed(0.0) == 0.0

    def test_cosine_closed_bessel_oracle(self):
        # (J0(1) - 1)/32 with J0 from its power series
        want = (bessel0_power_series(1.0) - 1.0) / 32.0
        assert cosine_response_closed(0.25) == pytest.approx(want, abs=1e-14)

    def test_cosine_extremum_value(self):
        dom = cosine_ising_domain()
        floor = (dom.extremum_value - 1.0) / 32.0
        assert cosine_response_closed(dom.v_extremum) == pytest.approx(floor, abs=1e-14)
        # shallow reference estimate for the curve's minimum
        assert dom.extremum_value == pytest.approx(-0.4, abs=0.005)

    def test_square_closed_sinc_limit(self):
        assert square_response_closed(0.0) == 0.0

    def test_square_closed_half(self):
        assert square_response_closed(0.5) == pytest.approx(-1.0 / 16.0)

    def test_square_extremum(self):
        dom = square_ising_domain()
        assert abs(dom.v_extremum) == pytest.approx(0.715, abs=1e-3)
        assert dom.extremum_value == pytest.approx(-0.217, abs=1e-3)
        assert dom.s_boundary == pytest.approx(-0.643, abs=1e-3)

    def test_tail_estimate_reported(self):
        table = _analytic_moments("cosine", 20)
        res = response_series(0.5, table, p_max=3)
        next_term = (4 * 0.5) ** 8 / math.factorial(8) * table.moment(4) / 16.0
        assert res.tail == pytest.approx(next_term)
        assert not res.tail_dominated

    def test_tail_dominated_flag(self):
        table = _analytic_moments("square", 3)
        res = response_series(3.0, table, p_max=2)
        assert res.tail_dominated

    def test_agreement_sweep_both_families(self, rng):
        cos_table = _analytic_moments("cosine", 60)
        sq_table = _analytic_moments("square", 60)
        for v in rng.uniform(-2, 2, size=40):
            assert abs(response_series(v, cos_table).value - cosine_response_closed(v)) < 1e-10
            assert abs(response_series(v, sq_table).value - square_response_closed(v)) < 1e-10


class TestCommutatorSeries:
    def test_commuting_generator_gives_zero(self):
        h = SpinModel.ising(dipolar_couplings(2), 1.0).hamiltonian()
        gen = axis_field(3, range(2))
        table = compute_moments(cosine_profile(0.5), 5, Convention.SUBCYCLE)
        assert commutator_series(h, gen, table, 0.5, 5).is_zero

    def test_first_order_matches_direct_double_commutator(self):
        # truncation at one term: -(v^2/2) mean(G^2) [C, [C, H]] summed per site
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, 0.4)
        h = model.hamiltonian()
        table = compute_moments(cosine_profile(0.3), 1, Convention.SUBCYCLE)
        v = 0.3
        for axis in (1, 2, 3):
            got = SpinOperator.zero()
            for site in range(2):
                got = got + site_correction(h, axis, site, table, v, 1)
            want = SpinOperator.zero()
            for site in range(2):
                sigma = SpinOperator.single(axis, site)
                want = want + (-0.5 * v * v * table.moment(1)) * nested_commutator(sigma, h, 2)
            assert (got - want).hs_norm() < 1e-14

    def test_truncated_series_dense_brute_force(self):
        # evaluate the same truncated sum with dense matrices and nested
        # matrix commutators, axis 1 summed over both sites
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, -0.5)
        h = model.hamiltonian()
        gen = axis_field(1, range(2))
        v, p_max = 0.45, 6
        table = compute_moments(cosine_profile(v), p_max, Convention.SUBCYCLE)
        got = dense_operator(commutator_series(h, gen, table, v, p_max), 2)

        hd = dense_operator(h, 2)
        gd = dense_operator(gen, 2)
        want = np.zeros_like(hd)
        nested = hd
        for p in range(1, p_max + 1):
            nested = gd @ nested - nested @ gd
            nested = gd @ nested - nested @ gd
            want += (-1) ** p * v ** (2 * p) / math.factorial(2 * p) * table.moment(p) * nested
        assert np.max(np.abs(got - want)) < 1e-10

    def test_linear_in_the_hamiltonian(self, rng):
        table = compute_moments(cosine_profile(0.7), 8, Convention.FULL_CYCLE)
        gen = axis_field(2, range(3))
        h1 = SpinModel.xxz(dipolar_couplings(3), 1.0, 0.2).hamiltonian()
        h2 = SpinModel.ising(dipolar_couplings(3), -0.8).hamiltonian()
        a, b = rng.normal(), rng.normal()
        lhs = commutator_series(a * h1 + b * h2, gen, table, 0.7, 8)
        rhs = a * commutator_series(h1, gen, table, 0.7, 8) + b * commutator_series(h2, gen, table, 0.7, 8)
        assert (lhs - rhs).hs_norm() < 1e-12 * max(1.0, rhs.hs_norm())


class TestRecursion:
    def test_first_order_is_exact_identity(self):
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, 0.5)
        assert xxz_recursion_residual(model, 1, 1) == 0.0

    def test_second_order_two_sites(self):
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, 0.5)
        assert xxz_recursion_residual(model, 1, 2) < 1e-10

    def test_third_order_three_site_dipolar(self):
        model = SpinModel.xxz(dipolar_couplings(3), 1.0, -2.0)
        assert xxz_recursion_residual(model, 2, 3) < 1e-9

    def test_harmonic_double_commutators(self):
        # [[C_1, H]]_2 = 4 dJ sum V (zz - yy), [[C_2, H]]_2 = 4 dJ sum V (zz - xx)
        for n in (2, 3, 4):
            g = dipolar_couplings(n)
            jp, jz = 1.3, -0.4
            model = SpinModel.xxz(g, jp, jz)
            dj = jz - jp
            h = model.hamiltonian()
            for axis, killed in ((1, 2), (2, 1)):
                got = nested_commutator(axis_field(axis, range(n)), h, 2)
                terms = []
                for a in range(n):
                    for b in range(a + 1, n):
                        if g.matrix[a, b]:
                            # pair sum double-counts, so 4 dJ V per ordered pair = 8 dJ V per unordered
                            terms.append((PauliString({a: 3, b: 3}), 8 * dj * g.matrix[a, b]))
                            terms.append((PauliString({a: killed, b: killed}), -8 * dj * g.matrix[a, b]))
                assert (got - SpinOperator(terms)).hs_norm() < 1e-12


class TestEffectiveHamiltonian:
    def test_zero_strength_returns_input(self):
        model = SpinModel.xxz(dipolar_couplings(3), 1.0, -3.0)
        em = effective_hamiltonian(model, cosine_profile(0.0))
        assert (em.operator - model.hamiltonian()).is_zero
        assert em.xy_factor == pytest.approx(1.0)
        assert em.zz_factor == pytest.approx(1.0)
        assert em.response == 0.0

    def test_closed_form_matches_deep_series(self):
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, -3.0)
        prof = cosine_profile(0.25)
        closed = effective_hamiltonian(model, prof)
        series = effective_hamiltonian(model, prof, p_max=60)
        assert closed.p_max_used == "closed_form"
        assert abs(closed.response - series.response) < 1e-12
        assert (closed.operator - series.operator).hs_norm() < 1e-10
        assert closed.response == pytest.approx((j0(1.0) - 1.0) / 32.0)

    def test_cross_check_residual_small(self):
        model = SpinModel.xxz(dipolar_couplings(3), 0.7, 1.9)
        em = effective_hamiltonian(model, cosine_profile(0.6), p_max=40)
        assert em.cross_check_residual is not None
        assert em.cross_check_residual < 1e-10

    def test_weak_single_site_first_order(self):
        # one driven site along z: the transverse coupling picks up (1 - v^2)
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, 0.5)
        v = 0.1
        prof = PulseProfile.sequential(PulseShape.cosine(), v, 0.05, axes=(3,), sites=(1,))
        em = effective_hamiltonian(model, prof, p_max=1)
        scaled = 1.0 - v * v
        want = SpinModel.xxz(dipolar_couplings(2), scaled, 0.5).hamiltonian()
        assert (em.operator - want).hs_norm() < 1e-14

    def test_ising_point_collapses_to_zz(self):
        # at the solved strength the transverse part cancels and the
        # longitudinal coupling lands at j_z + 2 j_perp per pair
        g = dipolar_couplings(3)
        jp, s = 1.0, -3.0
        model = SpinModel.xxz(g, jp, s * jp)
        v_star = solve_condition("cosine", s).preferred
        em = effective_hamiltonian(model, cosine_profile(v_star))
        want = SpinModel.ising(g, s * jp + 2 * jp).hamiltonian()
        assert (em.operator - want).hs_norm() < 1e-9
        assert abs(em.xy_factor) < 1e-10
        assert em.zz_factor == pytest.approx(1.0 + 2.0 / s)

    def test_longitudinal_factor_sign(self):
        # driving must push the transverse and longitudinal couplings in
        # opposite directions, preserving their sum rule 2 j_perp + j_z
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, -3.0)
        em = effective_hamiltonian(model, cosine_profile(0.4))
        jp_eff = em.xy_factor * model.j_perp
        jz_eff = em.zz_factor * model.j_z
        assert 2 * jp_eff + jz_eff == pytest.approx(2 * model.j_perp + model.j_z, abs=1e-12)

    def test_acyclic_drive_rejected(self):
        shape = PulseShape.tabulated(np.full(32, 1.0))
        prof = PulseProfile.transverse_pair(shape, 0.5, 1.0)
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, 0.5)
        with pytest.raises(CyclicityError):
            effective_hamiltonian(model, prof, p_max=4)

    def test_closed_form_requires_analytic_setup(self):
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, 0.5)
        prof = PulseProfile.sequential(PulseShape.cosine(), 0.5, 1.0, axes=(1,), sites=(0,))
        with pytest.raises(ValueError):
            effective_hamiltonian(model, prof)  # site-restricted: no closed path

    def test_convention_override_scales_response(self):
        model = SpinModel.xxz(dipolar_couplings(2), 1.0, -2.0)
        prof = cosine_profile(0.3)
        full = effective_hamiltonian(model, prof, convention=Convention.FULL_CYCLE)
        sub = effective_hamiltonian(model, prof, convention=Convention.SUBCYCLE)
        assert sub.response == pytest.approx(2.0 * full.response)


class TestSolveCondition:
    def test_boundary_anisotropy_has_solution(self):
        sol = solve_condition("cosine", -13.0 / 7.0)
        assert sol.domain_ok
        # the root sits at the response minimum
        dom = cosine_ising_domain()
        assert min(abs(abs(r) - dom.v_extremum) for r in sol.roots) < 0.05

    def test_positive_anisotropy_has_none(self):
        sol = solve_condition("cosine", 2.0)
        assert not sol.domain_ok
        assert sol.roots == ()
        assert "outside" in sol.diagnostic

    def test_square_minus_one_smallest_root_half(self):
        sol = solve_condition("square", -1.0)
        assert sol.domain_ok
        assert abs(sol.preferred) == pytest.approx(0.5, abs=1e-9)

    def test_extreme_anisotropy_drives_strength_to_zero(self):
        for family in ("cosine", "square"):
            sol = solve_condition(family, -1e6)
            assert sol.domain_ok
            assert abs(sol.preferred) < 2e-3

    def test_singular_ising_target(self):
        with pytest.raises(ConditionError):
            solve_condition("cosine", 1.0)

    def test_precise_boundary_bracketing(self):
        s_star = cosine_ising_domain().s_boundary
        assert solve_condition("cosine", s_star - 1e-6).domain_ok
        assert not solve_condition("cosine", s_star + 1e-6).domain_ok

    def test_boundary_near_reference_ratio(self):
        assert cosine_ising_domain().s_boundary == pytest.approx(-13.0 / 7.0, abs=0.02)

    def test_xy_target(self):
        # longitudinal cancellation: 1 + 16 (s-1) U / s = 0
        sol = solve_condition("cosine", -3.0, target="xy")
        assert sol.level == pytest.approx(-(-3.0) / (16.0 * (-4.0)))
        for r in sol.roots:
            u = cosine_response_closed(r)
            assert 1.0 + 16.0 * (-4.0) * u / (-3.0) == pytest.approx(0.0, abs=1e-9)

    def test_heisenberg_target_zero_strength(self):
        sol = solve_condition("cosine", -3.0, target="heisenberg")
        assert sol.domain_ok
        assert 0.0 in sol.roots

    def test_heisenberg_degenerate_anisotropy(self):
        sol = solve_condition("cosine", -2.0, target="heisenberg")
        assert sol.domain_ok
        assert "every strength" in sol.diagnostic

    def test_custom_consistent_pair(self):
        s = -3.0
        v_probe = 0.31
        u = float(cosine_response_closed(v_probe))
        a_c = 1.0 - 8.0 * (s - 1.0) * u
        b_c = 1.0 + 16.0 * (s - 1.0) * u / s
        sol = solve_condition("cosine", s, target="custom", target_factors=(a_c, b_c))
        assert sol.domain_ok
        assert min(abs(r - v_probe) for r in sol.roots) < 1e-9

    def test_custom_incompatible_pair(self):
        sol = solve_condition("cosine", -3.0, target="custom", target_factors=(0.0, 0.0))
        assert not sol.domain_ok
        assert "incompatible" in sol.diagnostic

    def test_truncated_family(self):
        # a first-order truncation solves -v^2/8 = level
        sol = solve_condition("cosine", -3.0, p_max=1)
        level = 1.0 / (8.0 * (-4.0))
        want = math.sqrt(-8.0 * level)
        assert abs(sol.preferred) == pytest.approx(want, abs=1e-9)

    def test_preferred_is_smallest_magnitude(self):
        sol = solve_condition("cosine", -3.0)
        assert abs(sol.preferred) == min(abs(r) for r in sol.roots)
        assert sol.preferred > 0  # ties resolve to the positive root

    def test_solution_solves_bessel_condition(self):
        sol = solve_condition("cosine", -3.0)
        rhs = (-3.0 + 3.0) / (-3.0 - 1.0)
        for r in sol.roots:
            assert j0(4.0 * r) == pytest.approx(rhs, abs=1e-10)
        # smallest strength maps to the first zero of the Bessel curve
        assert 4.0 * abs(sol.preferred) == pytest.approx(jn_zeros(0, 1)[0], abs=1e-9)


class TestSolutionSurface:
    def test_first_order_curve_shape(self):
        # full-cycle first-order response is -v^2/8, so s(v) = 1 - 1/v^2
        surf = solution_surface("cosine", [1], v_grid=np.arange(0.2, 3.0, 0.1))
        fr = surf.frame("1")
        want = 1.0 - 1.0 / fr.v**2
        assert np.allclose(fr.s[~fr.pole], want[~fr.pole], atol=1e-9)

    def test_closed_form_has_no_positive_anisotropy(self):
        surf = solution_surface("cosine", [None])
        fr = surf.frame("closed")
        finite = np.isfinite(fr.s) & ~fr.pole
        assert not np.any(fr.s[finite] > 0)

    def test_truncated_orders_spurious_positive_solutions(self):
        surf = solution_surface("cosine", [1, 8, 16])
        first_positive = []
        for label in ("1", "8", "16"):
            fr = surf.frame(label)
            mask = (fr.s > 0) & np.isfinite(fr.s) & ~fr.pole
            assert np.any(mask), f"order {label} shows no spurious window"
            first_positive.append(np.min(np.abs(fr.v[mask])))
        assert first_positive[0] <= first_positive[1] <= first_positive[2]

    def test_pole_at_zero_strength(self):
        surf = solution_surface("cosine", [None, 4])
        for fr in surf.frames:
            at_zero = np.isclose(fr.v, 0.0)
            assert fr.pole[at_zero].all()

    def test_small_strength_truncation_agrees_with_closed(self):
        grid = np.linspace(0.02, 0.09, 8)
        surf = solution_surface("cosine", [1, None], v_grid=grid)
        s1 = surf.frame("1").s
        sc = surf.frame("closed").s
        assert np.max(np.abs(s1 / sc - 1.0)) < 0.01
