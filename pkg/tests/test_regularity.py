import math

import numpy as np
import pytest

from formevol import (
    GridError,
    NumericalError,
    Semibound,
    TimeDependentHamiltonian,
    alpha_profile,
    audit_grid,
    bridge_check,
    check_K2,
    check_S1,
    check_S2,
    circle_delta_model,
    differentiate_form,
    equivalence_constant,
    form_operator_norm,
    s2_profile,
    uniform_grid,
)

from helpers import random_hermitian

TWO_PI = 2.0 * math.pi


def constant_family(H, T=1.0):
    m = max(0.0, -float(np.linalg.eigvalsh(H)[0]))
    return TimeDependentHamiltonian(
        H.shape[0], lambda t: H, (0.0, T), Semibound(m),
        derivative_fn=lambda t: np.zeros_like(H),
        second_derivative_fn=lambda t: np.zeros_like(H),
    )


class TestCheckS1:
    def test_constant_family(self):
        rng = np.random.default_rng(0)
        tdh = constant_family(random_hermitian(rng, 4))
        assert check_S1(tdh, uniform_grid(0, 1, 9)) == pytest.approx(1.0, abs=1e-12)

    def test_scalar_linear_family(self):
        tdh = TimeDependentHamiltonian(
            2, lambda t: (1.0 + t) * np.eye(2, dtype=complex), (0.0, 1.0), 0.0
        )
        C = check_S1(tdh, uniform_grid(0, 1, 17))
        assert C == pytest.approx(math.sqrt(1.5), abs=1e-12)

    def test_matches_pairwise_equivalence_constant(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(6, prof, TWO_PI)
        t = 2.0
        C = check_S1(tdh, np.array([0.0, t]), t0=0.0)
        c = equivalence_constant(tdh.scale_at(0.0), tdh.scale_at(t)).c
        assert abs(C - c) < 1e-10

    def test_monotone_under_refinement(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(6, prof, TWO_PI)
        coarse = check_S1(tdh, uniform_grid(0, TWO_PI, 9))
        fine = check_S1(tdh, uniform_grid(0, TWO_PI, 17))
        finest = check_S1(tdh, uniform_grid(0, TWO_PI, 33))
        assert coarse <= fine + 1e-12 <= finest + 2e-12

    def test_shift_covariance(self):
        # Adding c I to H while lowering the claimed bound by c reproduces the
        # identical shifted operators, hence the identical constant.
        prof = alpha_profile("trigonometric", amplitude=2.0)
        base = circle_delta_model(4, prof, TWO_PI)
        m = base.semibound.m
        c = 0.25 * m
        shifted = TimeDependentHamiltonian(
            base.dim,
            lambda t: base(t) + c * np.eye(base.dim),
            base.t_span,
            Semibound(m - c),
        )
        grid = uniform_grid(0, TWO_PI, 17)
        assert abs(check_S1(base, grid) - check_S1(shifted, grid)) < 1e-10

    def test_constant_bounded_under_mode_refinement(self):
        # The boundary interaction is form-bounded relative to the kinetic
        # norm, so the comparability constant stays bounded as the mode
        # cutoff grows.
        prof = alpha_profile("trigonometric", amplitude=1.0)
        grid = uniform_grid(0, TWO_PI, 33)
        cs = []
        for K in (4, 8, 16, 32, 64):
            tdh = circle_delta_model(K, prof, TWO_PI)
            cs.append(check_S1(tdh, grid))
        cs = np.array(cs)
        assert cs.max() / cs.min() <= 2.0

    def test_rayleigh_sampling_never_exceeds_pencil_bound(self):
        rng = np.random.default_rng(44)
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(6, prof, TWO_PI)
        grid = uniform_grid(0, TWO_PI, 33)
        C = check_S1(tdh, grid)
        A0 = tdh.shifted(0.0)
        V = rng.standard_normal((2000, tdh.dim)) + 1j * rng.standard_normal((2000, tdh.dim))
        den = np.real(np.einsum("va,ab,vb->v", V.conj(), A0, V))
        for t in grid[::4]:
            num = np.real(np.einsum("va,ab,vb->v", V.conj(), tdh.shifted(t), V))
            ratios = num / den
            assert np.max(ratios) <= C**2 * (1 + 1e-12)
            assert np.min(ratios) >= (1 + 1e-12) / C**2 - 1e-12


class TestCheckS2:
    def test_constant_family(self):
        rng = np.random.default_rng(1)
        tdh = constant_family(random_hermitian(rng, 3))
        assert check_S2(tdh, uniform_grid(0, 1, 9)) == pytest.approx(0.0, abs=1e-14)

    def test_scalar_exponential(self):
        tdh = TimeDependentHamiltonian(
            1,
            lambda t: np.array([[math.exp(t)]], dtype=complex),
            (0.0, 1.0),
            0.0,
            derivative_fn=lambda t: np.array([[math.exp(t)]], dtype=complex),
        )
        bound = check_S2(tdh, uniform_grid(0, 1, 33))
        assert bound == pytest.approx(math.e / (math.e + 1.0), abs=1e-12)

    def test_dual_formulas_agree_on_circle_model(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(8, prof, TWO_PI)
        direct, dual = s2_profile(tdh, uniform_grid(0, TWO_PI, 65))
        assert np.max(np.abs(direct - dual)) < 1e-10

    def test_finite_difference_fallback_matches_analytic(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        analytic = circle_delta_model(6, prof, TWO_PI)
        blind = TimeDependentHamiltonian(
            analytic.dim, analytic, analytic.t_span, analytic.semibound
        )
        grid = uniform_grid(0, TWO_PI, 17)
        assert abs(check_S2(analytic, grid) - check_S2(blind, grid)) < 1e-8

    def test_fd_disabled_raises(self):
        prof = alpha_profile("table", times=[0.0, 1.0], values=[0.0, 1.0])
        tdh = circle_delta_model(2, prof, 1.0)
        with pytest.raises(Exception):
            check_S2(tdh, uniform_grid(0, 1, 9), allow_fd=False)

    def test_monotone_under_refinement(self):
        prof = alpha_profile("trigonometric", amplitude=1.0, frequency=3.0)
        tdh = circle_delta_model(4, prof, TWO_PI)
        coarse = check_S2(tdh, uniform_grid(0, TWO_PI, 9))
        fine = check_S2(tdh, uniform_grid(0, TWO_PI, 17))
        assert coarse <= fine + 1e-12


class TestDifferentiateForm:
    def test_linear_family_exact(self):
        rng = np.random.default_rng(2)
        M = random_hermitian(rng, 4)
        tdh = TimeDependentHamiltonian(
            4, lambda t: t * M, (-1.0, 1.0), 10.0
        )
        D = differentiate_form(tdh, 0.0, h_step=1e-3)
        assert np.max(np.abs(D - M)) < 1e-12

    def test_sine_family_accuracy(self):
        rng = np.random.default_rng(3)
        M = random_hermitian(rng, 3)
        tdh = TimeDependentHamiltonian(3, lambda t: math.sin(t) * M, (-1.0, 1.0), 5.0)
        D = differentiate_form(tdh, 0.0, h_step=1e-3)
        assert np.max(np.abs(D - M)) < 1e-6 * np.max(np.abs(M))

    def test_fd_vs_analytic_in_operator_norm(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(8, prof, TWO_PI)
        t = 2.0
        D_fd = differentiate_form(tdh, t)
        D_an = tdh.derivative(t)
        A0 = tdh.shifted(0.0)
        assert form_operator_norm(D_fd - D_an, A0) < 1e-8

    def test_step_underflow(self):
        tdh = constant_family(np.eye(2))
        with pytest.raises(GridError):
            differentiate_form(tdh, 0.5, h_step=1e-12)

    def test_stencil_must_stay_inside_span(self):
        tdh = constant_family(np.eye(2))
        with pytest.raises(GridError):
            differentiate_form(tdh, 0.0, h_step=1e-3)


class TestCheckK2:
    def test_constant_family_zero_moduli(self):
        rng = np.random.default_rng(4)
        tdh = constant_family(random_hermitian(rng, 3))
        for order in (0, 1, 2):
            moduli = check_K2(tdh, uniform_grid(0, 1, 17), order=order)
            assert all(w == 0.0 for _, w in moduli)

    def test_kink_plateau_matches_rank_one_jump(self):
        prof = alpha_profile("kink", center=math.pi, amplitude=1.0)
        tdh = circle_delta_model(6, prof, TWO_PI)
        grid = uniform_grid(0, TWO_PI, 129)
        moduli = check_K2(tdh, grid, order=1)
        plateau = moduli[-1][1]
        ones = np.ones((tdh.dim, tdh.dim))
        expected = 2.0 * form_operator_norm(ones, tdh.shifted(0.0)) / TWO_PI
        assert plateau == pytest.approx(expected, rel=1e-10)
        # moduli are taken over shrinking pair sets: non-increasing in delta
        omegas = [w for _, w in moduli]
        assert all(a >= b - 1e-15 for a, b in zip(omegas, omegas[1:]))

    def test_smooth_profile_lipschitz_fit_stable(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(6, prof, TWO_PI)
        fits = []
        for points in (65, 129, 257):
            moduli = check_K2(tdh, uniform_grid(0, TWO_PI, points), order=1)
            delta, omega = moduli[-1]
            fits.append(omega / delta)
        fits = np.array(fits)
        assert fits.max() / fits.min() < 1.1
        # rank-one oracle: slope of cos is at most 1, realized through the
        # sandwiched all-ones matrix
        ones = np.ones((tdh.dim, tdh.dim))
        L = form_operator_norm(ones, tdh.shifted(0.0)) / TWO_PI
        assert fits[-1] == pytest.approx(L, rel=0.05)

    def test_needs_enough_points(self):
        tdh = constant_family(np.eye(2))
        with pytest.raises(GridError):
            check_K2(tdh, uniform_grid(0, 1, 5))


class TestBridge:
    def test_constant_family_passes_everything(self):
        rng = np.random.default_rng(5)
        tdh = constant_family(random_hermitian(rng, 3))
        report = bridge_check(tdh, uniform_grid(0, 1, 17))
        assert report.s1_constant == pytest.approx(1.0, abs=1e-12)
        assert report.s2_bound == pytest.approx(0.0, abs=1e-14)
        assert all(v["pass"] for v in report.verdicts.values())

    def test_smooth_circle_model_passes(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(8, prof, TWO_PI)
        report = bridge_check(tdh, uniform_grid(0, TWO_PI, 65))
        assert report.verdicts["K2"]["pass"]
        assert np.isfinite(report.s1_constant)
        assert np.isfinite(report.s2_bound)
        assert report.verdicts["bridge"]["pass"]
        assert report.s1_operator_constant == pytest.approx(report.s1_constant**2)

    def test_rough_profile_exhibits_asymmetry(self):
        prof = alpha_profile("rough_c0", amplitude=1.0, scale=1.0)
        tdh = circle_delta_model(6, prof, TWO_PI)
        report = bridge_check(tdh, uniform_grid(0, TWO_PI, 129))
        assert report.verdicts["S2"]["pass"]
        assert not report.verdicts["K2"]["pass"]
        assert report.verdicts["K2"]["plateau"] > 10 * report.verdicts["K2"]["zero_floor"]
        assert report.verdicts["bridge"]["pass"]  # implication untouched

    def test_per_time_diagnostics_shapes(self):
        prof = alpha_profile("trigonometric", amplitude=1.0)
        tdh = circle_delta_model(4, prof, TWO_PI)
        grid = uniform_grid(0, TWO_PI, 33)
        report = bridge_check(tdh, grid)
        for key in ("lambda_min", "pencil_min", "pencil_max", "s2_local", "k2_local"):
            assert report.per_t[key].shape == grid.shape


class TestGrids:
    def test_audit_grid_refines_near_flags(self):
        prof = alpha_profile("kink", center=math.pi, amplitude=1.0)
        tdh = circle_delta_model(2, prof, TWO_PI)
        base = audit_grid(tdh, points=33)
        refined = audit_grid(tdh, points=33, refine_near=(math.pi,))
        assert refined.size > base.size
        gaps = np.diff(refined)
        near = np.abs(refined[:-1] - math.pi) < 0.2
        assert gaps[near].min() < np.diff(base).min() / 8

    def test_rejects_disordered_grid(self):
        tdh = constant_family(np.eye(2))
        with pytest.raises(GridError):
            check_S1(tdh, np.array([0.0, 0.5, 0.4]))

    def test_rejects_grid_outside_span(self):
        tdh = constant_family(np.eye(2))
        with pytest.raises(GridError):
            check_S1(tdh, np.array([0.0, 2.0]))
