"""Tests for stability classification and Lyapunov verification."""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from autoresonance.asymptotics import build_series, evaluate_series
from autoresonance.errors import ContractError, DomainError
from autoresonance.params import ModelParams
from autoresonance.phase_equation import find_roots
from autoresonance.simulator import Trajectory, integrate, perturbation_trajectory
from autoresonance.stability import (
    StabilityStatus,
    classify_stability,
    linearization_exponents,
    lyapunov_frame,
    lyapunov_value,
    verify_decrease,
)

SLOPE_AT_PI = 1.0 + 2.0 * math.sqrt(3.0)


def simple_problem():
    """Growth problem with a stable simple root at sigma = pi."""
    params = ModelParams(
        lam=1.0, nu=5.0 * math.pi / 6.0, beta_tail=(-2.0,), gamma_tail=(1.0,)
    )
    roots = find_roots(params.phase_params())
    root = min(roots, key=lambda r: abs(r.sigma - math.pi))
    return params, root


def unstable_simple_problem():
    """Same parameters, the saddle root between the two stable ones."""
    params, _ = simple_problem()
    roots = find_roots(params.phase_params())
    root = min(roots, key=lambda r: abs(r.sigma - 1.84))
    return params, root


def double_problem():
    """Parameter point sitting exactly on a fold curve (double root)."""
    params = ModelParams(
        lam=1.0, nu=math.asin(0.8), beta_tail=(-0.5,), gamma_tail=(0.4,)
    )
    root = next(r for r in find_roots(params.phase_params()) if r.multiplicity == 2)
    return params, root


def triple_problem(stable: bool = True):
    """Parameter point at a cusp (triple root), both orientations."""
    nu = math.asin(19.0 * math.sqrt(6.0) / 54.0)
    if not stable:
        nu = math.pi - nu
    params = ModelParams(
        lam=1.0, nu=nu, beta_tail=(-1.0 / math.sqrt(6.0),), gamma_tail=(0.5,)
    )
    root = next(r for r in find_roots(params.phase_params()) if r.multiplicity == 3)
    return params, root


def quadruple_problem():
    """The unique quadruple-degeneracy point, with a first-order drive tail."""
    params = ModelParams(
        lam=1.0,
        nu=math.pi / 2.0,
        alpha_tail=(1.0, 1.0),
        beta_tail=(-0.25,),
        gamma_tail=(0.75,),
    )
    root = next(r for r in find_roots(params.phase_params()) if r.multiplicity == 4)
    return params, root


def stable_frame(case: int):
    """Lyapunov frame of the stable branch for the given multiplicity."""
    if case == 1:
        params, root = simple_problem()
        series = build_series(params, root, order=3)
    elif case == 2:
        params, root = double_problem()
        series = build_series(params, root, order=3, sign=-1)
    elif case == 3:
        params, root = triple_problem()
        series = build_series(params, root, order=7)
    else:
        params, root = quadruple_problem()
        series = build_series(params, root, order=6, sign=1)
    return lyapunov_frame(root, series, params)


def two_run_shifted(params, series, tau_span, n_samples=2001, size=1e-3):
    """Difference trajectory between a perturbed and a reference run."""
    rho0, psi0 = evaluate_series(series, tau_span[0])
    reference = integrate(
        params, (rho0, psi0), tau_span, rtol=1e-9, atol=1e-12, n_samples=n_samples
    )
    perturbed = integrate(
        params,
        (rho0 + 0.6 * size, psi0 + 0.8 * size),
        tau_span,
        rtol=1e-9,
        atol=1e-12,
        n_samples=n_samples,
    )
    return perturbation_trajectory(perturbed, reference)


@pytest.fixture(scope="module")
def case1_setup():
    params, root = simple_problem()
    series = build_series(params, root, order=3)
    frame = lyapunov_frame(root, series, params)
    shifted = two_run_shifted(params, series, (20.0, 500.0))
    return frame, shifted


@pytest.fixture(scope="module")
def case2_setup():
    params, root = double_problem()
    series = build_series(params, root, order=3, sign=-1)
    frame = lyapunov_frame(root, series, params)
    shifted = two_run_shifted(params, series, (20.0, 500.0))
    return frame, shifted


class TestClassifyStability:
    def test_pure_external_drive_examples(self):
        params = ModelParams(lam=1.0, nu=0.0, beta_tail=(0.0,), gamma_tail=(0.5,))
        roots = find_roots(params.phase_params())
        by_sigma = {round(r.sigma, 6): r for r in roots}
        stable_root = by_sigma[round(5.0 * math.pi / 6.0, 6)]
        unstable_root = by_sigma[round(math.pi / 6.0, 6)]
        stable = classify_stability(
            stable_root, build_series(params, stable_root, order=2), params
        )
        unstable = classify_stability(
            unstable_root, build_series(params, unstable_root, order=2), params
        )
        assert stable.status is StabilityStatus.STABLE
        assert stable.weights == (Fraction(0), Fraction(0))
        assert unstable.status is StabilityStatus.UNSTABLE

    def test_simple_stable_branch_fields(self):
        params, root = simple_problem()
        verdict = classify_stability(root, build_series(params, root, order=2), params)
        assert verdict.status is StabilityStatus.STABLE
        assert verdict.growth_power == Fraction(1, 2)
        assert "imaginary" in verdict.exponent_model
        assert root.derivs[1] == pytest.approx(SLOPE_AT_PI, rel=1e-12)

    def test_simple_unstable_is_saddle(self):
        params, root = unstable_simple_problem()
        verdict = classify_stability(root, build_series(params, root, order=2), params)
        assert verdict.status is StabilityStatus.UNSTABLE
        assert "real saddle" in verdict.exponent_model

    def test_double_branches_split(self):
        params, root = double_problem()
        assert root.derivs[2] == pytest.approx(-0.8, abs=1e-9)
        minus = classify_stability(
            root, build_series(params, root, order=3, sign=-1), params
        )
        plus = classify_stability(
            root, build_series(params, root, order=3, sign=1), params
        )
        assert minus.status is StabilityStatus.STABLE_WEIGHTED
        assert minus.weights == (Fraction(3, 4), Fraction(1, 2))
        assert plus.status is StabilityStatus.UNSTABLE
        assert plus.growth_power == Fraction(1, 4)

    @pytest.mark.parametrize("stable", [True, False])
    def test_triple_orientation(self, stable):
        params, root = triple_problem(stable=stable)
        expected_third = math.sqrt(5.0) if stable else -math.sqrt(5.0)
        assert root.derivs[3] == pytest.approx(expected_third, rel=1e-6)
        verdict = classify_stability(root, build_series(params, root, order=7), params)
        if stable:
            assert verdict.status is StabilityStatus.STABLE_WEIGHTED
            assert verdict.weights == (Fraction(2, 3), Fraction(1, 3))
        else:
            assert verdict.status is StabilityStatus.UNSTABLE

    def test_quadruple_branches_split(self):
        params, root = quadruple_problem()
        plus = build_series(params, root, order=6, sign=1)
        minus = build_series(params, root, order=6, sign=-1)
        assert plus.psi_coeffs[0] == pytest.approx(math.sqrt(2.0), rel=1e-12)
        up = classify_stability(root, plus, params)
        down = classify_stability(root, minus, params)
        assert up.status is StabilityStatus.STABLE_WEIGHTED
        assert up.weights == (Fraction(5, 8), Fraction(1, 4))
        assert down.status is StabilityStatus.UNSTABLE

    def test_classical_status_means_unit_weights(self):
        params, root = simple_problem()
        verdict = classify_stability(root, build_series(params, root, order=2), params)
        assert (verdict.status is StabilityStatus.STABLE) == (
            verdict.weights == (Fraction(0), Fraction(0))
        )

    def test_mismatched_sigma_rejected(self):
        params, root = simple_problem()
        other = min(find_roots(params.phase_params()), key=lambda r: r.sigma)
        foreign = build_series(params, other, order=2)
        with pytest.raises(ContractError):
            classify_stability(root, foreign, params)

    def test_mismatched_multiplicity_rejected(self):
        params4, root4 = quadruple_problem()
        series4 = build_series(params4, root4, order=6, sign=1)
        params1, root1 = simple_problem()
        with pytest.raises(ContractError):
            classify_stability(root1, series4, params1)

    def test_record_is_json_ready(self):
        params, root = double_problem()
        verdict = classify_stability(
            root, build_series(params, root, order=3, sign=-1), params
        )
        record = json.loads(json.dumps(verdict.to_record()))
        assert record["status"] == "stable_weighted"
        assert record["weights"] == ["3/4", "1/2"]


class TestLinearizationExponents:
    def test_case1_imaginary_pair_modulus(self):
        params, root = simple_problem()
        series = build_series(params, root, order=3)
        tau = 1e6
        z_plus, z_minus = linearization_exponents(root, series, params, tau)
        predicted = tau**0.5 * (4.0 * params.lam) ** 0.25 * math.sqrt(SLOPE_AT_PI)
        assert abs(z_plus.imag) / predicted == pytest.approx(1.0, abs=0.05)
        assert z_minus == pytest.approx(z_plus.conjugate(), rel=1e-12)

    def test_trace_approaches_damping_limit(self):
        params, root = simple_problem()
        series = build_series(params, root, order=3)
        z_plus, z_minus = linearization_exponents(root, series, params, 1e8)
        kappa = params.phase_params().kappa
        trace = (z_plus + z_minus).real
        assert trace == pytest.approx(-2.0 * kappa / math.sqrt(params.lam), abs=1e-5)

    def test_unstable_simple_gives_real_saddle(self):
        params, root = unstable_simple_problem()
        series = build_series(params, root, order=3)
        z_plus, z_minus = linearization_exponents(root, series, params, 1e4)
        assert abs(z_plus.imag) < 1e-12 and abs(z_minus.imag) < 1e-12
        assert z_plus.real > 0.0 > z_minus.real

    @pytest.mark.parametrize(
        "case, expected_power",
        [(1, 0.5), (2, 0.25), (3, 1.0 / 6.0), (4, 0.125)],
    )
    def test_growth_power_fit(self, case, expected_power):
        frame = stable_frame(case)
        params, series = frame.params, frame.series
        root = min(
            find_roots(params.phase_params()), key=lambda r: abs(r.sigma - series.sigma)
        )
        taus = np.geomspace(1e3, 1e6, 13)
        moduli = [
            abs(linearization_exponents(root, series, params, t)[0]) for t in taus
        ]
        slope = np.polyfit(np.log(taus), np.log(moduli), 1)[0]
        assert slope == pytest.approx(expected_power, abs=0.02)

    def test_case3_modulus_coefficient(self):
        params, root = triple_problem()
        series = build_series(params, root, order=7)
        chi = series.psi_coeffs[1]
        tau = 1e8
        z_plus, _ = linearization_exponents(root, series, params, tau)
        predicted = tau ** (1.0 / 6.0) * params.lam**0.25 * math.sqrt(
            chi * chi * root.derivs[3]
        )
        assert abs(z_plus.imag) / predicted == pytest.approx(1.0, abs=0.03)

    def test_case4_modulus_coefficient(self):
        params, root = quadruple_problem()
        series = build_series(params, root, order=6, sign=1)
        xi = series.psi_coeffs[0]
        tau = 1e8
        z_plus, _ = linearization_exponents(root, series, params, tau)
        predicted = tau**0.125 * params.lam**0.25 * xi**1.5
        assert abs(z_plus.imag) / predicted == pytest.approx(1.0, abs=0.03)

    def test_nonpositive_tau_rejected(self):
        params, root = simple_problem()
        series = build_series(params, root, order=2)
        with pytest.raises(DomainError):
            linearization_exponents(root, series, params, 0.0)


class TestLyapunovFrame:
    @pytest.mark.parametrize(
        "case, weights, omega_sq",
        [
            (1, (Fraction(0), Fraction(0)), SLOPE_AT_PI),
            (2, (Fraction(3, 4), Fraction(1, 2)), None),
            (3, (Fraction(2, 3), Fraction(1, 3)), None),
            (4, (Fraction(5, 8), Fraction(1, 4)), math.sqrt(2.0)),
        ],
    )
    def test_factory_fields(self, case, weights, omega_sq):
        frame = stable_frame(case)
        assert frame.case == case
        assert frame.weights == weights
        assert frame.omega_sq > 0.0
        if omega_sq is not None:
            assert frame.omega_sq == pytest.approx(omega_sq, rel=1e-12)
        assert frame.gamma0 == frame.params.gamma_tail[0]

    def test_double_frame_uses_branch_times_curvature(self):
        params, root = double_problem()
        series = build_series(params, root, order=3, sign=-1)
        frame = lyapunov_frame(root, series, params)
        assert frame.omega_sq == pytest.approx(
            series.psi_coeffs[0] * root.derivs[2], rel=1e-12
        )

    def test_refuses_unstable_branches(self):
        params, root = unstable_simple_problem()
        series = build_series(params, root, order=2)
        with pytest.raises(DomainError, match="unstable"):
            lyapunov_frame(root, series, params)
        params4, root4 = quadruple_problem()
        series4 = build_series(params4, root4, order=6, sign=-1)
        with pytest.raises(DomainError, match="unstable"):
            lyapunov_frame(root4, series4, params4)

    def test_refuses_zero_damping(self):
        params = ModelParams(
            lam=1.0, nu=5.0 * math.pi / 6.0, beta_tail=(-2.0,), gamma_tail=(0.0,)
        )
        root = next(
            r
            for r in find_roots(params.phase_params())
            if r.multiplicity == 1 and r.derivs[1] > 0.0
        )
        series = build_series(params, root, order=2)
        with pytest.raises(DomainError, match="dissipation"):
            lyapunov_frame(root, series, params)

    @pytest.mark.parametrize("kwargs", [{"ball_radius": 0.0}, {"tau_min": -1.0}])
    def test_invalid_geometry_rejected(self, kwargs):
        params, root = simple_problem()
        series = build_series(params, root, order=2)
        with pytest.raises(DomainError):
            lyapunov_frame(root, series, params, **kwargs)

    def test_record_is_json_ready(self):
        frame = stable_frame(4)
        record = json.loads(json.dumps(frame.to_record()))
        assert record["case"] == 4
        assert record["weights"] == ["5/8", "1/4"]


class TestLyapunovValue:
    @pytest.mark.parametrize("case", [1, 2, 3, 4])
    def test_zero_at_origin(self, case):
        frame = stable_frame(case)
        assert lyapunov_value(frame, 0.0, 0.0, 1e3) == 0.0

    @pytest.mark.parametrize(
        "case, tau, rel",
        [(1, 1e8, 2e-4), (2, 1e8, 1e-3), (3, 1e12, 1e-3), (4, 1e12, 5e-3)],
    )
    def test_quadratic_limit_matches_comparison_form(self, case, tau, rel):
        frame = stable_frame(case)
        a, b = float(frame.scale_r), float(frame.scale_psi)
        # The pure directions pin the two coefficients of the comparison
        # form; the mixed direction also sees a residual cross term that
        # only dies like the prefactor power of tau, so it gets a looser
        # tolerance.
        for angle, tol in ((0.0, rel), (math.pi / 2.0, rel), (0.93, 0.02)):
            r_hat, phi_hat = math.cos(angle), math.sin(angle)

            def scaled_value(s: float) -> float:
                value = lyapunov_value(
                    frame, s * r_hat / tau**a, s * phi_hat / tau**b, tau
                )
                return value / (s * s)

            limit = 2.0 * scaled_value(0.01) - scaled_value(0.02)
            assert limit == pytest.approx(
                frame.quadratic_form(r_hat, phi_hat), rel=tol
            )

    @pytest.mark.parametrize("case", [1, 2, 3, 4])
    def test_sandwich_on_sampled_ball(self, case):
        frame = stable_frame(case)
        a, b = float(frame.scale_r), float(frame.scale_psi)
        tau = 1e3
        margin = 0.5
        rng = np.random.default_rng(11 + case)
        for _ in range(500):
            angle = rng.uniform(0.0, 2.0 * math.pi)
            radius = frame.ball_radius * math.sqrt(rng.uniform(0.0025, 1.0))
            r, phi = radius * math.cos(angle), radius * math.sin(angle)
            value = lyapunov_value(frame, r / tau**a, phi / tau**b, tau)
            form = frame.quadratic_form(r, phi)
            assert (1.0 - margin) * form <= value <= (1.0 + margin) * form

    def test_positive_on_punctured_ball(self):
        frame = stable_frame(1)
        rng = np.random.default_rng(3)
        tau = 1e3
        for _ in range(10_000):
            angle = rng.uniform(0.0, 2.0 * math.pi)
            radius = frame.ball_radius * math.sqrt(rng.uniform(1e-6, 1.0))
            value = lyapunov_value(
                frame, radius * math.cos(angle), radius * math.sin(angle), tau
            )
            assert value > 0.0

    def test_below_tau_min_rejected(self):
        frame = stable_frame(1)
        with pytest.raises(DomainError, match="tau_min"):
            lyapunov_value(frame, 0.01, 0.0, 10.0)

    def test_outside_ball_rejected(self):
        frame = stable_frame(2)
        tau = 1e3
        psi = 2.0 * frame.ball_radius / tau ** float(frame.scale_psi)
        with pytest.raises(DomainError, match="ball"):
            lyapunov_value(frame, 0.0, psi, tau)


class TestVerifyDecrease:
    @pytest.mark.parametrize("margin", [0.25, 0.5, 0.9])
    def test_case1_decrease_holds(self, case1_setup, margin):
        frame, shifted = case1_setup
        report = verify_decrease(frame, shifted, kappa_margin=margin)
        assert not report.partial
        assert report.n_checked > 1000
        assert report.fraction == 1.0
        assert report.passed

    def test_case2_decrease_holds(self, case2_setup):
        frame, shifted = case2_setup
        report = verify_decrease(frame, shifted, kappa_margin=0.5)
        assert not report.partial
        assert report.fraction == 1.0
        assert report.passed

    def test_case1_exponential_phase_envelope(self, case1_setup):
        # The windows sit inside the segment where the phase difference
        # is still above the two-run noise floor; past that the samples
        # are solver noise and carry no decay information.
        frame, shifted = case1_setup
        taus = shifted.tau_samples
        gamma_star = frame.gamma0 * (1.0 - 0.9) / (1.0 + 0.9)
        head_window = (taus >= 22.0) & (taus <= 24.0)
        tail_window = (taus >= 29.0) & (taus <= 31.0)
        head = float(np.max(np.abs(shifted.psi[head_window])))
        tail = float(np.max(np.abs(shifted.psi[tail_window])))
        assert math.log(tail) <= math.log(head) - gamma_star * (29.0 - 24.0) + 1.0

    def test_zero_perturbation_trivially_satisfies(self):
        frame = stable_frame(1)
        taus = np.linspace(60.0, 120.0, 121)
        zeros = np.zeros_like(taus)
        trajectory = Trajectory(
            tau_samples=taus,
            rho=zeros,
            psi=zeros,
            meta={"coordinates": "shifted"},
        )
        report = verify_decrease(frame, trajectory)
        assert report.passed
        assert report.fraction == 1.0
        assert not report.partial

    def test_averaged_and_shifted_columns_agree(self):
        frame = stable_frame(1)
        taus = np.linspace(20.0, 120.0, 501)
        decay = 1e-3 * np.exp(-(taus - taus[0]))
        base = np.array([evaluate_series(frame.series, t) for t in taus])
        averaged = Trajectory(
            tau_samples=taus,
            rho=base[:, 0] + decay,
            psi=base[:, 1] - 0.7 * decay + 2.0 * math.pi,
            meta={"coordinates": "averaged"},
        )
        shifted = Trajectory(
            tau_samples=taus,
            rho=decay,
            psi=-0.7 * decay,
            meta={"coordinates": "shifted"},
        )
        report_avg = verify_decrease(frame, averaged)
        report_shf = verify_decrease(frame, shifted)
        assert report_avg.n_checked == report_shf.n_checked
        assert report_avg.n_checked == int(np.sum(taus[2:-2] >= frame.tau_min))
        assert report_avg.fraction == report_shf.fraction == 1.0

    def test_runaway_trajectory_flagged_partial(self):
        params, root = unstable_simple_problem()
        series = build_series(params, root, order=2)
        rho0, psi0 = evaluate_series(series, 20.0)
        runaway = integrate(
            params,
            (rho0 + 1e-3, psi0 + 1e-3),
            (20.0, 30.0),
            mode="cartesian",
            n_samples=201,
        )
        frame = stable_frame(1)
        report = verify_decrease(frame, runaway)
        assert report.partial
        assert report.exit_tau == pytest.approx(20.0)
        assert report.n_checked == 0
        assert not report.passed

    def test_nonuniform_grid_rejected(self):
        frame = stable_frame(1)
        taus = np.geomspace(60.0, 120.0, 50)
        zeros = np.zeros_like(taus)
        trajectory = Trajectory(
            tau_samples=taus, rho=zeros, psi=zeros, meta={"coordinates": "shifted"}
        )
        with pytest.raises(DomainError, match="uniform"):
            verify_decrease(frame, trajectory)

    @pytest.mark.parametrize("margin", [0.0, 1.0, -0.5])
    def test_invalid_margin_rejected(self, margin):
        frame = stable_frame(1)
        taus = np.linspace(60.0, 120.0, 10)
        zeros = np.zeros_like(taus)
        trajectory = Trajectory(
            tau_samples=taus, rho=zeros, psi=zeros, meta={"coordinates": "shifted"}
        )
        with pytest.raises(DomainError, match="kappa_margin"):
            verify_decrease(frame, trajectory, kappa_margin=margin)

    def test_too_few_samples_rejected(self):
        frame = stable_frame(1)
        taus = np.linspace(60.0, 61.0, 4)
        zeros = np.zeros_like(taus)
        trajectory = Trajectory(
            tau_samples=taus, rho=zeros, psi=zeros, meta={"coordinates": "shifted"}
        )
        with pytest.raises(DomainError, match="samples"):
            verify_decrease(frame, trajectory)

    def test_report_record_is_json_ready(self, case1_setup):
        frame, shifted = case1_setup
        report = verify_decrease(frame, shifted)
        record = json.loads(json.dumps(report.to_record()))
        assert record["passed"] is True
        assert record["gamma_kappa"] == pytest.approx(frame.gamma0 / 3.0)
