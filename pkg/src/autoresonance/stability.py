"""Stability classification and Lyapunov verification of locked modes.

Perturbing a particular locked solution, rho = rho_star + R and
psi = psi_star + Psi, turns the averaged system into a near-Hamiltonian
system for (R, Psi) with an energy-like function H and a non-Hamiltonian
drift F that carries the dissipation.  Two complementary tools probe the
fate of the perturbation:

* the linearization around (0, 0), whose characteristic roots z(tau) grow
  like tau**(1/2), tau**(1/4), tau**(1/6) or tau**(1/8) depending on the
  root multiplicity and are either an imaginary pair (neutral to linear
  order) or a real saddle pair (instability);
* scaled Lyapunov functions V = tau**(-c) * (H_scaled - gamma0*r*phi),
  built per case from the exact H with the series solution substituted
  for (rho_star, psi_star).  Near the origin V is sandwiched between
  multiples of the quadratic form W(r, phi) = sqrt(lam)*r**2
  + omega_sq*phi**2/2 and decreases along trajectories at the rate
  2*gamma_kappa, gamma_kappa = gamma0*(1 - kappa)/(1 + kappa).

The scaled variables are r = tau**a * R, phi = tau**b * Psi with
(a, b) = (0, 0), (3/4, 1/2), (2/3, 1/3), (5/8, 1/4) for multiplicities
1 to 4; stability holds in the weighted sense with exactly those weights.
`verify_decrease` checks the decrease inequality numerically along a
simulated trajectory, which is the computable content of the stability
statements.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .asymptotics import SeriesCase, SeriesSolution, evaluate_series
from .errors import ContractError, DomainError
from .params import ModelParams
from .phase_equation import PhaseRoot
from .simulator import Trajectory

__all__ = [
    "DecreaseReport",
    "LyapunovFrame",
    "StabilityStatus",
    "StabilityVerdict",
    "classify_stability",
    "linearization_exponents",
    "lyapunov_frame",
    "lyapunov_value",
    "verify_decrease",
]

DEFAULT_BALL_RADIUS = 0.2
DEFAULT_TAU_MIN = 50.0
_SLACK_SCALE = 1e-6

_MULTIPLICITY_BY_CASE = {
    SeriesCase.SIMPLE: 1,
    SeriesCase.DOUBLE: 2,
    SeriesCase.TRIPLE: 3,
    SeriesCase.QUADRUPLE: 4,
}

# Scaling powers (a, b) of (R, Psi) -> (r, phi) and the prefactor power c
# of V = tau**(-c) * (H_scaled - gamma0*r*phi), per root multiplicity.
_SCALING_POWERS: dict[int, tuple[Fraction, Fraction, Fraction]] = {
    1: (Fraction(0), Fraction(0), Fraction(1, 2)),
    2: (Fraction(3, 4), Fraction(1, 2), Fraction(1, 4)),
    3: (Fraction(2, 3), Fraction(1, 3), Fraction(1, 6)),
    4: (Fraction(5, 8), Fraction(1, 4), Fraction(1, 8)),
}

# Index of the leading phase-correction coefficient inside psi_coeffs:
# the leading inverse power of psi_hat is 1/2, 1/3, 1/4 for multiplicities
# 2, 3, 4 while the coefficient lattice steps are 1/2, 1/6, 1/4.
_LEADING_PSI_INDEX = {2: 0, 3: 1, 4: 0}

_GROWTH_POWER = {
    1: Fraction(1, 2),
    2: Fraction(1, 4),
    3: Fraction(1, 6),
    4: Fraction(1, 8),
}


class StabilityStatus(Enum):
    """Outcome of the classification."""

    STABLE = "stable"
    STABLE_WEIGHTED = "stable_weighted"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    """Stability conclusion for one locked branch.

    Attributes:
        status: STABLE (classical, weights (0,0)), STABLE_WEIGHTED
            (stable in the weighted norm) or UNSTABLE.
        weights: weight powers (w1, w2) of the scaled perturbation norm
            tau**w1*|R|, tau**w2*|Psi|; (0, 0) exactly for STABLE.
        branch: text naming the sign condition that fired.
        exponent_model: asymptotic shape of the linearization exponents,
            an imaginary pair for the neutral cases and a real saddle
            pair for the unstable ones.
        growth_power: power p in |z(tau)| ~ tau**p.
    """

    status: StabilityStatus
    weights: tuple[Fraction, Fraction]
    branch: str
    exponent_model: str
    growth_power: Fraction

    def to_record(self) -> dict[str, object]:
        """JSON-friendly dump of the verdict."""
        return {
            "status": self.status.value,
            "weights": [str(w) for w in self.weights],
            "branch": self.branch,
            "exponent_model": self.exponent_model,
            "growth_power": str(self.growth_power),
        }


@dataclass(frozen=True)
class LyapunovFrame:
    """Scaled Lyapunov construction attached to one stable branch.

    Attributes:
        case: root multiplicity (1 to 4) the frame belongs to.
        series: truncated series of the underlying locked solution.
        params: model parameters the series was built from.
        scale_r: power a in r = tau**a * R.
        scale_psi: power b in phi = tau**b * Psi.
        prefactor: power c in V = tau**(-c) * (...).
        omega_sq: positive coefficient omega**2 of the comparison form.
        gamma0: leading dissipation coefficient, sets the decrease rate.
        ball_radius: validity radius in the scaled (r, phi) plane.
        tau_min: time after which the frame is trusted.
    """

    case: int
    series: SeriesSolution
    params: ModelParams
    scale_r: Fraction
    scale_psi: Fraction
    prefactor: Fraction
    omega_sq: float
    gamma0: float
    ball_radius: float = DEFAULT_BALL_RADIUS
    tau_min: float = DEFAULT_TAU_MIN

    @property
    def weights(self) -> tuple[Fraction, Fraction]:
        """Weights of the stability statement backed by this frame."""
        return (self.scale_r, self.scale_psi)

    def quadratic_form(self, r: float, phi: float) -> float:
        """Comparison form W(r, phi) = sqrt(lam)*r**2 + omega_sq*phi**2/2."""
        return math.sqrt(self.params.lam) * r * r + 0.5 * self.omega_sq * phi * phi

    def to_record(self) -> dict[str, object]:
        """JSON-friendly dump of the frame."""
        return {
            "case": self.case,
            "sigma": self.series.sigma,
            "branch_sign": self.series.sign,
            "weights": [str(w) for w in self.weights],
            "prefactor_power": str(self.prefactor),
            "omega_sq": self.omega_sq,
            "gamma0": self.gamma0,
            "ball_radius": self.ball_radius,
            "tau_min": self.tau_min,
        }


@dataclass(frozen=True)
class DecreaseReport:
    """Result of checking dv/dtau <= -2*gamma_kappa*v along a trajectory.

    Attributes:
        passed: True when every checked sample satisfies the inequality
            and the trajectory never left the validity ball.
        fraction: fraction of checked samples satisfying the inequality.
        n_checked: number of samples entering the fraction.
        partial: True when the trajectory left the validity ball, in
            which case the fraction covers only the samples before exit.
        exit_tau: time of the first sample outside the ball, or None.
        gamma_kappa: decrease rate gamma0*(1 - kappa)/(1 + kappa).
        kappa_margin: sandwich margin kappa the rate was derived from.
        tau_min: samples before this time are not checked.
        slack: absolute tolerance added to the right-hand side.
    """

    passed: bool
    fraction: float
    n_checked: int
    partial: bool
    exit_tau: float | None
    gamma_kappa: float
    kappa_margin: float
    tau_min: float
    slack: float

    def to_record(self) -> dict[str, object]:
        """JSON-friendly dump of the report."""
        return {
            "passed": self.passed,
            "fraction": self.fraction,
            "n_checked": self.n_checked,
            "partial": self.partial,
            "exit_tau": self.exit_tau,
            "gamma_kappa": self.gamma_kappa,
            "kappa_margin": self.kappa_margin,
            "tau_min": self.tau_min,
            "slack": self.slack,
        }


def _check_pairing(root: PhaseRoot, series: SeriesSolution) -> None:
    """Reject a series that was not built at the given root."""
    mult = _MULTIPLICITY_BY_CASE[series.case]
    if mult != root.multiplicity:
        raise ContractError(
            f"series case {series.case.value!r} does not match root "
            f"multiplicity {root.multiplicity}"
        )
    if abs(series.sigma - root.sigma) > 1e-9:
        raise ContractError(
            f"series sigma {series.sigma} does not match root sigma {root.sigma}"
        )


def _leading_phase_coeff(series: SeriesSolution) -> float:
    """Leading coefficient of the phase correction psi_hat."""
    index = _LEADING_PSI_INDEX[_MULTIPLICITY_BY_CASE[series.case]]
    if len(series.psi_coeffs) <= index:
        raise ContractError(
            "series is truncated below its leading phase coefficient; "
            "rebuild it with a higher order"
        )
    return series.psi_coeffs[index]


def classify_stability(
    root: PhaseRoot, series: SeriesSolution, params: ModelParams
) -> StabilityVerdict:
    """Classify the stability of the locked branch encoded by the series.

    Simple roots are decided by the sign of the restoring slope P'; for
    the degenerate multiplicities the sign pattern of the first clearly
    nonzero derivative together with the branch of the leading phase
    correction decides between weighted stability and a saddle.

    Args:
        root: phase-equation root the branch sits on.
        series: asymptotic branch built at that root (selects the sign
            for the two-branch multiplicities).
        params: model parameters of the averaged system.

    Raises:
        ContractError: if root and series do not belong together or the
            derivative fingerprint contradicts the multiplicity.
    """
    _check_pairing(root, series)
    mult = root.multiplicity
    growth = _GROWTH_POWER[mult]
    weights = (_SCALING_POWERS[mult][0], _SCALING_POWERS[mult][1])
    stable_model = f"imaginary pair, |z| ~ tau**({growth})"
    saddle_model = f"real saddle, |z| ~ tau**({growth})"

    if mult == 1:
        slope = root.derivs[1]
        if slope > 0.0:
            return StabilityVerdict(
                status=StabilityStatus.STABLE,
                weights=weights,
                branch="simple root with P' > 0",
                exponent_model=stable_model,
                growth_power=growth,
            )
        if slope < 0.0:
            return StabilityVerdict(
                status=StabilityStatus.UNSTABLE,
                weights=weights,
                branch="simple root with P' < 0",
                exponent_model=saddle_model,
                growth_power=growth,
            )
        raise ContractError("simple root with vanishing P' cannot be classified")

    if mult == 2:
        curvature = root.derivs[2]
        psi1 = _leading_phase_coeff(series)
        product = psi1 * curvature
        sign_tag = "+" if series.sign > 0 else "-"
        if product > 0.0:
            return StabilityVerdict(
                status=StabilityStatus.STABLE_WEIGHTED,
                weights=weights,
                branch=f"double root, branch psi1 = {sign_tag}phi with psi1*P'' > 0",
                exponent_model=stable_model,
                growth_power=growth,
            )
        if product < 0.0:
            return StabilityVerdict(
                status=StabilityStatus.UNSTABLE,
                weights=weights,
                branch=f"double root, branch psi1 = {sign_tag}phi with psi1*P'' < 0",
                exponent_model=saddle_model,
                growth_power=growth,
            )
        raise ContractError("double root with vanishing psi1*P'' cannot be classified")

    if mult == 3:
        third = root.derivs[3]
        if third > 0.0:
            return StabilityVerdict(
                status=StabilityStatus.STABLE_WEIGHTED,
                weights=weights,
                branch="triple root with P''' > 0",
                exponent_model=stable_model,
                growth_power=growth,
            )
        if third < 0.0:
            return StabilityVerdict(
                status=StabilityStatus.UNSTABLE,
                weights=weights,
                branch="triple root with P''' < 0",
                exponent_model=saddle_model,
                growth_power=growth,
            )
        raise ContractError("triple root with vanishing P''' cannot be classified")

    psi1 = _leading_phase_coeff(series)
    if psi1 > 0.0:
        return StabilityVerdict(
            status=StabilityStatus.STABLE_WEIGHTED,
            weights=weights,
            branch="quadruple root, branch psi1 = +xi",
            exponent_model=stable_model,
            growth_power=growth,
        )
    if psi1 < 0.0:
        return StabilityVerdict(
            status=StabilityStatus.UNSTABLE,
            weights=weights,
            branch="quadruple root, branch psi1 = -xi",
            exponent_model=saddle_model,
            growth_power=growth,
        )
    raise ContractError("quadruple root with vanishing psi1 cannot be classified")


def linearization_exponents(
    root: PhaseRoot, series: SeriesSolution, params: ModelParams, tau: float
) -> tuple[complex, complex]:
    """Characteristic roots of the linearized perturbation system at tau.

    Builds the 2x2 coefficient matrix of the system linearized around the
    locked solution, with the series supplying (rho_star, psi_star), and
    returns both eigenvalues ordered as (z_plus, z_minus) by the sign in
    front of the discriminant square root.

    Args:
        root: phase-equation root of the branch.
        series: asymptotic branch evaluated for the base solution.
        params: model parameters of the averaged system.
        tau: evaluation time, must be positive.

    Raises:
        ContractError: if root and series do not belong together.
        DomainError: if tau is not positive.
    """
    _check_pairing(root, series)
    if not (tau > 0.0):
        raise DomainError(f"tau must be positive, got {tau}")
    rho_s, psi_s = evaluate_series(series, tau)
    alpha = params.alpha(tau)
    beta = params.beta(tau)
    gamma = params.gamma(tau)
    nu = params.nu
    pump = 2.0 * psi_s + nu
    m11 = -gamma - beta * math.sin(pump)
    m12 = alpha * math.cos(psi_s) - 2.0 * beta * rho_s * math.cos(pump)
    m21 = 2.0 * rho_s - alpha * math.cos(psi_s) / rho_s**2
    m22 = -alpha * math.sin(psi_s) / rho_s + 2.0 * beta * math.sin(pump)
    trace = m11 + m22
    det = m11 * m22 - m12 * m21
    sqrt_disc = cmath.sqrt(complex(trace * trace - 4.0 * det))
    return (0.5 * (trace + sqrt_disc), 0.5 * (trace - sqrt_disc))


def _omega_sq_for(root: PhaseRoot, series: SeriesSolution) -> float:
    """Comparison-form coefficient omega**2 for a stable branch."""
    mult = root.multiplicity
    if mult == 1:
        return root.derivs[1]
    if mult == 2:
        return _leading_phase_coeff(series) * root.derivs[2]
    if mult == 3:
        chi = _leading_phase_coeff(series)
        return 0.5 * chi * chi * root.derivs[3]
    xi = _leading_phase_coeff(series)
    return 0.5 * xi**3


def lyapunov_frame(
    root: PhaseRoot,
    series: SeriesSolution,
    params: ModelParams,
    *,
    ball_radius: float = DEFAULT_BALL_RADIUS,
    tau_min: float = DEFAULT_TAU_MIN,
) -> LyapunovFrame:
    """Build the scaled Lyapunov frame for a stable locked branch.

    Args:
        root: phase-equation root of the branch.
        series: asymptotic branch (must classify as stable).
        params: model parameters; the leading dissipation coefficient
            must be positive, it sets the decrease rate.
        ball_radius: validity radius in the scaled (r, phi) plane.
        tau_min: time after which the frame is trusted.

    Raises:
        DomainError: for an unstable branch, non-positive leading
            dissipation, or invalid radius/threshold.
        ContractError: if root and series do not belong together.
    """
    if not (ball_radius > 0.0):
        raise DomainError(f"ball_radius must be positive, got {ball_radius}")
    if not (tau_min > 0.0):
        raise DomainError(f"tau_min must be positive, got {tau_min}")
    verdict = classify_stability(root, series, params)
    if verdict.status is StabilityStatus.UNSTABLE:
        raise DomainError(f"no Lyapunov frame on an unstable branch ({verdict.branch})")
    gamma0 = params.tail_coeff("gamma", 0)
    if gamma0 <= 0.0:
        raise DomainError(
            "the Lyapunov construction needs a positive leading dissipation "
            f"coefficient, got {gamma0}"
        )
    mult = root.multiplicity
    scale_r, scale_psi, prefactor = _SCALING_POWERS[mult]
    return LyapunovFrame(
        case=mult,
        series=series,
        params=params,
        scale_r=scale_r,
        scale_psi=scale_psi,
        prefactor=prefactor,
        omega_sq=_omega_sq_for(root, series),
        gamma0=gamma0,
        ball_radius=ball_radius,
        tau_min=tau_min,
    )


def _sin_minus_arg(shift: float) -> float:
    """sin(shift) - shift, accurate down to tiny arguments."""
    if abs(shift) < 1e-3:
        sq = shift * shift
        return -(sq * shift / 6.0) * (1.0 - sq / 20.0 * (1.0 - sq / 42.0))
    return math.sin(shift) - shift


def _lifted_cos_defect(base: float, shift: float) -> float:
    """cos(base+shift) - cos(base) + shift*sin(base) without cancellation."""
    return (
        -2.0 * math.cos(base) * math.sin(0.5 * shift) ** 2
        - math.sin(base) * _sin_minus_arg(shift)
    )


def _cos_step(base: float, shift: float) -> float:
    """cos(base+shift) - cos(base) without cancellation."""
    return -2.0 * math.sin(base + 0.5 * shift) * math.sin(0.5 * shift)


def _energy(
    params: ModelParams, rho_s: float, psi_s: float, R: float, Psi: float, tau: float
) -> float:
    """Exact energy-like function H of the shifted system."""
    alpha = params.alpha(tau)
    beta = params.beta(tau)
    gamma = params.gamma(tau)
    pump = 2.0 * psi_s + params.nu
    return (
        rho_s * R * R
        + alpha * _lifted_cos_defect(psi_s, Psi)
        - 0.5 * beta * rho_s * _lifted_cos_defect(pump, 2.0 * Psi)
        + gamma * R * Psi
        + R**3 / 3.0
        - 0.5 * beta * R * _cos_step(pump, 2.0 * Psi)
    )


def _value_at(frame: LyapunovFrame, R: float, Psi: float, tau: float) -> float:
    """V at one point, without the tau_min and ball preconditions."""
    a = float(frame.scale_r)
    b = float(frame.scale_psi)
    c = float(frame.prefactor)
    r = tau**a * R
    phi = tau**b * Psi
    rho_s, psi_s = evaluate_series(frame.series, tau)
    scaled = tau ** (a + b) * _energy(frame.params, rho_s, psi_s, R, Psi, tau)
    if a != 0.0:
        scaled -= (a / tau) * r * phi
    return tau ** (-c) * (scaled - frame.gamma0 * r * phi)


def lyapunov_value(frame: LyapunovFrame, R: float, Psi: float, tau: float) -> float:
    """Evaluate the scaled Lyapunov function at one perturbation point.

    The energy-like function H is evaluated from its exact closed form
    (not a truncated expansion), with the frame's series supplying the
    base solution.

    Args:
        frame: Lyapunov frame of the branch.
        R: amplitude perturbation (unscaled).
        Psi: phase perturbation (unscaled).
        tau: evaluation time, at least the frame's tau_min.

    Raises:
        DomainError: if tau is below tau_min or the scaled point lies
            outside the frame's validity ball.
    """
    if not (tau >= frame.tau_min):
        raise DomainError(f"tau={tau} is below the frame's tau_min={frame.tau_min}")
    r = tau ** float(frame.scale_r) * R
    phi = tau ** float(frame.scale_psi) * Psi
    if math.hypot(r, phi) > frame.ball_radius:
        raise DomainError(
            f"scaled point (r, phi) = ({r:.3g}, {phi:.3g}) lies outside the "
            f"validity ball of radius {frame.ball_radius}"
        )
    return _value_at(frame, R, Psi, tau)


def _perturbation_columns(
    frame: LyapunovFrame, trajectory: Trajectory
) -> tuple[np.ndarray, np.ndarray]:
    """Extract (R, Psi) samples from an averaged or shifted trajectory."""
    if trajectory.meta.get("coordinates") == "shifted":
        return trajectory.rho, trajectory.psi
    base = np.array(
        [evaluate_series(frame.series, t) for t in trajectory.tau_samples]
    )
    R = trajectory.rho - base[:, 0]
    Psi = trajectory.psi - base[:, 1]
    # The integrated phase may sit on a different 2*pi branch than the
    # series; remove the constant offset once.
    turns = round(float(Psi[0]) / (2.0 * math.pi))
    if turns != 0:
        Psi = Psi - 2.0 * math.pi * turns
    return R, Psi


def verify_decrease(
    frame: LyapunovFrame, trajectory: Trajectory, kappa_margin: float = 0.5
) -> DecreaseReport:
    """Check the decrease inequality dv/dtau <= -2*gamma_kappa*v numerically.

    Evaluates v(tau) = V(R(tau), Psi(tau), tau) along the trajectory,
    differentiates it with a five-point central stencil on the uniform
    sample grid, and reports the fraction of checked samples satisfying
    the inequality.  Samples before the frame's tau_min and the two
    stencil-edge samples on each side are not checked.  If the scaled
    perturbation leaves the validity ball, the report is flagged partial
    and covers only the samples before the exit.

    The inequality carries an absolute slack of 1e-6*gamma0*max|v|: once
    v has contracted that far below its peak, the samples sit on the
    integrator's noise floor and the stencil differentiates noise, while
    any genuine violation above that resolution is still detected.

    Args:
        frame: Lyapunov frame of the branch.
        trajectory: simulated perturbation history, either absolute
            averaged coordinates or an already-shifted difference.
        kappa_margin: sandwich margin kappa in (0, 1).

    Raises:
        DomainError: for an invalid margin, a non-uniform sample grid,
            or too few samples for the stencil.
    """
    if not (0.0 < kappa_margin < 1.0):
        raise DomainError(f"kappa_margin must lie in (0, 1), got {kappa_margin}")
    taus = trajectory.tau_samples
    if taus.size < 5:
        raise DomainError("the five-point stencil needs at least 5 samples")
    steps = np.diff(taus)
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-8, atol=1e-12):
        raise DomainError("verify_decrease needs a uniform tau grid")
    gamma_kappa = frame.gamma0 * (1.0 - kappa_margin) / (1.0 + kappa_margin)

    R, Psi = _perturbation_columns(frame, trajectory)
    a = float(frame.scale_r)
    b = float(frame.scale_psi)
    radius = np.hypot(taus**a * R, taus**b * Psi)
    outside = np.flatnonzero(radius > frame.ball_radius)
    if outside.size:
        end = int(outside[0])
        partial = True
        exit_tau = float(taus[end])
    else:
        end = taus.size
        partial = False
        exit_tau = None

    v = np.array(
        [_value_at(frame, R[j], Psi[j], taus[j]) for j in range(end)]
    )
    checked = 0
    satisfied = 0
    if end >= 5:
        dv = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
        center = slice(2, end - 2)
        eligible = taus[center] >= frame.tau_min
        slack = _SLACK_SCALE * frame.gamma0 * float(np.max(np.abs(v)))
        ok = dv <= -2.0 * gamma_kappa * v[center] + slack
        checked = int(np.count_nonzero(eligible))
        satisfied = int(np.count_nonzero(ok & eligible))
    else:
        slack = 0.0
    fraction = satisfied / checked if checked else 0.0
    return DecreaseReport(
        passed=(not partial) and checked > 0 and satisfied == checked,
        fraction=fraction,
        n_checked=checked,
        partial=partial,
        exit_tau=exit_tau,
        gamma_kappa=gamma_kappa,
        kappa_margin=kappa_margin,
        tau_min=frame.tau_min,
        slack=slack,
    )
