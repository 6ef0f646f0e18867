"""Choosing excitation parameters that capture a prescribed limiting phase.

Inverse problem to root finding: instead of asking which limiting phases a
given excitation admits, fix the damping level kappa and a pumping strength
delta and pick the excitation phase offset nu so that a prescribed sigma
becomes a simple root of the phase equation with positive slope, hence a
stable autoresonant mode.

Three target phases (0, pi and pi/2) have closed admissibility conditions
on delta, checked up front so a refusal names the violated inequality.  Any
other target is handled by inverting the pump term: P(sigma) = 0 fixes
sin(2*sigma + nu) = (sin(sigma) - kappa) / delta, and among the arcsine
branches that land nu in [0, pi) the one with the largest slope P'(sigma)
is kept.  Every returned design carries a certificate (the residual
P(sigma) and the slope P'(sigma)) evaluated independently of the solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .errors import ConstraintViolationError, DomainError, NumericalError, SingularParameterError
from .params import TWO_PI, PhaseParams
from .phase_equation import eval_P

__all__ = ["CERTIFICATE_TOL", "DesignResult", "DesignSpec", "design_excitation"]

#: Residual threshold for the design certificate |P(sigma_target)|.
CERTIFICATE_TOL = 1e-12

#: Targets within this distance of 0, pi/2 or pi use the closed-form recipe.
_SPECIAL_TOL = 1e-12


@dataclass(frozen=True)
class DesignSpec:
    """Request for an excitation design.

    Attributes:
        sigma_target: prescribed limiting phase, in [0, 2*pi).
        kappa: scaled damping parameter, positive.
        delta_choice: caller-selected pumping strength. Admissibility of
            the choice depends on sigma_target and is checked by
            :func:`design_excitation`, not here.
    """

    sigma_target: float
    kappa: float
    delta_choice: float

    def __post_init__(self) -> None:
        for name in ("sigma_target", "kappa", "delta_choice"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not (0.0 <= self.sigma_target < TWO_PI):
            raise DomainError(
                f"sigma_target must lie in [0, 2*pi), got {self.sigma_target}"
            )
        if not self.kappa > 0.0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.delta_choice == 0.0:
            raise SingularParameterError(
                "delta_choice must be nonzero: without parametric pumping "
                "the excitation phase nu drops out of the phase equation"
            )


@dataclass(frozen=True)
class DesignResult:
    """A designed excitation with its a-posteriori certificate.

    Attributes:
        sigma: the prescribed limiting phase the design realizes.
        kappa: scaled damping parameter of the request.
        delta: pumping strength of the request.
        nu: designed excitation phase offset, in [0, pi).
        p_value: residual P(sigma) of the designed parameters.
        p_prime: slope P'(sigma) of the designed parameters, positive.
        branch: human-readable tag of the solve path taken.
    """

    sigma: float
    kappa: float
    delta: float
    nu: float
    p_value: float
    p_prime: float
    branch: str

    def phase_params(self) -> PhaseParams:
        """Package the designed excitation for the phase-equation API."""
        return PhaseParams(delta=self.delta, nu=self.nu, kappa=self.kappa)

    def to_record(self) -> dict[str, Any]:
        """JSON-friendly dump of the design and its certificate."""
        return {
            "sigma": self.sigma,
            "kappa": self.kappa,
            "delta": self.delta,
            "nu": self.nu,
            "certificate": {"P_value": self.p_value, "P_prime": self.p_prime},
            "branch": self.branch,
        }


def _nu_for_sigma_zero(kappa: float, delta: float) -> tuple[float, str]:
    bound = -math.sqrt(kappa * kappa + 0.25)
    if not delta < bound:
        raise ConstraintViolationError(
            "sigma_target = 0 requires delta < -sqrt(kappa**2 + 1/4) "
            f"= {bound:.6g}; got delta = {delta:.6g}"
        )
    return math.pi - math.asin(-kappa / delta), "closed form for sigma = 0"


def _nu_for_sigma_pi(kappa: float, delta: float) -> tuple[float, str]:
    if not delta < -kappa:
        raise ConstraintViolationError(
            f"sigma_target = pi requires delta < -kappa = {-kappa:.6g}; "
            f"got delta = {delta:.6g}"
        )
    return math.pi - math.asin(-kappa / delta), "closed form for sigma = pi"


def _nu_for_sigma_half_pi(kappa: float, delta: float) -> tuple[float, str]:
    ratio = (kappa - 1.0) / delta
    if not 0.0 < ratio <= 1.0:
        raise ConstraintViolationError(
            "sigma_target = pi/2 requires 0 < (kappa - 1)/delta <= 1; "
            f"got (kappa - 1)/delta = {ratio:.6g}"
        )
    nu = math.asin(ratio)
    if not delta * math.cos(nu) < 0.0:
        raise ConstraintViolationError(
            "sigma_target = pi/2 requires delta*cos(nu) < 0; "
            f"got delta*cos(nu) = {delta * math.cos(nu):.6g}"
        )
    return nu, "closed form for sigma = pi/2"


def _nu_generic(sigma: float, kappa: float, delta: float) -> tuple[float, str]:
    """Invert the pump term and keep the admissible branch of largest slope."""
    ratio = (math.sin(sigma) - kappa) / delta
    if abs(ratio) > 1.0:
        raise ConstraintViolationError(
            "generic target requires |sin(sigma_target) - kappa| <= |delta|; "
            f"got |sin(sigma) - kappa| = {abs(math.sin(sigma) - kappa):.6g} "
            f"with |delta| = {abs(delta):.6g}"
        )
    base = math.asin(ratio)
    candidates = []
    for pump_angle in (base, math.pi - base):
        nu = (pump_angle - 2.0 * sigma) % TWO_PI
        if 0.0 <= nu < math.pi and not any(abs(nu - c) < 1e-15 for c, _ in candidates):
            slope = eval_P(sigma, PhaseParams(delta=delta, nu=nu, kappa=kappa), order=1)
            candidates.append((nu, slope))
    if not candidates:
        raise ConstraintViolationError(
            "no arcsine branch places nu in [0, pi) for "
            f"sigma_target = {sigma:.6g} with delta = {delta:.6g}, "
            f"kappa = {kappa:.6g}"
        )
    nu, slope = max(candidates, key=lambda item: item[1])
    if not slope > 0.0:
        raise ConstraintViolationError(
            "P'(sigma_target) > 0 fails on every branch with nu in [0, pi); "
            f"best slope = {slope:.6g}"
        )
    return nu, "arcsine branch of largest slope"


def design_excitation(spec: DesignSpec) -> DesignResult:
    """Pick nu making sigma_target a stable simple root, for given (kappa, delta).

    The three target phases with closed-form recipes (0, pi, pi/2) check
    their admissibility inequalities first and report the violated one on
    refusal; any other target goes through the generic arcsine solve. The
    returned design always carries an independently evaluated certificate.

    Args:
        spec: validated design request.

    Raises:
        ConstraintViolationError: the requested (sigma_target, kappa,
            delta_choice) admits no design; the message names the failed
            inequality.
        NumericalError: the computed design fails its own certificate
            (residual above :data:`CERTIFICATE_TOL` or nonpositive slope).
    """
    sigma, kappa, delta = spec.sigma_target, spec.kappa, spec.delta_choice
    if min(sigma, abs(sigma - TWO_PI)) < _SPECIAL_TOL:
        nu, branch = _nu_for_sigma_zero(kappa, delta)
    elif abs(sigma - math.pi) < _SPECIAL_TOL:
        nu, branch = _nu_for_sigma_pi(kappa, delta)
    elif abs(sigma - 0.5 * math.pi) < _SPECIAL_TOL:
        nu, branch = _nu_for_sigma_half_pi(kappa, delta)
    else:
        nu, branch = _nu_generic(sigma, kappa, delta)

    params = PhaseParams(delta=delta, nu=nu, kappa=kappa)
    p_value = eval_P(sigma, params)
    p_prime = eval_P(sigma, params, order=1)
    if not (abs(p_value) < CERTIFICATE_TOL and p_prime > 0.0):
        raise NumericalError(
            f"designed nu = {nu!r} fails its certificate: P = {p_value:.3e}, "
            f"P' = {p_prime:.3e}"
        )
    return DesignResult(
        sigma=sigma,
        kappa=kappa,
        delta=delta,
        nu=nu,
        p_value=p_value,
        p_prime=p_prime,
        branch=branch,
    )
