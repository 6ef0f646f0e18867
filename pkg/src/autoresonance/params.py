"""Parameter records for the phase equation and the averaged system.

Two levels of description are used throughout the package:

* :class:`PhaseParams` holds the three dimensionless numbers (delta, nu,
  kappa) that the limiting phase equation depends on.
* :class:`ModelParams` holds the full data of the slowly modulated system:
  the sweep-rate parameter ``lam``, the excitation phase offset ``nu`` and
  the coefficient tails of the three slowly varying coefficients. The
  phase-equation numbers are derived from it (``delta = beta0*sqrt(lam)``,
  ``kappa = gamma0*sqrt(lam)``).

Coefficient tails are finite tuples ``(c0, c1, c2, ...)`` representing the
truncated expansions in inverse powers of tau:

* external drive amplitude   ``alpha(tau) = sqrt(tau) * sum_k alpha_k tau^-k``
* parametric drive amplitude ``beta(tau)  =             sum_k beta_k  tau^-k``
* damping coefficient        ``gamma(tau) =             sum_k gamma_k tau^-k``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

TWO_PI = 2.0 * math.pi


def _tail_value(tail: tuple[float, ...], tau: float) -> float:
    """Evaluate sum_k tail[k] * tau**-k by Horner's rule in 1/tau."""
    acc = 0.0
    for c in reversed(tail):
        acc = acc / tau + c
    return acc


@dataclass(frozen=True)
class PhaseParams:
    """Dimensionless data of the limiting phase equation.

    Attributes:
        delta: combined-excitation balance parameter (parametric amplitude
            times sqrt(lam)).
        nu: excitation phase offset, in [0, pi).
        kappa: scaled damping parameter (damping coefficient times
            sqrt(lam)); nonnegative, with kappa > 0 in every regime the
            partition analysis covers.
    """

    delta: float
    nu: float
    kappa: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.nu < math.pi):
            raise DomainError(f"nu must lie in [0, pi), got {self.nu}")
        if self.kappa < 0.0:
            raise DomainError(f"kappa must be nonnegative, got {self.kappa}")
        for name in ("delta", "nu", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class ModelParams:
    """Full data of the slowly modulated averaged system.

    Attributes:
        lam: sweep-rate parameter, positive.
        nu: excitation phase offset, in [0, pi).
        alpha_tail: coefficients of the external-drive tail. The leading
            coefficient is normalized to 1 in all series constructions;
            the record itself allows other values so that degenerate
            integration checks (e.g. alpha identically zero) are
            expressible.
        beta_tail: coefficients of the parametric-drive tail.
        gamma_tail: coefficients of the damping tail.
    """

    lam: float
    nu: float
    alpha_tail: tuple[float, ...] = (1.0,)
    beta_tail: tuple[float, ...] = (0.0,)
    gamma_tail: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise DomainError(f"lam must be positive and finite, got {self.lam}")
        if not (0.0 <= self.nu < math.pi):
            raise DomainError(f"nu must lie in [0, pi), got {self.nu}")
        for name in ("alpha_tail", "beta_tail", "gamma_tail"):
            tail = getattr(self, name)
            object.__setattr__(self, name, tuple(float(c) for c in tail))
            if len(getattr(self, name)) == 0:
                raise DomainError(f"{name} must have at least one coefficient")

    @property
    def sqrt_lam(self) -> float:
        return math.sqrt(self.lam)

    @property
    def delta(self) -> float:
        """beta0 * sqrt(lam)."""
        return self.beta_tail[0] * self.sqrt_lam

    @property
    def kappa(self) -> float:
        """gamma0 * sqrt(lam)."""
        return self.gamma_tail[0] * self.sqrt_lam

    def phase_params(self) -> PhaseParams:
        """Project onto the phase-equation parameters (delta, nu, kappa)."""
        return PhaseParams(delta=self.delta, nu=self.nu, kappa=self.kappa)

    def tail_coeff(self, which: str, k: int) -> float:
        """Coefficient k of one of the tails; zero beyond the stored length."""
        tail: tuple[float, ...] = getattr(self, f"{which}_tail")
        return tail[k] if k < len(tail) else 0.0

    def alpha(self, tau: float) -> float:
        """External-drive amplitude sqrt(tau) * sum_k alpha_k tau^-k."""
        return math.sqrt(tau) * _tail_value(self.alpha_tail, tau)

    def beta(self, tau: float) -> float:
        """Parametric-drive amplitude sum_k beta_k tau^-k."""
        return _tail_value(self.beta_tail, tau)

    def gamma(self, tau: float) -> float:
        """Damping coefficient sum_k gamma_k tau^-k."""
        return _tail_value(self.gamma_tail, tau)


def wrap_angle(x: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    y = math.fmod(x, TWO_PI)
    if y < 0.0:
        y += TWO_PI
    if y >= TWO_PI:  # rounding can push a tiny negative back up to 2*pi
        y = 0.0
    return y
