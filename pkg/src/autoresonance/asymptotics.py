"""Truncated power-law series for captured solutions near a limiting phase.

At a root sigma of the limiting phase equation, the averaged system admits a
particular solution whose amplitude grows like sqrt(lam*tau) and whose phase
settles to sigma. The correction terms form a series in inverse fractional
powers of tau; the lattice step and the leading phase correction depend on
the multiplicity of the root:

* multiplicity 1: step 1/2, phase corrections start at tau^-1,
* multiplicity 2: step 1/2, two branches with opposite tau^-1/2 phase terms,
* multiplicity 3: step 1/6, phase correction starts at tau^-1/3,
* multiplicity 4: step 1/4, two branches starting at tau^-1/4.

:func:`build_series` computes the coefficients from closed-form recurrences
up to the highest order implemented here. :func:`evaluate_series` and
:func:`residual_norm` evaluate the truncated series and measure how well it
satisfies the averaged equations, which is the practical convergence check:
the normalized residual of a series truncated at order K must fall off like
tau^-(K+1)/2 on the half-power lattice (and correspondingly faster lattices
for the higher-multiplicity cases).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, SeriesExistenceError, UnsupportedOrderError
from .params import ModelParams
from .phase_equation import PhaseRoot, eval_P

__all__ = [
    "SeriesCase",
    "SeriesSolution",
    "build_series",
    "evaluate_series",
    "residual_norm",
]

#: Highest coefficient index with a closed-form recurrence, per case.
_ORDER_CAP = {1: 3, 2: 3, 3: 7, 4: 6}
#: The phase chain stops earlier than the amplitude chain for the cubic and
#: quartic lattices.
_PSI_CAP = {1: 3, 2: 3, 3: 5, 4: 4}
#: Largest |P(sigma)| accepted when pairing a root with model parameters.
_ROOT_CONSISTENCY_TOL = 1e-8


class SeriesCase(enum.Enum):
    """Which root multiplicity the series is built at."""

    SIMPLE = "simple"
    DOUBLE = "double"
    TRIPLE = "triple"
    QUADRUPLE = "quadruple"


_CASE_BY_MULTIPLICITY = {
    1: SeriesCase.SIMPLE,
    2: SeriesCase.DOUBLE,
    3: SeriesCase.TRIPLE,
    4: SeriesCase.QUADRUPLE,
}


@dataclass(frozen=True)
class SeriesSolution:
    """Coefficients of one truncated asymptotic solution.

    Attributes:
        case: root-multiplicity case the series belongs to.
        sign: branch selector, meaningful for the two-branch cases
            (DOUBLE and QUADRUPLE); +1 otherwise.
        sigma: limiting phase, in [0, 2*pi).
        power_step: lattice step of the inverse powers (1/2, 1/2, 1/6, 1/4
            for the four cases in order).
        rho_coeffs: amplitude coefficients, starting with the sqrt(tau)
            coefficient: (rho[-1], rho[0], rho[1], ..., rho[order]).
        psi_coeffs: phase coefficients (psi[1], ..., psi[min(order, cap)]).
        order: highest inverse-power index requested.
    """

    case: SeriesCase
    sign: int
    sigma: float
    power_step: Fraction
    rho_coeffs: tuple[float, ...]
    psi_coeffs: tuple[float, ...]
    order: int

    def to_record(self) -> dict[str, object]:
        """JSON-friendly dump of the series."""
        return {
            "case": self.case.value,
            "sign": self.sign,
            "sigma": self.sigma,
            "step": str(self.power_step),
            "order": self.order,
            "rho": list(self.rho_coeffs),
            "psi": list(self.psi_coeffs),
        }


def _series_context(params: ModelParams, root: PhaseRoot) -> dict[str, float]:
    """Collect the scalars every recurrence below is written in."""
    s = params.sqrt_lam
    sigma = root.sigma
    pp = params.phase_params()
    if abs(eval_P(sigma, pp)) > _ROOT_CONSISTENCY_TOL:
        raise DomainError(
            "root.sigma does not solve the phase equation for these parameters"
        )
    return {
        "lam": params.lam,
        "s": s,
        "delta": params.delta,
        "sigma": sigma,
        "sn": math.sin(sigma),
        "cs": math.cos(sigma),
        "sa": math.sin(2.0 * sigma + params.nu),
        "ca": math.cos(2.0 * sigma + params.nu),
        "d1": eval_P(sigma, pp, 1),
        "d2": eval_P(sigma, pp, 2),
        "d3": eval_P(sigma, pp, 3),
        "d4": eval_P(sigma, pp, 4),
        "a1": params.tail_coeff("alpha", 1),
        "a2": params.tail_coeff("alpha", 2),
        "b0": params.tail_coeff("beta", 0),
        "b1": params.tail_coeff("beta", 1),
        "b2": params.tail_coeff("beta", 2),
        "g1": params.tail_coeff("gamma", 1),
        "g2": params.tail_coeff("gamma", 2),
    }


def _half_power_rho_rhs(c: dict[str, float], k: int, rho: list[float], psi: list[float]) -> float:
    """Right-hand side of the amplitude chain on the half-power lattice.

    Shared by the simple and double cases; ``rho[k]`` / ``psi[k]`` hold the
    coefficients with that inverse-power index (``rho[0]`` is the constant
    term, the sqrt(tau) coefficient is carried separately in the context).
    """
    s, delta = c["s"], c["delta"]
    if k == 1:
        return (delta * c["ca"] - c["cs"]) / s
    if k == 2:
        return -psi[1] * (2.0 * delta * c["sa"] - c["sn"]) / s
    if k == 3:
        return (
            -rho[1] ** 2
            + c["b1"] * c["ca"]
            - (c["a1"] - rho[1] / s) * c["cs"] / s
            - psi[2] * (2.0 * delta * c["sa"] - c["sn"]) / s
            - psi[1] ** 2 * (4.0 * delta * c["ca"] - c["cs"]) / (2.0 * s)
        )
    raise UnsupportedOrderError(f"no amplitude recurrence at index {k}")


def _simple_psi_rhs(c: dict[str, float], k: int, rho: list[float], psi: list[float]) -> float:
    s = c["s"]
    if k == 1:
        return 0.0
    if k == 2:
        return (
            -c["d2"] * psi[1] ** 2 / 2.0
            + (c["a1"] - rho[1] / s) * c["sn"]
            - c["b1"] * s * c["sa"]
            - (1.0 + 2.0 * c["g1"]) * s / 2.0
        )
    if k == 3:
        return (
            -psi[1] * psi[2] * c["d2"]
            - rho[2] * c["sn"] / s
            - psi[1] ** 3 * c["d3"] / 6.0
            + c["a1"] * psi[1] * c["cs"]
            - 2.0 * psi[1] * (c["b1"] * s + c["b0"] * rho[1]) * c["ca"]
        )
    raise UnsupportedOrderError(f"no phase recurrence at index {k}")


def _double_psi_rhs(c: dict[str, float], k: int, rho: list[float], psi: list[float]) -> float:
    s = c["s"]
    moment = c["b1"] * s + c["b0"] * rho[1]
    if k == 2:
        return (
            -psi[1] ** 3 * c["d3"] / 6.0
            + c["a1"] * psi[1] * c["cs"]
            - 2.0 * psi[1] * moment * c["ca"]
        )
    if k == 3:
        return (
            rho[1] / 2.0
            - c["g1"] * rho[1]
            - c["g2"] * s
            - psi[2] ** 2 * c["d2"] / 2.0
            - psi[1] ** 2 * psi[2] * c["d3"] / 2.0
            - psi[1] ** 4 * c["d4"] / 24.0
            - c["a1"] * (psi[2] * c["cs"] - psi[1] ** 2 * c["sn"] / 2.0)
            - (2.0 * psi[2] * moment + 2.0 * psi[1] * c["b0"] * rho[2]) * c["ca"]
            + (2.0 * psi[1] ** 2 * moment + c["a2"] - c["b2"] * s - c["b1"] * rho[1]) * c["sa"]
        )
    raise UnsupportedOrderError(f"no phase recurrence at index {k}")


def _second_correction_source(c: dict[str, float]) -> float:
    """The scalar whose sign decides existence at a double root.

    The same combination, scaled by 6, drives the cubic equation for the
    leading phase correction at a triple root.
    """
    s, lam = c["s"], c["lam"]
    tail = c["b1"] * s * c["sa"] - c["a1"] * c["sn"] + c["g1"] * s
    return (math.sin(2.0 * c["sigma"]) - 4.0 * lam * lam) / (8.0 * lam * s) - tail


def _build_half_power(
    params: ModelParams, root: PhaseRoot, order: int, sign: int
) -> SeriesSolution:
    c = _series_context(params, root)
    s = c["s"]
    double = root.multiplicity == 2

    # Index-aligned scratch lists over the full implemented depth; entry 0
    # is the constant coefficient. The output is sliced to the requested
    # order afterwards.
    rho = [0.0] * 4
    psi = [0.0] * 4

    if double:
        source = _second_correction_source(c)
        if c["d2"] * source <= 0.0:
            raise SeriesExistenceError("P''(sigma) * C(sigma) > 0")
        psi[1] = sign * math.sqrt(2.0 * source / c["d2"])

    for k in range(1, 4):
        rho[k] = _half_power_rho_rhs(c, k, rho, psi) / (2.0 * s)
        if double:
            if k >= 2:
                rhs = _double_psi_rhs(c, k, rho, psi)
                psi[k] = (rhs - c["sn"] * rho[k] / s) / (c["d2"] * psi[1])
        else:
            psi[k] = _simple_psi_rhs(c, k, rho, psi) / c["d1"]

    return SeriesSolution(
        case=SeriesCase.DOUBLE if double else SeriesCase.SIMPLE,
        sign=sign if double else 1,
        sigma=root.sigma,
        power_step=Fraction(1, 2),
        rho_coeffs=(s, *rho[: order + 1]),
        psi_coeffs=tuple(psi[1 : order + 1]),
        order=order,
    )


def _build_sixth_power(
    params: ModelParams, root: PhaseRoot, order: int, sign: int
) -> SeriesSolution:
    c = _series_context(params, root)
    s, lam = c["s"], c["lam"]
    sn, cs = c["sn"], c["cs"]

    cubic_source = 6.0 * _second_correction_source(c)
    if cubic_source == 0.0:
        raise SeriesExistenceError("N(sigma) != 0")

    rho = [0.0] * 8
    psi = [0.0] * 6
    rho[3] = -cs / (4.0 * lam)
    ratio = cubic_source / c["d3"]
    psi[2] = math.copysign(abs(ratio) ** (1.0 / 3.0), ratio)

    # Chain stages pair the amplitude coefficient of index k+1 with the
    # phase coefficient of index k.
    def m_rhs(j: int) -> float:
        if j == 4:
            return 0.0
        if j == 5:
            return psi[2] * sn / (2.0 * s)
        if j == 6:
            return psi[3] * sn / (2.0 * s)
        return (psi[4] * sn - psi[2] ** 2 * cs) / (2.0 * s)  # j == 7

    def n_rhs(k: int) -> float:
        drift = c["b1"] * s + c["b0"] * rho[3] - c["a1"]
        if k == 3:
            return 0.0
        if k == 4:
            return (
                -psi[2] * drift * cs
                - c["d3"] * psi[2] * psi[3] ** 2 / 2.0
                - c["d4"] * psi[2] ** 4 / 24.0
            )
        return (  # k == 5
            -psi[3] * drift * cs
            - c["d3"] * (6.0 * psi[2] * psi[3] * psi[4] + psi[3] ** 3) / 6.0
            - c["d4"] * psi[2] ** 3 * psi[3] / 6.0
        )

    for k in range(3, 7):
        rho[k + 1] = m_rhs(k + 1) / (2.0 * s)
        if k <= 5:
            psi[k] = (n_rhs(k) - sn * rho[k + 1] / s) * 2.0 / (c["d3"] * psi[2] ** 2)

    return SeriesSolution(
        case=SeriesCase.TRIPLE,
        sign=1,
        sigma=root.sigma,
        power_step=Fraction(1, 6),
        rho_coeffs=(s, *rho[: order + 1]),
        psi_coeffs=tuple(psi[1 : min(order, 5) + 1]),
        order=order,
    )


def _build_quarter_power(
    params: ModelParams, root: PhaseRoot, order: int, sign: int
) -> SeriesSolution:
    c = _series_context(params, root)
    s = c["s"]

    quartic_source = 8.0 * c["a1"] + 4.0 * s * (2.0 * c["b1"] - 2.0 * c["g1"] - 1.0)
    if quartic_source <= 0.0:
        raise SeriesExistenceError("Q > 0")

    rho = [0.0] * 7
    psi = [0.0] * 5
    psi[1] = sign * quartic_source**0.25

    def t_rhs(j: int) -> float:
        if j == 3:
            return psi[1] / (2.0 * s)
        if j == 4:
            return psi[2] / (2.0 * s)
        if j == 5:
            return (psi[1] ** 3 + 3.0 * psi[3]) / (6.0 * s)
        return (psi[1] ** 2 * psi[2] + psi[4] - 2.0 * s * rho[2] ** 2) / (2.0 * s)  # j == 6

    def q_rhs(k: int) -> float:
        if k == 2:
            return 0.0
        if k == 3:
            return (
                -c["a1"] * psi[1] ** 2
                - 4.0 * c["b1"] * s * psi[1] ** 2
                + psi[1] ** 6 / 24.0
                - 3.0 * psi[1] ** 2 * psi[2] ** 2 / 2.0
                + psi[1] ** 2 * rho[2] / s
            )
        return (  # k == 4
            -2.0 * c["a1"] * psi[1] * psi[2]
            - 8.0 * c["b1"] * s * psi[1] * psi[2]
            + psi[1] ** 5 * psi[2]
            - psi[1] * psi[2] ** 3
            - 3.0 * psi[1] ** 2 * psi[2] * psi[3]
            - 2.0 * psi[1] * psi[2] * rho[2] / s
            + psi[1] ** 2 * rho[3] / s
        )

    for k in range(2, 6):
        rho[k + 1] = t_rhs(k + 1) / (2.0 * s)
        if k <= 4:
            psi[k] = (q_rhs(k) - 2.0 * rho[k + 1] / s) / psi[1] ** 3

    return SeriesSolution(
        case=SeriesCase.QUADRUPLE,
        sign=sign,
        sigma=root.sigma,
        power_step=Fraction(1, 4),
        rho_coeffs=(s, *rho[: order + 1]),
        psi_coeffs=tuple(psi[1 : min(order, 4) + 1]),
        order=order,
    )


def build_series(
    params: ModelParams, root: PhaseRoot, order: int, sign: int = 1
) -> SeriesSolution:
    """Build the truncated series attached to a phase-equation root.

    Args:
        params: model parameters (including the coefficient tails, whose
            entries beyond the stored length count as zero).
        root: root of the limiting phase equation for ``params``; its
            multiplicity selects the construction.
        order: highest inverse-power index to include. The amplitude chain
            supports order <= 3, 3, 7, 6 for multiplicities 1 to 4; the
            phase chain is shorter for the two fractional lattices (index
            5 for multiplicity 3, index 4 for multiplicity 4) and is
            truncated there automatically.
        sign: branch selector for the two-branch cases (+1 or -1).

    Raises:
        SeriesExistenceError: the requested branch does not exist (the
            ``condition`` attribute names the violated inequality).
        UnsupportedOrderError: order beyond the implemented recurrences.
        DomainError: invalid order/sign, or a root inconsistent with
            ``params``.
    """
    if sign not in (-1, 1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    if root.multiplicity not in _CASE_BY_MULTIPLICITY:
        raise DomainError(f"unsupported root multiplicity {root.multiplicity}")
    if order < 0:
        raise DomainError(f"order must be nonnegative, got {order}")
    cap = _ORDER_CAP[root.multiplicity]
    if order > cap:
        raise UnsupportedOrderError(
            f"order {order} exceeds the implemented recurrences "
            f"(max {cap} for multiplicity {root.multiplicity})"
        )
    if root.multiplicity == 1:
        return _build_half_power(params, root, order, 1)
    if root.multiplicity == 2:
        return _build_half_power(params, root, order, sign)
    if root.multiplicity == 3:
        return _build_sixth_power(params, root, order, sign)
    return _build_quarter_power(params, root, order, sign)


def evaluate_series(s: SeriesSolution, tau: float) -> tuple[float, float]:
    """Evaluate the truncated series at one time.

    Returns:
        (rho, psi) at ``tau``.

    Raises:
        DomainError: if tau <= 0 (the power lattice needs tau > 0).
    """
    if not (tau > 0.0):
        raise DomainError(f"tau must be positive, got {tau}")
    step = float(s.power_step)
    rho = s.rho_coeffs[0] * math.sqrt(tau) + s.rho_coeffs[1]
    for k in range(2, len(s.rho_coeffs)):
        rho += s.rho_coeffs[k] * tau ** (-(k - 1) * step)
    psi = s.sigma
    for k, coeff in enumerate(s.psi_coeffs, start=1):
        psi += coeff * tau ** (-k * step)
    return rho, psi


def residual_norm(
    s: SeriesSolution, params: ModelParams, tau: float
) -> tuple[float, float]:
    """Normalized residuals of the averaged system along the series.

    The truncated series (with analytically differentiated terms) is
    substituted into the two averaged equations; each raw defect is then
    divided by the size of the dominant balance, alpha(tau) for the
    amplitude equation and rho*alpha(tau) for the phase equation, so that
    both residuals are dimensionless and decay at the truncation-order
    rate.

    Raises:
        DomainError: if tau <= 0 or the truncated amplitude is not
            positive at tau.
    """
    if not (tau > 0.0):
        raise DomainError(f"tau must be positive, got {tau}")
    step = float(s.power_step)
    sqrt_tau = math.sqrt(tau)
    s_p = math.sqrt(params.lam)

    # Split rho into sqrt(lam*tau) plus a bounded remainder so that
    # rho^2 - lam*tau can be formed without subtracting two O(tau) numbers
    # (the naive form loses the entire residual to rounding at large tau).
    tilde = (s.rho_coeffs[0] - s_p) * sqrt_tau + s.rho_coeffs[1]
    dtilde = 0.5 * (s.rho_coeffs[0] - s_p) / sqrt_tau
    for k in range(2, len(s.rho_coeffs)):
        p = -(k - 1) * step
        tilde += s.rho_coeffs[k] * tau**p
        dtilde += s.rho_coeffs[k] * p * tau ** (p - 1.0)
    rho = s_p * sqrt_tau + tilde
    drho = 0.5 * s_p / sqrt_tau + dtilde
    if rho <= 0.0:
        raise DomainError(f"series amplitude is not positive at tau={tau}")

    psi = s.sigma
    dpsi = 0.0
    for k, coeff in enumerate(s.psi_coeffs, start=1):
        p = -k * step
        psi += coeff * tau**p
        dpsi += coeff * p * tau ** (p - 1.0)

    alpha = params.alpha(tau)
    beta = params.beta(tau)
    gamma = params.gamma(tau)
    angle = 2.0 * psi + params.nu
    square_defect = (2.0 * s_p * sqrt_tau + tilde) * tilde  # rho^2 - lam*tau
    r1 = drho + gamma * rho - alpha * math.sin(psi) + beta * rho * math.sin(angle)
    r2 = (
        rho * (dpsi - square_defect)
        - alpha * math.cos(psi)
        + beta * rho * math.cos(angle)
    )
    return r1 / alpha, r2 / (rho * alpha)
