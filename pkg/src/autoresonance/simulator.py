"""Numerical integration of the averaged system and the driven oscillator.

The averaged system couples a slowly growing amplitude rho(tau) to a phase
mismatch psi(tau):

    d(rho)/d(tau) + gamma(tau) rho = alpha(tau) sin(psi)
                                     - beta(tau) rho sin(2 psi + nu),
    rho [d(psi)/d(tau) - rho^2 + lam tau] = alpha(tau) cos(psi)
                                     - beta(tau) rho cos(2 psi + nu).

Captured solutions track rho ~ sqrt(lam tau) with psi settling near a root
of the limiting phase equation.  Two coordinate modes are offered: the polar
form above, and a Cartesian regularization (u, v) = (rho cos psi,
rho sin psi) whose right-hand side is smooth through rho = 0.

The module also integrates the underlying driven oscillator

    x'' + eps C x' + (1 + eps B cos(2 zeta - nu)) (x - eps x^3 / 6)
        = eps A cos(zeta),    zeta(t) = t - vartheta t^2,

so that the averaged amplitude can be compared against the full envelope,
and provides capture detection plus basin sampling over initial data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericalError
from .params import TWO_PI, ModelParams

__all__ = [
    "Trajectory",
    "CaptureReport",
    "OscillatorParams",
    "OscillatorRun",
    "BasinResult",
    "integrate",
    "perturbation_trajectory",
    "detect_capture",
    "simulate_full_oscillator",
    "basin_sample",
]

DEFAULT_TAU_START = 20.0
POLAR_RHO_FLOOR = 1e-6
MIN_TAIL_SAMPLES = 50


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the averaged system on a uniform tau grid.

    ``meta`` records the integrator settings and the coordinate convention:
    ``meta["coordinates"]`` is ``"averaged"`` when (rho, psi) hold the system
    state and ``"shifted"`` when they hold a perturbation (R, Psi) measured
    from a reference solution.
    """

    tau_samples: np.ndarray
    rho: np.ndarray
    psi: np.ndarray
    meta: dict[str, Any]


@dataclass(frozen=True)
class CaptureReport:
    """Outcome of capture detection on a trajectory tail."""

    captured: bool
    sigma_est: float | None
    window_start: float
    max_amp_deviation: float
    phase_range: float

    def to_record(self) -> dict[str, Any]:
        return {
            "captured": self.captured,
            "sigma_est": self.sigma_est,
            "window_start": self.window_start,
            "max_amp_deviation": self.max_amp_deviation,
            "phase_range": self.phase_range,
        }


@dataclass(frozen=True)
class OscillatorParams:
    """Data of the driven oscillator with a slowly chirped phase.

    Attributes:
        epsilon: smallness parameter of the drive and the nonlinearity,
            in (0, 0.1].
        vartheta: chirp rate of the drive phase zeta(t) = t - vartheta t^2,
            positive.
        forcing_amp: external drive amplitude (the factor A).
        pump_amp: parametric drive amplitude (the factor B).
        damping: damping coefficient (the factor C).
        nu: phase offset between the two drives.  Unlike the averaged
            system's offset this is a raw drive phase, so any finite value
            is accepted.
    """

    epsilon: float
    vartheta: float
    forcing_amp: float
    pump_amp: float
    damping: float
    nu: float

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon <= 0.1):
            raise DomainError(f"epsilon must lie in (0, 0.1], got {self.epsilon}")
        if not (self.vartheta > 0.0 and math.isfinite(self.vartheta)):
            raise DomainError(f"vartheta must be positive, got {self.vartheta}")
        if not math.isfinite(self.nu):
            raise DomainError(f"nu must be finite, got {self.nu}")

    @property
    def lam(self) -> float:
        """Nominal sweep-rate label for the chirp, 16*vartheta/epsilon**2.

        This is the conventional bookkeeping value recorded in run
        metadata.  Envelope comparisons against the averaged system give a
        closer match with twice this value; the command-line front end
        reports that corrected figure as ``lam_matched``.
        """
        return 16.0 * self.vartheta / self.epsilon**2

    def chirp_phase(self, t: float) -> float:
        return t - self.vartheta * t * t


@dataclass(frozen=True)
class OscillatorRun:
    """Sampled state history of the driven oscillator."""

    t_samples: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    params: OscillatorParams
    meta: dict[str, Any]


@dataclass(frozen=True)
class BasinResult:
    """Capture mask over a rectangle of initial data.

    ``mask[i, j]`` is the capture flag for the cell at ``rho_values[i]``,
    ``psi_values[j]``.
    """

    rho_values: np.ndarray
    psi_values: np.ndarray
    mask: np.ndarray
    fraction: float
    meta: dict[str, Any]


def _check_span(tau_span: tuple[float, float]) -> tuple[float, float]:
    start, stop = float(tau_span[0]), float(tau_span[1])
    if not (start > 0.0 and math.isfinite(start)):
        raise DomainError(f"tau span must start at a positive time, got {start}")
    if not (stop > start and math.isfinite(stop)):
        raise DomainError(f"tau span must be increasing, got ({start}, {stop})")
    return start, stop


def _solver_meta(sol: Any, mode: str, rtol: float, atol: float) -> dict[str, Any]:
    return {
        "method": "RK45",
        "coordinates": "averaged",
        "mode": mode,
        "rtol": rtol,
        "atol": atol,
        "n_rhs_evaluations": int(sol.nfev),
        "n_accepted_steps": int(len(sol.t)),
    }


def integrate(
    params: ModelParams,
    init: tuple[float, float],
    tau_span: tuple[float, float],
    rtol: float = 1e-8,
    atol: float = 1e-10,
    mode: str = "polar",
    n_samples: int = 2001,
) -> Trajectory:
    """Integrate the averaged system with an adaptive embedded pair.

    ``init`` holds (rho0 > 0, psi0) at the start of ``tau_span`` (which must
    begin at a positive time).  In polar mode the state is (rho, psi) and the
    run aborts if rho falls to the floor where the phase equation becomes
    singular; Cartesian mode integrates (u, v) = (rho cos psi, rho sin psi),
    which is smooth through rho = 0, and converts back on output.  Samples
    are taken on a uniform grid of ``n_samples`` points via dense output.
    """
    start, stop = _check_span(tau_span)
    rho0, psi0 = float(init[0]), float(init[1])
    if not (rho0 > 0.0 and math.isfinite(rho0)):
        raise DomainError(f"initial amplitude must be positive, got {rho0}")
    if mode not in ("polar", "cartesian"):
        raise DomainError(f"mode must be 'polar' or 'cartesian', got {mode!r}")
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")

    lam, nu = params.lam, params.nu
    tau_eval = np.linspace(start, stop, n_samples)

    if mode == "polar":

        def rhs(tau: float, y: np.ndarray) -> list[float]:
            rho, psi = y
            a = params.alpha(tau)
            b = params.beta(tau)
            g = params.gamma(tau)
            drho = -g * rho + a * math.sin(psi) - b * rho * math.sin(2.0 * psi + nu)
            dpsi = (rho * rho - lam * tau) + (
                a * math.cos(psi) - b * rho * math.cos(2.0 * psi + nu)
            ) / rho
            return [drho, dpsi]

        def floor_event(tau: float, y: np.ndarray) -> float:
            return y[0] - POLAR_RHO_FLOOR

        floor_event.terminal = True  # type: ignore[attr-defined]
        floor_event.direction = -1.0  # type: ignore[attr-defined]

        sol = solve_ivp(
            rhs,
            (start, stop),
            [rho0, psi0],
            method="RK45",
            t_eval=tau_eval,
            rtol=rtol,
            atol=atol,
            dense_output=True,
            events=[floor_event],
        )
        if sol.status == 1:
            tau_hit = float(sol.t_events[0][0])
            raise NumericalError(
                f"amplitude reached the polar floor {POLAR_RHO_FLOOR} at "
                f"tau={tau_hit:.6g}; rerun in cartesian mode"
            )
        if sol.status != 0:
            raise NumericalError(f"integration failed: {sol.message}")
        rho_out = sol.y[0].copy()
        psi_out = sol.y[1].copy()
    else:
        u0 = rho0 * math.cos(psi0)
        v0 = rho0 * math.sin(psi0)

        def rhs(tau: float, y: np.ndarray) -> list[float]:
            u, v = y
            a = params.alpha(tau)
            b = params.beta(tau)
            g = params.gamma(tau)
            cube = u * u + v * v - lam * tau
            sn, cn = math.sin(nu), math.cos(nu)
            du = -g * u - cube * v - b * (u * sn + v * cn)
            dv = -g * v + cube * u + a - b * (u * cn - v * sn)
            return [du, dv]

        sol = solve_ivp(
            rhs,
            (start, stop),
            [u0, v0],
            method="RK45",
            t_eval=tau_eval,
            rtol=rtol,
            atol=atol,
            dense_output=True,
        )
        if sol.status != 0:
            raise NumericalError(f"integration failed: {sol.message}")
        rho_out = np.hypot(sol.y[0], sol.y[1])
        psi_out = np.unwrap(np.arctan2(sol.y[1], sol.y[0]))
        psi_out += TWO_PI * round((psi0 - psi_out[0]) / TWO_PI)

    return Trajectory(
        tau_samples=tau_eval,
        rho=rho_out,
        psi=psi_out,
        meta=_solver_meta(sol, mode, rtol, atol),
    )


def perturbation_trajectory(perturbed: Trajectory, reference: Trajectory) -> Trajectory:
    """Sample-wise difference of two runs, as a shifted-coordinate trajectory.

    Both trajectories must share the same tau grid.  The result stores
    R = rho_perturbed - rho_reference and Psi = psi_perturbed - psi_reference
    in the (rho, psi) slots and is marked with ``coordinates: "shifted"``;
    subtracting a reference run started exactly on a particular solution
    isolates the perturbation dynamics around it.
    """
    if perturbed.tau_samples.shape != reference.tau_samples.shape or not np.array_equal(
        perturbed.tau_samples, reference.tau_samples
    ):
        raise DomainError("trajectories must share one tau grid")
    meta = dict(perturbed.meta)
    meta["coordinates"] = "shifted"
    return Trajectory(
        tau_samples=perturbed.tau_samples.copy(),
        rho=perturbed.rho - reference.rho,
        psi=perturbed.psi - reference.psi,
        meta=meta,
    )


def detect_capture(
    traj: Trajectory,
    lam: float,
    window_fraction: float = 0.25,
    tol_amp: float = 0.05,
    tol_phase_range: float = 1.0,
) -> CaptureReport:
    """Decide whether a trajectory is locked onto the resonant growth curve.

    The trailing ``window_fraction`` of the samples must satisfy
    |rho / sqrt(lam tau) - 1| < tol_amp everywhere, with the phase confined
    to a band narrower than ``tol_phase_range``.  The estimated limiting
    phase is the tail mean reduced to [0, 2 pi).
    """
    if not (lam > 0.0 and math.isfinite(lam)):
        raise DomainError(f"lam must be positive and finite, got {lam}")
    if not (0.0 < window_fraction <= 1.0):
        raise DomainError(f"window_fraction must lie in (0, 1], got {window_fraction}")
    n = len(traj.tau_samples)
    n_tail = int(math.ceil(n * window_fraction))
    if n_tail < MIN_TAIL_SAMPLES:
        raise DomainError(
            f"tail window holds {n_tail} samples; at least "
            f"{MIN_TAIL_SAMPLES} are required"
        )
    tau = traj.tau_samples[n - n_tail :]
    rho = traj.rho[n - n_tail :]
    psi = traj.psi[n - n_tail :]

    amp_dev = np.abs(rho / np.sqrt(lam * tau) - 1.0)
    max_dev = float(np.max(amp_dev))
    phase_range = float(np.max(psi) - np.min(psi))
    captured = max_dev < tol_amp and phase_range < tol_phase_range
    sigma_est = float(np.mean(psi) % TWO_PI) if captured else None
    return CaptureReport(
        captured=captured,
        sigma_est=sigma_est,
        window_start=float(tau[0]),
        max_amp_deviation=max_dev,
        phase_range=phase_range,
    )


def simulate_full_oscillator(
    params: OscillatorParams,
    t_span: tuple[float, float],
    rtol: float = 1e-8,
    atol: float = 1e-10,
    init: tuple[float, float] = (0.0, 0.0),
    n_samples: int = 5001,
) -> OscillatorRun:
    """Integrate the driven oscillator over fast time.

    The restoring force is the cubic truncation x - eps x^3 / 6 and both
    drives share the chirped phase zeta(t) = t - vartheta t^2.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (t1 > t0 and math.isfinite(t0) and math.isfinite(t1)):
        raise DomainError(f"t span must be increasing, got ({t0}, {t1})")
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")

    eps = params.epsilon
    th = params.vartheta
    amp_f = eps * params.forcing_amp
    amp_p = eps * params.pump_amp
    damp = eps * params.damping
    nu = params.nu

    def rhs(t: float, y: np.ndarray) -> list[float]:
        x, xdot = y
        zeta = t - th * t * t
        restoring = (1.0 + amp_p * math.cos(2.0 * zeta - nu)) * (x - eps * x**3 / 6.0)
        return [xdot, amp_f * math.cos(zeta) - damp * xdot - restoring]

    sol = solve_ivp(
        rhs,
        (t0, t1),
        [float(init[0]), float(init[1])],
        method="RK45",
        t_eval=np.linspace(t0, t1, n_samples),
        rtol=rtol,
        atol=atol,
    )
    if sol.status != 0:
        raise NumericalError(f"oscillator integration failed: {sol.message}")
    return OscillatorRun(
        t_samples=sol.t.copy(),
        x=sol.y[0].copy(),
        xdot=sol.y[1].copy(),
        params=params,
        meta=_solver_meta(sol, "oscillator", rtol, atol),
    )


def basin_sample(
    params: ModelParams,
    rho_bounds: tuple[float, float],
    psi_bounds: tuple[float, float],
    resolution: tuple[int, int],
    tau_span: tuple[float, float],
    seed: int = 0,
    jitter: float = 0.0,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    n_samples: int = 801,
    window_fraction: float = 0.25,
) -> BasinResult:
    """Capture mask over a grid of initial amplitudes and phases.

    Initial data are laid out on a ``resolution = (n_rho, n_psi)`` grid over
    the given bounds, each cell optionally displaced by uniform jitter of the
    given amplitude (drawn from a generator seeded with ``seed``, so repeat
    calls are deterministic).  Every cell is integrated in Cartesian mode and
    classified with :func:`detect_capture`.
    """
    n_rho, n_psi = resolution
    if n_rho < 2 or n_psi < 2:
        raise DomainError("resolution must be at least 2 per axis")
    if jitter < 0.0:
        raise DomainError(f"jitter must be nonnegative, got {jitter}")
    rho_lo, rho_hi = float(rho_bounds[0]), float(rho_bounds[1])
    psi_lo, psi_hi = float(psi_bounds[0]), float(psi_bounds[1])
    if not (0.0 < rho_lo < rho_hi):
        raise DomainError("rho bounds must satisfy 0 < lo < hi")
    if not psi_lo < psi_hi:
        raise DomainError("psi bounds must be increasing")

    rho_values = np.linspace(rho_lo, rho_hi, n_rho)
    psi_values = np.linspace(psi_lo, psi_hi, n_psi)
    rng = np.random.default_rng(seed)
    offsets = (
        rng.uniform(-jitter, jitter, size=(n_rho, n_psi, 2))
        if jitter > 0.0
        else np.zeros((n_rho, n_psi, 2))
    )

    mask = np.zeros((n_rho, n_psi), dtype=bool)
    for i, rho0 in enumerate(rho_values):
        for j, psi0 in enumerate(psi_values):
            start = (
                max(float(rho0 + offsets[i, j, 0]), POLAR_RHO_FLOOR),
                float(psi0 + offsets[i, j, 1]),
            )
            traj = integrate(
                params,
                start,
                tau_span,
                rtol=rtol,
                atol=atol,
                mode="cartesian",
                n_samples=n_samples,
            )
            mask[i, j] = detect_capture(
                traj, params.lam, window_fraction=window_fraction
            ).captured

    return BasinResult(
        rho_values=rho_values,
        psi_values=psi_values,
        mask=mask,
        fraction=float(np.mean(mask)),
        meta={
            "seed": seed,
            "jitter": jitter,
            "tau_span": (float(tau_span[0]), float(tau_span[1])),
            "rtol": rtol,
            "atol": atol,
        },
    )
