"""The limiting phase equation: evaluation and root finding.

The admissible limiting phases sigma of a captured solution are the roots in
[0, 2*pi) of

    P(sigma) = delta*sin(2*sigma + nu) - sin(sigma) + kappa.

P is a degree-2 trigonometric polynomial, so it has at most four roots
counted with multiplicity; the derivative chain P', P'', ... is available in
closed form. Root multiplicity (the order of the first nonvanishing
derivative) selects the fractional-power lattice of the matching asymptotic
solution and drives the stability classification, so it is reported with
every root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .params import TWO_PI, PhaseParams, wrap_angle

__all__ = ["PhaseRoot", "eval_P", "find_roots"]

#: Default number of scan intervals over [0, 2*pi).
DEFAULT_SCAN_INTERVALS = 4096
#: Default threshold below which a derivative counts as vanished.
DEFAULT_TOL_ROOT = 1e-9
#: Default threshold above which a derivative counts as clearly nonzero.
DEFAULT_TOL_SEP = 1e-4
#: Roots closer than this in sigma are merged and re-classified.
DEFAULT_MERGE_TOL = 1e-6

_BISECT_ITERS = 40
_MAX_MULTIPLICITY = 4

# The scan grid's trig values depend only on the interval count, so they are
# cached across calls (find_roots is invoked per grid point in parameter
# sweeps).
_scan_cache: dict[int, tuple[np.ndarray, ...]] = {}


def _scan_trig(scan_intervals: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    cached = _scan_cache.get(scan_intervals)
    if cached is None:
        grid = np.linspace(0.0, TWO_PI, scan_intervals + 1)
        cached = (grid, np.sin(grid), np.cos(grid), np.sin(2.0 * grid), np.cos(2.0 * grid))
        _scan_cache[scan_intervals] = cached
    return cached  # type: ignore[return-value]


def _p_scalar(x: float, d: float, nu: float, kappa: float, order: int) -> float:
    a = 2.0 * x + nu
    if order == 0:
        return d * math.sin(a) - math.sin(x) + kappa
    if order == 1:
        return 2.0 * d * math.cos(a) - math.cos(x)
    if order == 2:
        return -4.0 * d * math.sin(a) + math.sin(x)
    if order == 3:
        return -8.0 * d * math.cos(a) + math.cos(x)
    return 16.0 * d * math.sin(a) - math.sin(x)


def _bisect_scalar(
    lo: float, hi: float, flo: float, d: float, nu: float, kappa: float, order: int
) -> float:
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        fmid = _p_scalar(mid, d, nu, kappa, order)
        if flo * fmid <= 0.0:
            hi = mid
        else:
            lo = mid
            flo = fmid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PhaseRoot:
    """A root of the phase equation with its derivative fingerprint.

    Attributes:
        sigma: root location in [0, 2*pi).
        multiplicity: order of the first derivative that is clearly nonzero
            at sigma (1 to 4).
        derivs: values (P, P', P'', P''', P'''') evaluated at sigma.
    """

    sigma: float
    multiplicity: int
    derivs: tuple[float, float, float, float, float]


def eval_P(sigma: float, params: PhaseParams, order: int = 0) -> float:
    """Evaluate d^order P / d sigma^order at sigma, in closed form.

    Args:
        sigma: phase angle (any real; P is 2*pi periodic).
        params: phase-equation parameters.
        order: derivative order, 0 to 4.

    Raises:
        DomainError: if order is outside 0..4.
    """
    if order not in (0, 1, 2, 3, 4):
        raise DomainError(f"derivative order must be in 0..4, got {order}")
    d, nu, kappa = params.delta, params.nu, params.kappa
    a = 2.0 * sigma + nu
    if order == 0:
        return d * math.sin(a) - math.sin(sigma) + kappa
    if order == 1:
        return 2.0 * d * math.cos(a) - math.cos(sigma)
    if order == 2:
        return -4.0 * d * math.sin(a) + math.sin(sigma)
    if order == 3:
        return -8.0 * d * math.cos(a) + math.cos(sigma)
    return 16.0 * d * math.sin(a) - math.sin(sigma)


def _derivs_at(sigma: float, d: float, nu: float, kappa: float) -> tuple[float, float, float, float, float]:
    return tuple(_p_scalar(sigma, d, nu, kappa, j) for j in range(5))  # type: ignore[return-value]


def _classify_multiplicity(
    sigma: float, d: float, nu: float, kappa: float, tol_sep: float
) -> int | None:
    """First derivative order (1..4) whose magnitude clearly exceeds tol_sep."""
    for m in range(1, _MAX_MULTIPLICITY + 1):
        if abs(_p_scalar(sigma, d, nu, kappa, m)) > tol_sep:
            return m
    return None


def _polish(sigma: float, d: float, nu: float, kappa: float, multiplicity: int) -> float:
    """Newton iteration on P^(m-1), whose zero at the root is simple."""
    x = sigma
    for _ in range(60):
        f = _p_scalar(x, d, nu, kappa, multiplicity - 1)
        df = _p_scalar(x, d, nu, kappa, multiplicity)
        if df == 0.0:
            break
        step = f / df
        x -= step
        if abs(step) < 1e-15:
            break
    # A diverging Newton step means the multiplicity guess was wrong for this
    # neighborhood; fall back to the bisected location.
    if abs(x - sigma) > 0.05:
        return sigma
    return x


def find_roots(
    params: PhaseParams,
    tol_root: float = DEFAULT_TOL_ROOT,
    tol_sep: float = DEFAULT_TOL_SEP,
    scan_intervals: int = DEFAULT_SCAN_INTERVALS,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> list[PhaseRoot]:
    """Find all roots of P in [0, 2*pi) with multiplicity classification.

    The search combines a uniform bracket scan of P (catching all
    odd-multiplicity roots) with a scan of P' whose zeros are probed for
    tangencies (catching even-multiplicity roots and rescuing close pairs
    that straddle a near-tangency). Every candidate is bisected to ~1e-13,
    classified by derivative magnitudes, and Newton-polished on the lowest
    order derivative that still has a simple zero at the root.

    Args:
        params: phase-equation parameters.
        tol_root: magnitude below which P and its low derivatives are
            considered zero at a root.
        tol_sep: magnitude above which a derivative counts as clearly
            nonzero (decides multiplicity).
        scan_intervals: number of uniform scan intervals over [0, 2*pi).
        merge_tol: roots closer than this are merged and re-classified.

    Returns:
        Roots sorted by sigma. The list length (roots counted without
        multiplicity) is between 0 and 4.

    Raises:
        DomainError: if the tolerances are not 0 < tol_root < tol_sep.
        NumericalError: if a candidate cannot be classified or refined.
    """
    if not (0.0 < tol_root < tol_sep):
        raise DomainError(
            f"tolerances must satisfy 0 < tol_root < tol_sep, got {tol_root}, {tol_sep}"
        )
    d, nu, kappa = params.delta, params.nu, params.kappa
    grid, sin_g, cos_g, sin2_g, cos2_g = _scan_trig(scan_intervals)
    spacing = TWO_PI / scan_intervals
    cnu, snu = math.cos(nu), math.sin(nu)
    sin_a = sin2_g * cnu + cos2_g * snu  # sin(2*sigma + nu) on the grid
    cos_a = cos2_g * cnu - sin2_g * snu

    candidates: list[float] = []

    # Sign-change brackets of P itself.
    p_vals = d * sin_a - sin_g + kappa
    candidates.extend(grid[np.flatnonzero(p_vals == 0.0)].tolist())
    idx = np.flatnonzero(p_vals[:-1] * p_vals[1:] < 0.0)
    for i in idx:
        candidates.append(
            _bisect_scalar(grid[i], grid[i + 1], p_vals[i], d, nu, kappa, 0)
        )
    if p_vals[0] * p_vals[-1] < 0.0:
        # grid[0] and grid[-1] are the same point mod 2*pi; opposite signs
        # mean rounding noise straddles a root sitting exactly at sigma = 0.
        candidates.append(0.0)

    # Zeros of P' (extrema of P): tangency roots and near-tangency pairs.
    dp_vals = 2.0 * d * cos_a - cos_g
    ext: list[float] = grid[np.flatnonzero(dp_vals == 0.0)].tolist()
    didx = np.flatnonzero(dp_vals[:-1] * dp_vals[1:] < 0.0)
    for i in didx:
        ext.append(_bisect_scalar(grid[i], grid[i + 1], dp_vals[i], d, nu, kappa, 1))
    if dp_vals[0] * dp_vals[-1] < 0.0:
        ext.append(0.0)
    for sigma_e in ext:
        p_e = _p_scalar(sigma_e, d, nu, kappa, 0)
        if abs(p_e) <= tol_root:
            candidates.append(sigma_e)
            continue
        pdd = _p_scalar(sigma_e, d, nu, kappa, 2)
        if pdd == 0.0 or p_e * pdd > 0.0:
            continue
        # P crosses zero on both sides of the extremum; the pair sits within
        # half-width sqrt(2|P/P''|). Rescue it only if the scan could have
        # missed it.
        half = math.sqrt(2.0 * abs(p_e / pdd))
        if half > 2.0 * spacing:
            continue
        width = 3.0 * half
        for lo, hi in ((sigma_e - width, sigma_e), (sigma_e, sigma_e + width)):
            flo = _p_scalar(lo, d, nu, kappa, 0)
            fhi = _p_scalar(hi, d, nu, kappa, 0)
            if flo * fhi < 0.0:
                candidates.append(_bisect_scalar(lo, hi, flo, d, nu, kappa, 0))

    roots: list[PhaseRoot] = []
    for sigma in _merge_positions(candidates, merge_tol):
        mult = _classify_multiplicity(sigma, d, nu, kappa, tol_sep)
        if mult is None:
            raise NumericalError(
                f"cannot classify root multiplicity near sigma={sigma!r}: "
                "all derivatives below tol_sep"
            )
        # Polishing can shift the location enough to change the verdict;
        # iterate classify/polish to a fixed point.
        for _ in range(3):
            polished = _polish(sigma, d, nu, kappa, mult)
            new_mult = _classify_multiplicity(polished, d, nu, kappa, tol_sep)
            if new_mult is None:
                raise NumericalError(
                    f"cannot classify root multiplicity near sigma={polished!r}"
                )
            sigma = polished
            if new_mult == mult:
                break
            mult = new_mult
        derivs = _derivs_at(sigma, d, nu, kappa)
        if abs(derivs[0]) > tol_root:
            continue  # a near-tangency that does not actually touch zero
        roots.append(PhaseRoot(sigma=wrap_angle(sigma), multiplicity=mult, derivs=derivs))

    # Polishing may have collapsed distinct candidates onto one root.
    roots.sort(key=lambda r: r.sigma)
    deduped: list[PhaseRoot] = []
    for root in roots:
        if deduped and _circular_gap(deduped[-1].sigma, root.sigma) < merge_tol:
            continue
        deduped.append(root)
    if len(deduped) > 1 and _circular_gap(deduped[-1].sigma, deduped[0].sigma) < merge_tol:
        deduped.pop()
    return deduped


def _circular_gap(a: float, b: float) -> float:
    gap = abs(a - b) % TWO_PI
    return min(gap, TWO_PI - gap)


def _merge_positions(positions: list[float], merge_tol: float) -> list[float]:
    """Collapse candidate clusters (circularly) to their representatives."""
    if not positions:
        return []
    wrapped = sorted(wrap_angle(s) for s in positions)
    merged = [wrapped[0]]
    for s in wrapped[1:]:
        if s - merged[-1] < merge_tol:
            continue
        merged.append(s)
    if len(merged) > 1 and (TWO_PI - merged[-1]) + merged[0] < merge_tol:
        merged.pop()
    return merged
