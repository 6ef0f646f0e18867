"""Bifurcation curves and the parameter-plane partition at fixed damping.

For a fixed kappa the (delta, nu) plane splits into regions according to how
many stationary phases the phase-mismatch function admits: four (to the right
of the rightmost curve or to the left of the leftmost one), two (between
them), or none (inside the lens-shaped pockets that appear once kappa reaches
3/4).  The curves themselves are the loci where a root of P degenerates, and
are parametrized by delta through the branch functions p1, p2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError, SingularParameterError
from .params import PhaseParams
from .phase_equation import PhaseRoot, find_roots

__all__ = [
    "RegionLabel",
    "CurveBranch",
    "BifurcationCurve",
    "SpecialPoints",
    "DomainMask",
    "z_functions",
    "p_functions",
    "special_points",
    "classify_region",
    "multiple_root_domain",
    "bifurcation_curves",
]

_SNAP_TOL = 1e-12
_Z_CLAMP_TOL = 1e-9
_BISECT_ITERS = 80


class RegionLabel(enum.Enum):
    """Classification of a (delta, nu) point at fixed kappa."""

    OMEGA_PLUS = "omega_plus"
    OMEGA_MINUS = "omega_minus"
    OMEGA_ZERO = "omega_zero"
    OMEGA_STAR = "omega_star"
    BOUNDARY = "boundary"


class CurveBranch(enum.Enum):
    S_MINUS = "s_minus"
    S_ZERO = "s_zero"
    S_PLUS = "s_plus"


@dataclass(frozen=True)
class BifurcationCurve:
    """One connected polyline of a bifurcation curve in the (delta, nu) plane."""

    branch: CurveBranch
    points: tuple[tuple[float, float], ...]
    kappa: float


@dataclass(frozen=True)
class SpecialPoints:
    """Interval endpoints organizing the curves at a fixed kappa.

    ``n`` holds the zeros of the branch function p1, ``m`` the parameters
    where a branch function reaches 1, and ``delta_star`` the negative delta
    at which the two branch functions merge (absent for large kappa).
    """

    n: tuple[float, ...]
    m: tuple[float, ...]
    delta_star: float | None


@dataclass(frozen=True)
class DomainMask:
    """Boolean membership mask for the multiple-root domain on a (delta, kappa) grid.

    ``mask[i, j]`` corresponds to ``(delta[j], kappa[i])``.
    """

    delta: np.ndarray
    kappa: np.ndarray
    mask: np.ndarray


def _snap_kappa(kappa: float) -> float:
    for pivot in (0.75, 1.0):
        if abs(kappa - pivot) < _SNAP_TOL:
            return pivot
    return kappa


def _discriminant(delta: float, kappa: float) -> float:
    return 4.0 * kappa * kappa + 12.0 * delta * delta - 3.0


def z_functions(delta: float, kappa: float) -> tuple[float | None, float | None]:
    """Candidate sines of a degenerate stationary phase.

    Returns ``(None, None)`` when the discriminant is negative; otherwise the
    two branch values, which are valid sines only if they lie in [-1, 1].
    """
    disc = _discriminant(delta, kappa)
    if disc < 0.0:
        return (None, None)
    root = math.sqrt(disc)
    return ((4.0 * kappa - root) / 3.0, (4.0 * kappa + root) / 3.0)


def _g(z: float, kappa: float) -> float:
    return kappa * (2.0 * z * z - 1.0) - z * z * z


def p_functions(delta: float, kappa: float) -> tuple[float | None, float | None]:
    """Branch functions whose value equals sin(nu) along a bifurcation curve.

    Each entry is None when the matching z-branch is undefined or falls
    outside [-1, 1].  delta = 0 is a genuine singularity of the closed form.
    """
    if delta == 0.0:
        raise SingularParameterError("branch functions are singular at delta = 0")
    z1, z2 = z_functions(delta, kappa)
    out: list[float | None] = []
    for z in (z1, z2):
        if z is None or abs(z) > 1.0 + _Z_CLAMP_TOL:
            out.append(None)
            continue
        z = min(1.0, max(-1.0, z))
        out.append(_g(z, kappa) / delta)
    return (out[0], out[1])


def _m1_large(kappa: float) -> float:
    return -(math.sqrt(2.0) * kappa + math.sqrt(2.0 * kappa * kappa - 1.0)) / math.sqrt(8.0)


def _n_roots(kappa: float) -> tuple[float, ...]:
    """All zeros of p1(., kappa), via the cubic satisfied by the sine value."""
    coeffs = [1.0, -2.0 * kappa, 0.0, kappa]
    roots: list[float] = []
    for z in np.roots(coeffs):
        if abs(z.imag) > 1e-9:
            continue
        zr = float(z.real)
        if abs(zr) > 1.0 + _Z_CLAMP_TOL:
            continue
        zr = min(1.0, max(-1.0, zr))
        # z sits on the lower branch only if 4*kappa - 3*z is the (nonnegative)
        # square root of the discriminant.
        s = 4.0 * kappa - 3.0 * zr
        if s < -1e-12:
            continue
        dsq = (s * s - 4.0 * kappa * kappa + 3.0) / 12.0
        if dsq < -1e-15:
            continue
        if dsq < 1e-24:
            roots.append(0.0)
        else:
            d = math.sqrt(max(dsq, 0.0))
            roots.extend((-d, d))
    return tuple(sorted(roots))


@lru_cache(maxsize=128)
def special_points(kappa: float) -> SpecialPoints:
    """Interval endpoints for the bifurcation curves at the given kappa."""
    if not (isinstance(kappa, (int, float)) and math.isfinite(kappa) and kappa > 0):
        raise DomainError(f"kappa must be positive and finite, got {kappa!r}")
    kappa = _snap_kappa(float(kappa))
    n = _n_roots(kappa)
    if kappa < 0.75:
        m = (kappa - 1.0, kappa + 1.0)
    elif kappa == 1.0:
        m = (_m1_large(kappa), kappa + 1.0)
    else:
        m = (_m1_large(kappa), kappa - 1.0, kappa + 1.0)
    if kappa < math.sqrt(3.0) / 2.0:
        delta_star = -math.sqrt((3.0 - 4.0 * kappa * kappa) / 12.0)
    else:
        delta_star = None
    return SpecialPoints(n=n, m=m, delta_star=delta_star)


def _branch_value(delta: float, kappa: float, j: int) -> float | None:
    return p_functions(delta, kappa)[j]


def _branch_or_raise(delta: float, kappa: float, j: int) -> float:
    value = _branch_value(delta, kappa, j)
    if value is None:
        raise NumericalError(
            f"branch {j + 1} undefined at delta={delta!r}, kappa={kappa!r}"
        )
    return value


def _nudge(lo: float, hi: float) -> tuple[float, float]:
    eps = 1e-12 * max(1.0, abs(lo), abs(hi))
    return lo + eps, hi - eps


def _invert_branch(q: float, lo: float, hi: float, kappa: float, j: int) -> float:
    """Solve p_j(delta, kappa) = q for delta on [lo, hi] by bisection.

    The branch functions are monotone on every interval the partition uses.
    """
    a, b = _nudge(lo, hi)
    fa = _branch_or_raise(a, kappa, j) - q
    fb = _branch_or_raise(b, kappa, j) - q
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        # q is (numerically) outside the branch range; clamp to the nearer end.
        return a if abs(fa) < abs(fb) else b
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (a + b)
        fm = _branch_or_raise(mid, kappa, j) - q
        if fm == 0.0:
            return mid
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


@lru_cache(maxsize=4096)
def _curve_sections(kappa: float, nu: float) -> tuple[float, float]:
    """Delta positions of the leftmost and rightmost curves at the given nu."""
    kappa = _snap_kappa(kappa)
    q = min(1.0, max(0.0, math.sin(nu)))
    pts = special_points(kappa)
    # Rightmost curve: branch 1 on [n[-1], kappa + 1].
    d_plus = _invert_branch(q, pts.n[-1], kappa + 1.0, kappa, 0)
    # Leftmost curve.
    if kappa < 0.75:
        d_star = pts.delta_star
        assert d_star is not None
        q_star = _branch_or_raise(d_star - 1e-9, kappa, 0)
        if q <= q_star:
            d_minus = _invert_branch(q, pts.n[0], d_star, kappa, 0)
        else:
            d_minus = _invert_branch(q, pts.m[0], d_star, kappa, 1)
    else:
        d_minus = _invert_branch(q, pts.n[0], pts.m[0], kappa, 0)
    return (d_minus, d_plus)


def classify_region(
    params: PhaseParams, roots: list[PhaseRoot] | None = None
) -> RegionLabel:
    """Locate a (delta, nu) point within the partition at its kappa.

    ``roots`` may be supplied to reuse an existing root computation; it must
    come from ``find_roots`` on the same parameters.
    """
    if roots is None:
        roots = find_roots(params)
    if any(r.multiplicity >= 2 for r in roots):
        return RegionLabel.BOUNDARY
    count = len(roots)
    if count == 0:
        return RegionLabel.OMEGA_STAR
    if count == 2:
        return RegionLabel.OMEGA_ZERO
    if count == 4:
        d_minus, d_plus = _curve_sections(_snap_kappa(params.kappa), params.nu)
        if params.delta - d_plus > d_minus - params.delta:
            return RegionLabel.OMEGA_PLUS
        return RegionLabel.OMEGA_MINUS
    raise NumericalError(
        f"unexpected simple-root count {count} at delta={params.delta!r}, "
        f"nu={params.nu!r}, kappa={params.kappa!r}"
    )


def _in_domain(delta: float, kappa: float) -> bool:
    if kappa * kappa + 3.0 * delta * delta < 0.75:
        return False
    if delta == 0.0:
        # The closed forms are singular here; a degenerate stationary phase
        # at delta = 0 requires the plain sine equation to have a tangency.
        return abs(kappa - 1.0) <= 1e-9
    p1, p2 = p_functions(delta, kappa)
    for p in (p1, p2):
        if p is not None and 0.0 <= p <= 1.0:
            return True
    return False


def multiple_root_domain(
    delta_range: tuple[float, float],
    kappa_range: tuple[float, float],
    resolution: tuple[int, int],
) -> DomainMask:
    """Membership mask of the multiple-root domain over a (delta, kappa) rectangle.

    ``resolution`` gives the number of samples along (delta, kappa); both must
    be at least 2.  Row i of the mask corresponds to kappa[i], column j to
    delta[j].
    """
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise DomainError(f"resolution must be at least 2 per axis, got {resolution}")
    d_lo, d_hi = delta_range
    k_lo, k_hi = kappa_range
    if not (d_lo < d_hi and k_lo < k_hi):
        raise DomainError("ranges must be nonempty intervals")
    delta = np.linspace(d_lo, d_hi, nx)
    kappa = np.linspace(k_lo, k_hi, ny)
    mask = np.zeros((ny, nx), dtype=bool)
    for i, k in enumerate(kappa):
        for j, d in enumerate(delta):
            mask[i, j] = _in_domain(float(d), float(k))
    return DomainMask(delta=delta, kappa=kappa, mask=mask)


def _arc_points(
    deltas: np.ndarray, kappa: float, j: int, upper: bool
) -> list[tuple[float, float]]:
    """Sample one arcsin preimage of a branch over the given delta values."""
    pts: list[tuple[float, float]] = []
    for d in deltas:
        if d == 0.0:
            continue
        p = _branch_value(float(d), kappa, j)
        if p is None:
            continue
        p = min(1.0, max(0.0, p))
        nu = math.pi - math.asin(p) if upper else math.asin(p)
        if 0.0 <= nu < math.pi:
            pts.append((float(d), nu))
    return pts


def _loop(
    intervals: list[tuple[float, float, int]], kappa: float, resolution: int
) -> tuple[tuple[float, float], ...]:
    """Trace lower arcs along the intervals, then upper arcs back.

    ``intervals`` lists (start, stop, branch) pieces; consecutive pieces
    share endpoints so the result is one polyline.  The final stop must be
    a parameter where the branch function reaches 1: there both arcs pass
    through nu = pi/2, so the forward and backward passes join without a
    jump.  The loose ends of the polyline sit at the opposite end, where
    the arcs approach nu = 0 and nu = pi separately.
    """
    pts: list[tuple[float, float]] = []
    for lo, hi, j in intervals:
        grid = np.linspace(lo, hi, resolution)
        pts.extend(_arc_points(grid, kappa, j, upper=False))
    for lo, hi, j in reversed(intervals):
        grid = np.linspace(hi, lo, resolution)
        pts.extend(_arc_points(grid, kappa, j, upper=True))
    return tuple(pts)


def bifurcation_curves(
    kappa: float, delta_resolution: int = 512
) -> list[BifurcationCurve]:
    """All bifurcation curves at the given kappa, one entry per connected piece.

    Each polyline covers both arcsin preimages of its branch function, traced
    as a single loop.  The vertical segment at delta = 0 (present only at
    kappa = 1) is emitted as its own piece.
    """
    if not (math.isfinite(kappa) and kappa > 0):
        raise DomainError(f"kappa must be positive and finite, got {kappa!r}")
    if delta_resolution < 2:
        raise DomainError("delta_resolution must be at least 2")
    kappa = _snap_kappa(float(kappa))
    pts = special_points(kappa)
    res = delta_resolution
    curves: list[BifurcationCurve] = []

    if kappa < 0.75:
        n1, n2 = pts.n
        m1, m2 = pts.m
        d_star = pts.delta_star
        assert d_star is not None
        s_minus = _loop([(n1, d_star, 0), (d_star, m1, 1)], kappa, res)
        curves.append(BifurcationCurve(CurveBranch.S_MINUS, s_minus, kappa))
    elif kappa < 1.0:
        n1, n2 = pts.n
        m1, m3, m2 = pts.m
        curves.append(
            BifurcationCurve(CurveBranch.S_MINUS, _loop([(n1, m1, 0)], kappa, res), kappa)
        )
        curves.append(
            BifurcationCurve(CurveBranch.S_ZERO, _loop([(m1, m3, 0)], kappa, res), kappa)
        )
    elif kappa == 1.0:
        n1, n3, n2 = pts.n
        m1, m2 = pts.m
        curves.append(
            BifurcationCurve(CurveBranch.S_MINUS, _loop([(n1, m1, 0)], kappa, res), kappa)
        )
        curves.append(
            BifurcationCurve(CurveBranch.S_ZERO, _loop([(n3, m1, 0)], kappa, res), kappa)
        )
        segment = tuple(
            (0.0, float(nu)) for nu in np.linspace(0.0, math.pi, res, endpoint=False)
        )
        curves.append(BifurcationCurve(CurveBranch.S_ZERO, segment, kappa))
    else:
        n1, n3, n4, n2 = pts.n
        m1, m3, m2 = pts.m
        curves.append(
            BifurcationCurve(CurveBranch.S_MINUS, _loop([(n1, m1, 0)], kappa, res), kappa)
        )
        curves.append(
            BifurcationCurve(CurveBranch.S_ZERO, _loop([(n3, m1, 0)], kappa, res), kappa)
        )
        curves.append(
            BifurcationCurve(CurveBranch.S_ZERO, _loop([(n4, m3, 0)], kappa, res), kappa)
        )

    n2 = pts.n[-1]
    m2 = pts.m[-1]
    curves.append(
        BifurcationCurve(CurveBranch.S_PLUS, _loop([(n2, m2, 0)], kappa, res), kappa)
    )
    return curves
