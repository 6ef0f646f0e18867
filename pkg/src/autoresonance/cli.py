"""Command-line front end: sweeps, verdicts, trajectories, figure datasets.

Every analysis operation of the package is exposed as a subcommand. Tabular
results are written as CSV files whose ``#``-prefixed header records the tool
version and the full parameter set, so each file can be regenerated from its
own header; scalar verdicts (roots, region labels, stability, designs) are
emitted as JSON. All outputs are deterministic: repeating an invocation
produces byte-identical files.

The output directory defaults to the ``AUTORESONANCE_OUTDIR`` environment
variable (falling back to the working directory). Any subcommand accepts
``--config FILE`` holding flat ``key=value`` lines; each line expands to the
corresponding ``--key value ...`` option pair, with values split on
whitespace, and options given after ``--config`` override the file. Angles
are radians throughout.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from scipy.optimize import brentq

from . import __version__
from .asymptotics import SeriesSolution, build_series, evaluate_series, residual_norm
from .designer import DesignSpec, design_excitation
from .errors import ContractError, DomainError, NumericalError, SeriesExistenceError
from .params import TWO_PI, ModelParams, PhaseParams
from .partition import (
    bifurcation_curves,
    classify_region,
    multiple_root_domain,
    p_functions,
    special_points,
)
from .phase_equation import PhaseRoot, eval_P, find_roots
from .simulator import (
    OscillatorParams,
    basin_sample,
    detect_capture,
    integrate,
    simulate_full_oscillator,
)
from .stability import classify_stability, linearization_exponents, lyapunov_frame

__all__ = ["main", "run"]

#: Environment variable naming the default output directory.
OUTDIR_ENV = "AUTORESONANCE_OUTDIR"

_FIGURE_NAMES = ("fig1", "fig2", "fig3", "fig4", "fig33", "fig34", "fig35", "fig6")

#: Damping levels of the four-panel parameter-plane figures.
_PANEL_KAPPAS = (0.4, 0.9, 1.0, 1.6)

#: (kappa, nu) pairs of the three-panel root-sweep figures.
_SWEEP_PANELS = ((0.4, 0.5 * math.pi), (0.9, 0.5 * math.pi), (1.6, 0.25 * math.pi))

# The three degenerate-root panels: damping, excitation phase, the location
# (delta, sigma) of the distinguished multiple root and the derivative order
# whose sign field is emitted as the panel grid. The first and third panels
# place a triple root at sin(sigma) = 4*kappa/3 on the locus
# kappa^2 + 3*delta^2 = 3/4; the middle panel is the unique quadruple point.
_DEGENERATE_PANELS = (
    (
        "fig35a",
        0.5,
        2.0 * math.asin(2.0 / 3.0) - math.asin(1.0 / math.sqrt(6.0)),
        (-1.0 / math.sqrt(6.0), math.pi - math.asin(2.0 / 3.0)),
        3,
    ),
    ("fig35b", 0.75, 0.5 * math.pi, (-0.25, 0.5 * math.pi), 4),
    (
        "fig35c",
        math.sqrt(0.03),
        math.pi
        + math.asin(1.0 / (6.0 * math.sqrt(2.0)))
        - 2.0 * math.asin(4.0 * math.sqrt(0.03) / 3.0),
        (-math.sqrt(0.24), math.asin(4.0 * math.sqrt(0.03) / 3.0)),
        1,
    ),
)

# Trajectory triples of the capture-evolution figure: tag, (delta, kappa,
# nu), and the designed limiting phase the run locks onto.
_TRAJECTORY_TRIPLES = (
    ("black", (-2.0, 1.0, 5.0 * math.pi / 6.0), math.pi),
    ("gray", (-2.0 / math.sqrt(3.0), 1.0, 2.0 * math.pi / 3.0), math.pi),
    ("blue", (-1.5, 0.25, math.pi / 6.0), 0.5 * math.pi),
)


class _UsageError(Exception):
    """Raised in place of argparse's SystemExit so run() can return 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _config_tokens(path: str) -> list[str]:
    """Expand a flat key=value config file into option tokens."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read config file {path}: {exc}") from None
    tokens: list[str] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise _UsageError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        tokens.append("--" + key.strip().replace("_", "-"))
        tokens.extend(value.split())
    return tokens


def _expand_config(argv: Sequence[str]) -> list[str]:
    out: list[str] = []
    queue = list(argv)
    while queue:
        token = queue.pop(0)
        if token == "--config":
            if not queue:
                raise _UsageError("--config expects a file path")
            out.extend(_config_tokens(queue.pop(0)))
        elif token.startswith("--config="):
            out.extend(_config_tokens(token.split("=", 1)[1]))
        else:
            out.append(token)
    return out


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_format_value(item) for item in value)
    return str(value)


def _outdir(args: argparse.Namespace) -> Path:
    directory = Path(args.outdir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_csv(
    path: Path,
    command: str,
    header: dict[str, Any],
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    lines = [f"# tool = autoresonance {__version__}", f"# command = {command}"]
    for key, value in header.items():
        lines.append(f"# {key} = {_format_value(value)}")
    lines.append("# columns = " + ",".join(columns))
    for row in rows:
        lines.append(",".join(_format_value(item) for item in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _emit_json(args: argparse.Namespace, document: dict[str, Any]) -> None:
    document = {"tool": f"autoresonance {__version__}", **document}
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        (_outdir(args) / args.out).write_text(text)
        print(_outdir(args) / args.out)
    else:
        sys.stdout.write(text)


def _phase_record(params: PhaseParams) -> dict[str, float]:
    return {"delta": params.delta, "nu": params.nu, "kappa": params.kappa}


def _model_record(params: ModelParams) -> dict[str, Any]:
    return {
        "lam": params.lam,
        "nu": params.nu,
        "alpha_tail": list(params.alpha_tail),
        "beta_tail": list(params.beta_tail),
        "gamma_tail": list(params.gamma_tail),
    }


def _root_record(root: PhaseRoot) -> dict[str, Any]:
    return {
        "sigma": root.sigma,
        "multiplicity": root.multiplicity,
        "derivs": list(root.derivs),
    }


def _model_params(args: argparse.Namespace) -> ModelParams:
    return ModelParams(
        lam=args.lam,
        nu=args.nu,
        alpha_tail=tuple(args.alpha),
        beta_tail=tuple(args.beta),
        gamma_tail=tuple(args.gamma),
    )


def _circular_gap(a: float, b: float) -> float:
    gap = abs(a - b) % TWO_PI
    return min(gap, TWO_PI - gap)


def _root_near(params: PhaseParams, sigma: float) -> PhaseRoot:
    roots = find_roots(params)
    if not roots:
        raise DomainError(
            f"no admissible limiting phase at delta={params.delta!r}, "
            f"nu={params.nu!r}, kappa={params.kappa!r}"
        )
    return min(roots, key=lambda r: _circular_gap(r.sigma, sigma))


def _series_for(args: argparse.Namespace) -> tuple[ModelParams, PhaseRoot, SeriesSolution]:
    params = _model_params(args)
    root = _root_near(params.phase_params(), args.sigma)
    series = build_series(params, root, order=args.order, sign=args.sign)
    return params, root, series


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_roots(args: argparse.Namespace) -> int:
    params = PhaseParams(delta=args.delta, nu=args.nu, kappa=args.kappa)
    roots = find_roots(params)
    _emit_json(
        args,
        {
            "command": "roots",
            "params": _phase_record(params),
            "roots": [_root_record(r) for r in roots],
        },
    )
    return 0


def _cmd_region(args: argparse.Namespace) -> int:
    params = PhaseParams(delta=args.delta, nu=args.nu, kappa=args.kappa)
    roots = find_roots(params)
    label = classify_region(params, roots)
    _emit_json(
        args,
        {
            "command": "region",
            "params": _phase_record(params),
            "label": label.value,
            "root_count": len(roots),
        },
    )
    return 0


def _cmd_curves(args: argparse.Namespace) -> int:
    curves = bifurcation_curves(args.kappa, delta_resolution=args.resolution)
    pts = special_points(args.kappa)
    rows = [
        (curve.branch.value, piece, delta, nu)
        for piece, curve in enumerate(curves)
        for delta, nu in curve.points
    ]
    name = args.out or f"curves_kappa{_tag(args.kappa)}.csv"
    path = _write_csv(
        _outdir(args) / name,
        "curves",
        {
            "kappa": args.kappa,
            "resolution": args.resolution,
            "n_points": list(pts.n),
            "m_points": list(pts.m),
            "delta_star": pts.delta_star if pts.delta_star is not None else "none",
        },
        ("branch", "piece", "delta", "nu"),
        rows,
    )
    print(path)
    return 0


def _cmd_domain(args: argparse.Namespace) -> int:
    mask = multiple_root_domain(
        tuple(args.delta_range), tuple(args.kappa_range), tuple(args.resolution)
    )
    rows = [
        (float(d), float(k), int(mask.mask[i, j]))
        for i, k in enumerate(mask.kappa)
        for j, d in enumerate(mask.delta)
    ]
    name = args.out or "domain.csv"
    path = _write_csv(
        _outdir(args) / name,
        "domain",
        {
            "delta_range": list(args.delta_range),
            "kappa_range": list(args.kappa_range),
            "resolution": list(args.resolution),
        },
        ("delta", "kappa", "inside"),
        rows,
    )
    print(path)
    return 0


def _cmd_series(args: argparse.Namespace) -> int:
    params, root, series = _series_for(args)
    _emit_json(
        args,
        {
            "command": "series",
            "params": _model_record(params),
            "root": _root_record(root),
            "series": series.to_record(),
        },
    )
    return 0


def _cmd_residual(args: argparse.Namespace) -> int:
    params, root, series = _series_for(args)
    lo, hi = args.tau_range
    if not (0.0 < lo < hi):
        raise DomainError(f"tau range must satisfy 0 < lo < hi, got {args.tau_range}")
    taus = [lo * (hi / lo) ** (i / (args.points - 1)) for i in range(args.points)]
    rows = []
    for tau in taus:
        r_amp, r_phase = residual_norm(series, params, tau)
        rows.append((tau, r_amp, r_phase))
    name = args.out or "residual.csv"
    path = _write_csv(
        _outdir(args) / name,
        "residual",
        {
            **_model_record(params),
            "sigma": series.sigma,
            "order": series.order,
            "sign": series.sign,
            "case": series.case.value,
            "tau_range": list(args.tau_range),
            "points": args.points,
        },
        ("tau", "amplitude_residual", "phase_residual"),
        rows,
    )
    print(path)
    return 0


def _cmd_stability(args: argparse.Namespace) -> int:
    params, root, series = _series_for(args)
    verdict = classify_stability(root, series, params)
    z_plus, z_minus = linearization_exponents(root, series, params, args.tau)
    document: dict[str, Any] = {
        "command": "stability",
        "params": _model_record(params),
        "root": _root_record(root),
        "verdict": verdict.to_record(),
        "exponents": {
            "tau": args.tau,
            "z_plus": [z_plus.real, z_plus.imag],
            "z_minus": [z_minus.real, z_minus.imag],
        },
    }
    gamma0 = params.tail_coeff("gamma", 0)
    if verdict.status.value != "unstable" and gamma0 > 0.0:
        document["frame"] = lyapunov_frame(root, series, params).to_record()
    else:
        document["frame"] = None
    _emit_json(args, document)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    params = _model_params(args)
    traj = integrate(
        params,
        (args.rho0, args.psi0),
        tuple(args.tau_span),
        rtol=args.rtol,
        atol=args.atol,
        mode=args.mode,
        n_samples=args.n_samples,
    )
    report = detect_capture(traj, lam=params.lam)
    name = args.out or "trajectory.csv"
    path = _write_csv(
        _outdir(args) / name,
        "simulate",
        {
            **_model_record(params),
            "rho0": args.rho0,
            "psi0": args.psi0,
            "tau_span": list(args.tau_span),
            "rtol": args.rtol,
            "atol": args.atol,
            "mode": args.mode,
            "n_samples": args.n_samples,
        },
        ("tau", "rho", "psi"),
        zip(traj.tau_samples.tolist(), traj.rho.tolist(), traj.psi.tolist()),
    )
    sys.stdout.write(
        json.dumps(
            {"file": str(path), "capture": report.to_record()},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return 0


def _cmd_oscillator(args: argparse.Namespace) -> int:
    if args.vartheta is not None:
        vartheta = args.vartheta
    else:
        # Chirp rate that makes the oscillator track the averaged system
        # with sweep rate lam (two-timing balance; see the decrease of the
        # drive frequency 2*vartheta per unit fast time).
        vartheta = args.epsilon**2 * args.lam / 32.0
    params = OscillatorParams(
        epsilon=args.epsilon,
        vartheta=vartheta,
        forcing_amp=args.forcing_amp,
        pump_amp=args.pump_amp,
        damping=args.damping,
        nu=args.nu,
    )
    run_record = simulate_full_oscillator(
        params,
        tuple(args.t_span),
        rtol=args.rtol,
        atol=args.atol,
        init=tuple(args.init),
        n_samples=args.n_samples,
    )
    name = args.out or "oscillator.csv"
    path = _write_csv(
        _outdir(args) / name,
        "oscillator",
        {
            "epsilon": params.epsilon,
            "vartheta": params.vartheta,
            "lam_matched": 32.0 * params.vartheta / params.epsilon**2,
            "forcing_amp": params.forcing_amp,
            "pump_amp": params.pump_amp,
            "damping": params.damping,
            "nu": params.nu,
            "t_span": list(args.t_span),
            "init": list(args.init),
            "rtol": args.rtol,
            "atol": args.atol,
            "n_samples": args.n_samples,
        },
        ("t", "x", "xdot"),
        zip(
            run_record.t_samples.tolist(),
            run_record.x.tolist(),
            run_record.xdot.tolist(),
        ),
    )
    print(path)
    return 0


def _cmd_basin(args: argparse.Namespace) -> int:
    params = _model_params(args)
    result = basin_sample(
        params,
        tuple(args.rho_range),
        tuple(args.psi_range),
        tuple(args.resolution),
        tuple(args.tau_span),
        seed=args.seed,
        jitter=args.jitter,
        rtol=args.rtol,
        atol=args.atol,
    )
    rows = [
        (float(rho), float(psi), int(result.mask[i, j]))
        for i, rho in enumerate(result.rho_values)
        for j, psi in enumerate(result.psi_values)
    ]
    name = args.out or "basin.csv"
    path = _write_csv(
        _outdir(args) / name,
        "basin",
        {
            **_model_record(params),
            "rho_range": list(args.rho_range),
            "psi_range": list(args.psi_range),
            "resolution": list(args.resolution),
            "tau_span": list(args.tau_span),
            "seed": args.seed,
            "jitter": args.jitter,
            "rtol": args.rtol,
            "atol": args.atol,
            "captured_fraction": result.fraction,
        },
        ("rho", "psi", "captured"),
        rows,
    )
    sys.stdout.write(
        json.dumps(
            {"file": str(path), "captured_fraction": result.fraction},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return 0


def _cmd_design(args: argparse.Namespace) -> int:
    result = design_excitation(
        DesignSpec(sigma_target=args.sigma, kappa=args.kappa, delta_choice=args.delta)
    )
    _emit_json(args, {"command": "design", **result.to_record()})
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    builders = {
        "fig1": _figure_branch_functions,
        "fig2": _figure_partition_curves,
        "fig3": _figure_root_sweeps,
        "fig4": _figure_domain,
        "fig33": _figure_slope_shaded_sweeps,
        "fig34": _figure_fold_sweeps,
        "fig35": _figure_degenerate_sweeps,
        "fig6": _figure_trajectories,
    }
    for path in builders[args.name](_outdir(args)):
        print(path)
    return 0


# ---------------------------------------------------------------------------
# figure dataset builders


def _tag(value: float) -> str:
    text = f"{value:g}"
    return text.replace(".", "p").replace("-", "m")


def _curve_crossings(kappa: float, nu: float) -> dict[str, list[float]]:
    """Delta values where the bifurcation curves pass the horizontal line nu.

    Crossing estimates come from linear interpolation of the traced
    polylines and are refined on the exact branch functions, so that the
    returned deltas carry multiple roots to solver precision.
    """
    crossings: dict[str, list[float]] = {}
    for curve in bifurcation_curves(kappa):
        found = crossings.setdefault(curve.branch.value, [])
        pts = curve.points
        for (d0, nu0), (d1, nu1) in zip(pts, pts[1:]):
            if not min(nu0, nu1) <= nu <= max(nu0, nu1):
                continue
            if nu0 == nu1:
                estimate = 0.5 * (d0 + d1)
            else:
                estimate = d0 + (nu - nu0) * (d1 - d0) / (nu1 - nu0)
            delta = _refine_crossing(estimate, kappa, nu)
            if delta is not None and all(abs(delta - seen) > 1e-4 for seen in found):
                found.append(delta)
        found.sort()
    return crossings


def _refine_crossing(estimate: float, kappa: float, nu: float) -> float | None:
    """Polish a polyline crossing onto the exact locus sin(nu) = p_j(delta).

    Returns None for spurious polyline crossings (interpolation across a
    sheet jump of the traced curve). A tangency, where the locus touches
    the nu line without a sign change, keeps the polyline estimate: the
    tracer anchors those vertices on the exact tangency point.
    """
    if abs(estimate) < 1e-9:
        return 0.0
    target = math.sin(nu)

    def gap(delta: float, j: int) -> float | None:
        branches = p_functions(delta, kappa)
        value = branches[j]
        return None if value is None else value - target

    for width in (0.02, 0.05, 0.1):
        lo, hi = estimate - width, estimate + width
        if lo < 0.0 < hi:
            (lo, hi) = (lo, -1e-12) if estimate < 0.0 else (1e-12, hi)
        best: tuple[float, int] | None = None
        for j in (0, 1):
            g_lo, g_hi = gap(lo, j), gap(hi, j)
            if g_lo is None or g_hi is None or g_lo * g_hi > 0.0:
                continue
            mid = gap(estimate, j)
            score = abs(mid) if mid is not None else math.inf
            if best is None or score < best[0]:
                best = (score, j)
        if best is not None:
            return float(
                brentq(lambda d: gap(d, best[1]), lo, hi, xtol=1e-13, rtol=1e-15)
            )
    residuals = [abs(g) for j in (0, 1) if (g := gap(estimate, j)) is not None]
    if residuals and min(residuals) < 1e-3:
        return estimate
    return None


def _sweep_range(crossings: dict[str, list[float]], fallback: float) -> tuple[float, float]:
    deltas = [d for values in crossings.values() for d in values]
    if not deltas:
        return (-fallback, fallback)
    return (min(deltas) - 0.8, max(deltas) + 0.8)


def _root_sweep_rows(
    kappa: float, nu: float, delta_range: tuple[float, float], n_delta: int
) -> list[tuple[float, float, int, float, float]]:
    rows = []
    lo, hi = delta_range
    for i in range(n_delta):
        delta = lo + (hi - lo) * i / (n_delta - 1)
        for root in find_roots(PhaseParams(delta=delta, nu=nu, kappa=kappa)):
            rows.append(
                (delta, root.sigma, root.multiplicity, root.derivs[1], root.derivs[2])
            )
    return rows


def _write_root_sweep(
    outdir: Path,
    stem: str,
    command: str,
    kappa: float,
    nu: float,
    n_delta: int = 601,
) -> tuple[Path, dict[str, list[float]], tuple[float, float]]:
    crossings = _curve_crossings(kappa, nu)
    delta_range = _sweep_range(crossings, fallback=2.5)
    rows = _root_sweep_rows(kappa, nu, delta_range, n_delta)
    header: dict[str, Any] = {
        "kappa": kappa,
        "nu": nu,
        "delta_range": list(delta_range),
        "n_delta": n_delta,
    }
    for branch, deltas in sorted(crossings.items()):
        header[f"{branch}_crossings"] = deltas
    path = _write_csv(
        outdir / f"{stem}.csv",
        command,
        header,
        ("delta", "sigma", "multiplicity", "p_prime", "p_second"),
        rows,
    )
    return path, crossings, delta_range


def _write_derivative_grid(
    outdir: Path,
    stem: str,
    command: str,
    kappa: float,
    nu: float,
    order: int,
    delta_range: tuple[float, float],
    n_delta: int = 161,
    n_sigma: int = 192,
) -> Path:
    lo, hi = delta_range
    rows = []
    for i in range(n_delta):
        delta = lo + (hi - lo) * i / (n_delta - 1)
        params = PhaseParams(delta=delta, nu=nu, kappa=kappa)
        for j in range(n_sigma):
            sigma = TWO_PI * j / n_sigma
            rows.append((delta, sigma, eval_P(sigma, params, order=order)))
    return _write_csv(
        outdir / f"{stem}.csv",
        command,
        {
            "kappa": kappa,
            "nu": nu,
            "derivative_order": order,
            "delta_range": list(delta_range),
            "n_delta": n_delta,
            "n_sigma": n_sigma,
        },
        ("delta", "sigma", "value"),
        rows,
    )


def _figure_branch_functions(outdir: Path) -> list[Path]:
    paths = []
    for kappa in _PANEL_KAPPAS:
        pts = special_points(kappa)
        anchors = list(pts.n) + list(pts.m)
        if pts.delta_star is not None:
            anchors.append(pts.delta_star)
        lo, hi = min(anchors) - 0.3, max(anchors) + 0.3
        rows = []
        for i in range(1201):
            delta = lo + (hi - lo) * i / 1200
            p1, p2 = p_functions(delta, kappa)
            rows.append(
                (
                    delta,
                    math.nan if p1 is None else p1,
                    math.nan if p2 is None else p2,
                )
            )
        paths.append(
            _write_csv(
                outdir / f"fig1_kappa{_tag(kappa)}.csv",
                "figure fig1",
                {"kappa": kappa, "delta_range": [lo, hi], "n_delta": 1201},
                ("delta", "p1", "p2"),
                rows,
            )
        )
    return paths


def _figure_partition_curves(outdir: Path) -> list[Path]:
    paths = []
    for kappa in _PANEL_KAPPAS:
        curves = bifurcation_curves(kappa)
        pts = special_points(kappa)
        rows = [
            (curve.branch.value, piece, delta, nu)
            for piece, curve in enumerate(curves)
            for delta, nu in curve.points
        ]
        paths.append(
            _write_csv(
                outdir / f"fig2_kappa{_tag(kappa)}_curves.csv",
                "figure fig2",
                {
                    "kappa": kappa,
                    "n_points": list(pts.n),
                    "m_points": list(pts.m),
                    "delta_star": pts.delta_star if pts.delta_star is not None else "none",
                },
                ("branch", "piece", "delta", "nu"),
                rows,
            )
        )
    return paths


def _figure_root_sweeps(outdir: Path) -> list[Path]:
    paths = []
    for kappa, nu in _SWEEP_PANELS:
        path, _, _ = _write_root_sweep(
            outdir, f"fig3_kappa{_tag(kappa)}", "figure fig3", kappa, nu
        )
        paths.append(path)
    return paths


def _figure_domain(outdir: Path) -> list[Path]:
    delta_range = (-2.75, 2.75)
    kappa_range = (0.05, 1.65)
    resolution = (221, 161)
    mask = multiple_root_domain(delta_range, kappa_range, resolution)
    rows = [
        (float(d), float(k), int(mask.mask[i, j]))
        for i, k in enumerate(mask.kappa)
        for j, d in enumerate(mask.delta)
    ]
    return [
        _write_csv(
            outdir / "fig4_domain.csv",
            "figure fig4",
            {
                "delta_range": list(delta_range),
                "kappa_range": list(kappa_range),
                "resolution": list(resolution),
            },
            ("delta", "kappa", "inside"),
            rows,
        )
    ]


def _figure_slope_shaded_sweeps(outdir: Path) -> list[Path]:
    paths = []
    for kappa, nu in _SWEEP_PANELS:
        stem = f"fig33_kappa{_tag(kappa)}"
        path, _, delta_range = _write_root_sweep(
            outdir, f"{stem}_roots", "figure fig33", kappa, nu
        )
        paths.append(path)
        paths.append(
            _write_derivative_grid(
                outdir, f"{stem}_slope_grid", "figure fig33", kappa, nu, 1, delta_range
            )
        )
    return paths


def _figure_fold_sweeps(outdir: Path) -> list[Path]:
    paths = []
    for kappa, nu in _SWEEP_PANELS:
        stem = f"fig34_kappa{_tag(kappa)}"
        path, crossings, delta_range = _write_root_sweep(
            outdir, f"{stem}_roots", "figure fig34", kappa, nu
        )
        paths.append(path)
        fold_rows = []
        for branch, deltas in sorted(crossings.items()):
            for delta in deltas:
                params = PhaseParams(delta=delta, nu=nu, kappa=kappa)
                for root in find_roots(params, tol_root=1e-6):
                    if root.multiplicity >= 2:
                        fold_rows.append(
                            (branch, delta, root.sigma, root.multiplicity)
                        )
        paths.append(
            _write_csv(
                outdir / f"{stem}_folds.csv",
                "figure fig34",
                {"kappa": kappa, "nu": nu},
                ("branch", "delta", "sigma", "multiplicity"),
                fold_rows,
            )
        )
        paths.append(
            _write_derivative_grid(
                outdir,
                f"{stem}_curvature_grid",
                "figure fig34",
                kappa,
                nu,
                2,
                delta_range,
            )
        )
    return paths


def _figure_degenerate_sweeps(outdir: Path) -> list[Path]:
    paths = []
    for stem, kappa, nu, (delta_pt, sigma_pt), grid_order in _DEGENERATE_PANELS:
        path, _, delta_range = _write_root_sweep(
            outdir, f"{stem}_roots", "figure fig35", kappa, nu
        )
        paths.append(path)
        point_rows = []
        for root in find_roots(PhaseParams(delta=delta_pt, nu=nu, kappa=kappa)):
            if root.multiplicity >= 3:
                point_rows.append((delta_pt, root.sigma, root.multiplicity))
        if not point_rows:
            raise NumericalError(
                f"{stem}: expected a degenerate root near delta={delta_pt!r}, "
                f"sigma={sigma_pt!r}"
            )
        paths.append(
            _write_csv(
                outdir / f"{stem}_points.csv",
                "figure fig35",
                {"kappa": kappa, "nu": nu},
                ("delta", "sigma", "multiplicity"),
                point_rows,
            )
        )
        paths.append(
            _write_derivative_grid(
                outdir,
                f"{stem}_derivative_grid",
                "figure fig35",
                kappa,
                nu,
                grid_order,
                delta_range,
            )
        )
    return paths


def _figure_trajectories(outdir: Path) -> list[Path]:
    paths = []
    tau_span = (20.0, 500.0)
    offset = (-0.3, 0.4)
    for tag, (delta, kappa, nu), sigma_design in _TRAJECTORY_TRIPLES:
        params = ModelParams(
            lam=1.0, nu=nu, alpha_tail=(1.0,), beta_tail=(delta,), gamma_tail=(kappa,)
        )
        root = _root_near(params.phase_params(), sigma_design)
        series = build_series(params, root, order=2)
        rho0, psi0 = evaluate_series(series, tau_span[0])
        traj = integrate(
            params,
            (rho0 + offset[0], psi0 + offset[1]),
            tau_span,
            rtol=1e-9,
            atol=1e-12,
            mode="cartesian",
            n_samples=2401,
        )
        paths.append(
            _write_csv(
                outdir / f"fig6_{tag}.csv",
                "figure fig6",
                {
                    **_model_record(params),
                    "sigma_design": sigma_design,
                    "rho0": rho0 + offset[0],
                    "psi0": psi0 + offset[1],
                    "tau_span": list(tau_span),
                    "rtol": 1e-9,
                    "atol": 1e-12,
                    "mode": "cartesian",
                    "n_samples": 2401,
                },
                ("tau", "rho", "psi"),
                zip(traj.tau_samples.tolist(), traj.rho.tolist(), traj.psi.tolist()),
            )
        )
    return paths


# ---------------------------------------------------------------------------
# parser assembly


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--outdir",
        default=os.environ.get(OUTDIR_ENV, "."),
        help="output directory (default: $%s or the working directory)" % OUTDIR_ENV,
    )
    parser.add_argument(
        "--out",
        default=None,
        help="output file name inside the output directory "
        "(JSON commands print to stdout when omitted)",
    )


def _add_phase_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--delta", type=float, required=True, help="pumping strength")
    parser.add_argument("--nu", type=float, required=True, help="excitation phase offset")
    parser.add_argument("--kappa", type=float, required=True, help="scaled damping")


def _add_model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lam", type=float, default=1.0, help="sweep-rate parameter")
    parser.add_argument("--nu", type=float, required=True, help="excitation phase offset")
    parser.add_argument(
        "--alpha", type=float, nargs="+", default=[1.0], metavar="COEFF",
        help="external drive tail coefficients",
    )
    parser.add_argument(
        "--beta", type=float, nargs="+", default=[0.0], metavar="COEFF",
        help="parametric drive tail coefficients",
    )
    parser.add_argument(
        "--gamma", type=float, nargs="+", default=[0.0], metavar="COEFF",
        help="damping tail coefficients",
    )


def _add_series_options(parser: argparse.ArgumentParser) -> None:
    _add_model_options(parser)
    parser.add_argument(
        "--sigma", type=float, required=True,
        help="limiting phase selecting the nearest root",
    )
    parser.add_argument("--order", type=int, default=2, help="series truncation order")
    parser.add_argument(
        "--sign", type=int, default=1, choices=(1, -1),
        help="branch selector for two-branch cases",
    )


def _add_integration_options(parser: argparse.ArgumentParser, n_samples: int) -> None:
    parser.add_argument("--rtol", type=float, default=1e-8)
    parser.add_argument("--atol", type=float, default=1e-10)
    parser.add_argument("--n-samples", type=int, default=n_samples)


def _build_parser() -> _Parser:
    parser = _Parser(prog="autoresonance", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"autoresonance {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("roots", help="roots of the phase equation with multiplicities")
    _add_common(p)
    _add_phase_options(p)
    p.set_defaults(handler=_cmd_roots)

    p = sub.add_parser("region", help="partition label of a (delta, nu) point")
    _add_common(p)
    _add_phase_options(p)
    p.set_defaults(handler=_cmd_region)

    p = sub.add_parser("curves", help="traced bifurcation curves at fixed kappa")
    _add_common(p)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--resolution", type=int, default=512)
    p.set_defaults(handler=_cmd_curves)

    p = sub.add_parser("domain", help="multiple-root existence mask over (delta, kappa)")
    _add_common(p)
    p.add_argument("--delta-range", type=float, nargs=2, default=[-2.75, 2.75])
    p.add_argument("--kappa-range", type=float, nargs=2, default=[0.05, 1.65])
    p.add_argument("--resolution", type=int, nargs=2, default=[221, 161])
    p.set_defaults(handler=_cmd_domain)

    p = sub.add_parser("series", help="asymptotic series attached to a root")
    _add_common(p)
    _add_series_options(p)
    p.set_defaults(handler=_cmd_series)

    p = sub.add_parser("residual", help="normalized series residuals on a tau grid")
    _add_common(p)
    _add_series_options(p)
    p.add_argument("--tau-range", type=float, nargs=2, default=[1e2, 1e6])
    p.add_argument("--points", type=int, default=25)
    p.set_defaults(handler=_cmd_residual)

    p = sub.add_parser("stability", help="stability verdict for a locked branch")
    _add_common(p)
    _add_series_options(p)
    p.add_argument(
        "--tau", type=float, default=1e6,
        help="time at which the linearization exponents are sampled",
    )
    p.set_defaults(handler=_cmd_stability)

    p = sub.add_parser("simulate", help="integrate the averaged system")
    _add_common(p)
    _add_model_options(p)
    p.add_argument("--rho0", type=float, required=True)
    p.add_argument("--psi0", type=float, required=True)
    p.add_argument("--tau-span", type=float, nargs=2, required=True)
    p.add_argument("--mode", choices=("polar", "cartesian"), default="polar")
    _add_integration_options(p, n_samples=2001)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("oscillator", help="integrate the driven oscillator")
    _add_common(p)
    p.add_argument("--epsilon", type=float, required=True)
    chirp = p.add_mutually_exclusive_group(required=True)
    chirp.add_argument("--vartheta", type=float, default=None, help="chirp rate")
    chirp.add_argument(
        "--lam", type=float, default=None,
        help="averaged sweep rate to match (sets the chirp rate)",
    )
    p.add_argument("--forcing-amp", type=float, default=1.0)
    p.add_argument("--pump-amp", type=float, default=0.0)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--t-span", type=float, nargs=2, required=True)
    p.add_argument("--init", type=float, nargs=2, default=[0.0, 0.0])
    _add_integration_options(p, n_samples=5001)
    p.set_defaults(handler=_cmd_oscillator)

    p = sub.add_parser("basin", help="capture mask over a grid of initial data")
    _add_common(p)
    _add_model_options(p)
    p.add_argument("--rho-range", type=float, nargs=2, required=True)
    p.add_argument("--psi-range", type=float, nargs=2, required=True)
    p.add_argument("--resolution", type=int, nargs=2, default=[16, 16])
    p.add_argument("--tau-span", type=float, nargs=2, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.set_defaults(handler=_cmd_basin)

    p = sub.add_parser("design", help="choose (delta, nu) for a prescribed phase")
    _add_common(p)
    p.add_argument("--sigma", type=float, required=True, help="prescribed limiting phase")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(handler=_cmd_design)

    p = sub.add_parser("figure", help="emit a named figure dataset")
    _add_common(p)
    p.add_argument("name", choices=_FIGURE_NAMES)
    p.set_defaults(handler=_cmd_figure)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse argv, dispatch, and map errors to exit codes (0, 1 or 2)."""
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, SeriesExistenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0


def main() -> int:
    return run()


if __name__ == "__main__":
    raise SystemExit(main())
