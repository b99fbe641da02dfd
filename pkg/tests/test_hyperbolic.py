"""Tests for geodesic rays and the ray-segment family on free groups."""

import math

import pytest
from pydantic import ValidationError

from hilbert_compression.errors import (
    DegenerateInputError,
    InvalidParameterError,
    UnsupportedModelError,
)
from hilbert_compression.groups import FreeAbelianGroup, FreeGroup
from hilbert_compression.hyperbolic import (
    boundary_prefix,
    equivariance_violations,
    fit_log_constants,
    hyp_family,
    midpoint_q,
    parse_boundary,
    ray_is_geodesic,
    ray_segment,
    verify_hyp_lemma,
)
from hilbert_compression.models import BoundaryDescriptor, HypParams, q_supremum

TOWARD_B = BoundaryDescriptor(period="b")


class TestBoundary:
    """Tests for boundary descriptors."""

    def test_parse_with_preperiod(self) -> None:
        """'s|b' is s·b^∞."""
        boundary = parse_boundary("s|b")
        assert boundary.preperiod == "s"
        assert boundary.period == "b"

    def test_parse_period_only(self) -> None:
        """A bare word is the period."""
        assert parse_boundary("bs") == BoundaryDescriptor(period="bs")

    def test_prefix(self, f2: FreeGroup) -> None:
        """Prefixes repeat the period after the preperiod."""
        assert boundary_prefix(f2, parse_boundary("s|bS"), 4) == (2, 1, -2, 1)

    def test_unreduced_boundary(self, f2: FreeGroup) -> None:
        """b·B^∞ cancels and is rejected."""
        with pytest.raises(InvalidParameterError):
            boundary_prefix(f2, parse_boundary("b|B"), 3)

    def test_requires_free_group(self, z2: FreeAbelianGroup) -> None:
        """Rays need a tree."""
        with pytest.raises(UnsupportedModelError):
            boundary_prefix(z2, TOWARD_B, 3)


class TestRaySegment:
    """Tests for geodesic ray segments."""

    def test_from_identity(self, f2: FreeGroup) -> None:
        """From 1 the ray is 1, b, bb, ..."""
        assert ray_segment(f2, (), TOWARD_B, 0, 3) == [(), (1,), (1, 1), (1, 1, 1)]

    def test_backtracks_off_the_ray(self, f2: FreeGroup) -> None:
        """From s the ray returns through 1 before following b."""
        assert ray_segment(f2, (2,), TOWARD_B, 0, 3) == [(2,), (), (1,), (1, 1)]

    def test_fractional_window(self, f2: FreeGroup) -> None:
        """Indices run over ⌈lo⌉..⌊hi⌋."""
        assert ray_segment(f2, (), TOWARD_B, 1.5, 3.5) == [(1, 1), (1, 1, 1)]

    def test_invalid_window(self, f2: FreeGroup) -> None:
        """lo must not exceed hi."""
        with pytest.raises(InvalidParameterError):
            ray_segment(f2, (), TOWARD_B, 3, 1)

    @pytest.mark.parametrize("start", [(), (2,), (-1, 2), (1, 1, -2)])
    def test_rays_are_geodesic(self, f2: FreeGroup, start: tuple) -> None:
        """Unit steps at exact distance, converging to the boundary point."""
        assert ray_is_geodesic(f2, start, TOWARD_B, 6)


class TestHypParams:
    """Tests for the decay slack q."""

    def test_default_q_is_midpoint(self) -> None:
        """q defaults to half the supremum."""
        params = HypParams(n=2, p=0.05)
        assert math.isclose(params.q, midpoint_q(0.05))
        assert math.isclose(q_supremum(0.05), 0.5 - 1.1 / 2.25)

    def test_q_too_large(self) -> None:
        """q at or above the supremum is rejected."""
        with pytest.raises(ValidationError):
            HypParams(n=2, p=0.05, q=0.2)


class TestHypFamily:
    """Tests for H(x, m) and g(x, m)."""

    @pytest.fixture
    def family(self, f2: FreeGroup):
        return hyp_family(f2, HypParams(n=2, p=0.05, boundary=TOWARD_B))

    def test_level_and_terms(self, family) -> None:
        """m = 2^{2.25} leaves k = 1, 2."""
        assert math.isclose(family.level, 2**2.25)
        assert family.terms == 2

    def test_counts(self, family) -> None:
        """|F(x,1)| = 5 and |F(x,2)| = 7 anywhere in the tree."""
        for x in [(), (2,), (-1, -2)]:
            assert len(family.f_indicator(x, 1)) == 5
            assert len(family.f_indicator(x, 2)) == 7
            assert sum(family.counts(x).values()) == 12
            assert family.l1_additive(x)

    def test_mass(self, family) -> None:
        """‖H‖₁ = 12·m^{−(3/2−q)} ≥ 1."""
        expected = 12 * family.level ** -(1.5 - family.params.q)
        assert math.isclose(family.h_l1(()), expected)
        assert math.isclose(family.h_l1((), exact=True), expected)
        assert family.h_l1(()) >= 1.0

    def test_g_is_unit(self, family) -> None:
        """g(x) has norm 1."""
        assert math.isclose(family.g_inner((2,), (2,)), 1.0)

    def test_g_inner_decreases_with_distance(self, family) -> None:
        """Neighbours overlap more than distant points."""
        near = family.g_inner((), (2,))
        far = family.g_inner((), (2, 2, 2))
        assert 0.0 <= far < near < 1.0

    def test_zero_vector(self, f2: FreeGroup) -> None:
        """Level 1 has no k < √m, so g is undefined."""
        family = hyp_family(f2, HypParams(n=2, p=0.05), level=1.0)
        assert family.terms == 0
        with pytest.raises(DegenerateInputError):
            family.g_vector(())

    def test_invalid_k(self, family) -> None:
        """k starts at 1."""
        with pytest.raises(InvalidParameterError):
            family.f_indicator((), 0)

    def test_equivariance(self, family) -> None:
        """Translation by the period fixes the boundary point."""
        assert equivariance_violations(family, samples=8, seed=1) == 0

    def test_equivariance_needs_periodic_boundary(self, f2: FreeGroup) -> None:
        """A preperiod breaks the shift symmetry."""
        family = hyp_family(f2, HypParams(n=2, p=0.05, boundary=parse_boundary("s|b")))
        with pytest.raises(InvalidParameterError):
            equivariance_violations(family, samples=1)


class TestVerifyHypLemma:
    """Tests for the exhaustive check on a working ball."""

    def test_f2_at_two(self, f2: FreeGroup) -> None:
        """Mass, difference and the g chain hold; the support reaches 2m."""
        report = verify_hyp_lemma(f2, 2, 0.05, work_radius=2)
        assert report.get("mass").violations == 0
        assert report.get("difference").violations == 0
        assert report.get("g_chain").violations == 0
        assert report.measurements["terms"] == 2
        assert report.measurements["support_radius_measured"] == 10

    def test_exact_arithmetic(self, f2: FreeGroup) -> None:
        """Exact and float sums agree on the mass."""
        exact = verify_hyp_lemma(f2, 2, 0.05, work_radius=1, arithmetic="exact")
        floating = verify_hyp_lemma(f2, 2, 0.05, work_radius=1)
        assert math.isclose(exact.measurements["mass_min"], floating.measurements["mass_min"])
        assert exact.measurements["arithmetic"] == "exact"

    def test_rejects_abelian(self, z2: FreeAbelianGroup) -> None:
        """Only free groups are supported."""
        with pytest.raises(UnsupportedModelError):
            verify_hyp_lemma(z2, 2, 0.05)


class TestFitLogConstants:
    """Tests for level ≈ C ln n + D."""

    def test_single_point(self) -> None:
        """One n only determines D."""
        assert fit_log_constants({4: 2.5}) == (0.0, 2.5)

    def test_exact_fit(self) -> None:
        """Exact data is recovered."""
        c, d = fit_log_constants({n: 3 * math.log(n) + 1 for n in (2, 4, 8, 16)})
        assert math.isclose(c, 3.0, rel_tol=1e-9)
        assert math.isclose(d, 1.0, rel_tol=1e-9)

    def test_empty(self) -> None:
        """Nothing to fit."""
        with pytest.raises(InvalidParameterError):
            fit_log_constants({})
