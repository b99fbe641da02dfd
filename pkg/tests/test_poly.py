"""Tests for the ball-indicator family on groups of polynomial growth."""

import math

import pytest

from hilbert_compression.errors import UnsupportedModelError
from hilbert_compression.groups import FreeAbelianGroup, FreeGroup
from hilbert_compression.models import FreeGroupSpec
from hilbert_compression.poly import (
    empirical_threshold,
    k_bound_holds,
    k_bound_sweep,
    left_invariance_violations,
    poly_family,
    verify_poly_lemma,
)


@pytest.fixture
def family_z(z1: FreeAbelianGroup):
    return poly_family(z1, 4, 0.05)


class TestPolyFamily:
    """Tests for g_n and its inner products."""

    def test_k_and_ball(self, family_z) -> None:
        """k(4) = 39 on ℤ, so B_k has 79 elements."""
        assert family_z.k == 39
        assert len(family_z.ball_k) == 79
        assert family_z.measured_support_radius == 39

    def test_unit_norm(self, family_z) -> None:
        """Indicator vectors have norm 1."""
        assert math.isclose(family_z.vector((7,)).norm, 1.0)

    def test_inner_is_overlap_fraction(self, family_z) -> None:
        """⟨g(x), g(y)⟩ = (79 − |x − y|)/79 on ℤ."""
        assert math.isclose(family_z.inner((0,), (3,)), 76 / 79)
        assert math.isclose(family_z.inner((5,), (5,)), 1.0)

    def test_explicit_inner_agrees(self, family_z) -> None:
        """Materialized supports give the same inner product."""
        assert math.isclose(family_z.explicit_inner((2,), (-4,)), family_z.inner((2,), (-4,)))

    def test_l1_ratio(self, family_z) -> None:
        """‖χ_x − χ_y‖₁/‖χ‖₁ = 2|x − y|/79."""
        assert math.isclose(family_z.l1_ratio((0,), (2,)), 4 / 79)

    def test_symmetric_difference(self, family_z) -> None:
        """|B_k △ (3 + B_k)| = 6 on ℤ."""
        assert family_z.symmetric_difference((3,)) == 6
        assert family_z.symmetric_difference((0,)) == 0
        assert family_z.symmetric_difference((-100,)) == 158

    def test_support_containment_fails_at_small_n(self, family_z) -> None:
        """k(4) = 39 exceeds 4^{1.75}."""
        assert not family_z.support_contained

    def test_generic_overlap_path(self) -> None:
        """The rank-one free group goes through group multiplication and matches ℤ."""
        free_z = FreeGroup(FreeGroupSpec(rank=1))
        family = poly_family(free_z, 4, 0.05)
        assert family.k == 39
        assert family.overlap((1, 1)) == 77
        assert family.overlap(()) == 79
        assert family.symmetric_difference((1, 1)) == 4

    def test_rejects_free_group(self, f2: FreeGroup) -> None:
        """Exponential growth has no indicator family."""
        with pytest.raises(UnsupportedModelError):
            poly_family(f2, 4, 0.05)


class TestVerifyPolyLemma:
    """Tests for the near and chain conditions."""

    def test_z_at_four(self, z1: FreeAbelianGroup) -> None:
        """Near and chain conditions hold; support and the k bound do not."""
        report = verify_poly_lemma(z1, 4, 0.05)
        assert report.get("near").violations == 0
        assert report.get("near").pairs_checked == 5
        assert report.get("l1_chain").violations == 0
        assert report.get("chain_bound").violations == 0
        assert report.get("support").violations == 1
        assert report.measurements["k"] == 39
        assert report.measurements["k_bound_holds"] is False

    def test_reuses_family(self, family_z, z1: FreeAbelianGroup) -> None:
        """A prebuilt family is used as given."""
        report = verify_poly_lemma(z1, 4, 0.05, family=family_z)
        assert report.measurements["ball_k"] == 79

    def test_chain_checks_overlaps_against_the_ball(self, family_z, z1: FreeAbelianGroup) -> None:
        """A wrong overlap count shows up as an ℓ¹ chain violation."""
        family_z._overlaps[(1,)] = 70
        report = verify_poly_lemma(z1, 4, 0.05, family=family_z)
        assert report.get("l1_chain").violations == 1

    def test_z2_at_two(self, z2: FreeAbelianGroup) -> None:
        """ℤ² at n = 2 with k = 29."""
        report = verify_poly_lemma(z2, 2, 0.05)
        assert report.measurements["k"] == 29
        assert report.get("near").violations == 0

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [9, 16])
    def test_z2_larger_scales(self, z2: FreeAbelianGroup, n: int) -> None:
        """The near tolerance keeps holding at larger n."""
        report = verify_poly_lemma(z2, n, 0.05)
        assert report.get("near").violations == 0
        assert report.get("chain_bound").violations == 0
        assert report.get("l1_chain").violations == 0


class TestThresholds:
    """Tests for empirical thresholds and the k bound."""

    def test_threshold_from_tail(self) -> None:
        """The threshold is the start of the trailing run of passes."""
        assert empirical_threshold({4: False, 9: True, 16: True}) == 9
        assert empirical_threshold({4: True, 9: False, 16: True}) == 16

    def test_threshold_missing(self) -> None:
        """A failing largest n leaves no threshold."""
        assert empirical_threshold({4: True, 9: False}) is None
        assert empirical_threshold({}) is None

    def test_k_bound(self, family_z) -> None:
        """39 > 2·4^{1.7}."""
        assert not k_bound_holds(family_z.search)

    def test_k_bound_sweep_on_z(self, z1: FreeAbelianGroup) -> None:
        """k(n) stays above 2n^{1.7} on ℤ over small n, so no n̄ is reported."""
        searches, threshold = k_bound_sweep(z1, [1, 2, 4, 9, 16, 25, 64, 100], 0.05)
        assert [searches[n].k for n in (1, 2, 4)] == [5, 15, 39]
        assert threshold is None
        for search in searches.values():
            assert search.ratio <= search.bound
            assert not k_bound_holds(search)

    @pytest.mark.slow
    def test_k_bound_sweep_on_z_up_to_working_ball_limit(self, z1: FreeAbelianGroup) -> None:
        """Up to n = 1024 (working ball below 10⁶ elements) the bound still fails on ℤ."""
        searches, threshold = k_bound_sweep(z1, [256, 512, 1024], 0.05)
        assert searches[1024].k == 262176
        assert 2 * 1024 ** (1.5 + 4 * 0.05) < 262176
        assert threshold is None

    @pytest.mark.slow
    def test_k_bound_sweep_on_z2(self, z2: FreeAbelianGroup) -> None:
        """ℤ² never reaches the k bound at feasible n."""
        searches, threshold = k_bound_sweep(z2, [1, 2, 4, 9, 16], 0.05)
        assert searches[1].k == 10
        assert searches[2].k == 29
        assert threshold is None
        assert not any(k_bound_holds(search) for search in searches.values())


class TestLeftInvariance:
    """Sampled checks of left invariance."""

    def test_no_violations_on_z(self, family_z) -> None:
        """Translating both arguments keeps the inner product."""
        assert left_invariance_violations(family_z, samples=10, seed=3) == 0
