"""Tests for group models, spec literals and the BFS oracles."""

import pytest

from hilbert_compression.errors import InvalidParameterError, UnsupportedModelError
from hilbert_compression.groups import (
    DirectSumFiniteGroup,
    ExtensionModel,
    FreeAbelianGroup,
    FreeGroup,
    HeisenbergGroup,
    LamplighterRestrictedGroup,
    ProductGroup,
    axiom_violations,
    cayley_bfs,
    decode_element,
    encode_element,
    induced_quotient_length,
    lamplighter_bfs,
    make_extension,
    make_group,
    parse_group_spec,
)
from hilbert_compression.models import (
    DirectSumFiniteSpec,
    ExtensionSpec,
    FreeAbelianSpec,
    FreeGroupSpec,
    LamplighterSpec,
    PluginGroupSpec,
    canonical_spec,
)


class TestParseGroupSpec:
    """Tests for group literals."""

    def test_free_abelian(self) -> None:
        """Rank is read after the colon."""
        assert parse_group_spec("free_abelian:2") == FreeAbelianSpec(rank=2)

    def test_free_group_with_letters(self) -> None:
        """Optional letters follow the rank."""
        spec = parse_group_spec("free_group:2:ab")
        assert spec == FreeGroupSpec(rank=2, letters="ab")

    def test_direct_sum(self) -> None:
        """Orders are comma separated."""
        spec = parse_group_spec("direct_sum_finite:1,2,2,2")
        assert spec == DirectSumFiniteSpec(orders=[1, 2, 2, 2])

    def test_lamplighter_integer_lamps(self) -> None:
        """'inf' selects ℤ lamps."""
        assert parse_group_spec("lamplighter:inf") == LamplighterSpec(lamp_order=None)

    def test_plugin_params(self) -> None:
        """Plugin literals carry key=value parameters."""
        spec = parse_group_spec("plugin:baumslag:m=1,n=2")
        assert spec == PluginGroupSpec(name="baumslag", params={"m": "1", "n": "2"})

    def test_trivial_extension(self) -> None:
        """Quotient and kernel are separated by a semicolon."""
        spec = parse_group_spec("extension:trivial(free_abelian:1;direct_sum_finite:1,2,2)")
        assert isinstance(spec, ExtensionSpec)
        assert spec.quotient == FreeAbelianSpec(rank=1)
        assert spec.kernel == DirectSumFiniteSpec(orders=[1, 2, 2])

    def test_heisenberg_extension_shorthand(self) -> None:
        """extension:heisenberg expands to ℤ by ℤ²."""
        spec = parse_group_spec("extension:heisenberg")
        assert isinstance(spec, ExtensionSpec)
        assert spec.action == "heisenberg"
        assert spec.quotient == FreeAbelianSpec(rank=2)

    def test_json_literal(self) -> None:
        """JSON objects validate through the same union."""
        assert parse_group_spec('{"kind": "free_abelian", "rank": 3}') == FreeAbelianSpec(rank=3)

    def test_invalid_literal(self) -> None:
        """Bad literals raise with the diagnostic."""
        with pytest.raises(InvalidParameterError) as exc_info:
            parse_group_spec("direct_sum_finite:2,2")
        assert "Invalid group spec" in str(exc_info.value)

    def test_unknown_kind(self) -> None:
        """Unknown kinds are rejected."""
        with pytest.raises(InvalidParameterError):
            parse_group_spec("surface:2")

    def test_canonical_spec_is_stable(self) -> None:
        """Equal specs give equal canonical strings."""
        a = canonical_spec(parse_group_spec("free_abelian:2"))
        b = canonical_spec(parse_group_spec('{"rank": 2, "kind": "free_abelian"}'))
        assert a == b


class TestElementEncoding:
    """Tests for canonical element bytes."""

    def test_nested_tuple_decodes(self) -> None:
        """Nested tuples survive encoding."""
        x = ((-1, 5), (2, 1))
        assert decode_element(encode_element(x)) == x

    def test_distinct_elements_distinct_bytes(self) -> None:
        """Arity is part of the encoding."""
        assert encode_element((1, 0)) != encode_element(((1,), 0))

    def test_rejects_floats(self) -> None:
        """Only integer components are encodable."""
        with pytest.raises(TypeError):
            encode_element((1.5,))


class TestFreeAbelian:
    """Tests for ℤ^d."""

    def test_l1_length(self, z2: FreeAbelianGroup) -> None:
        """Word length over ±e_i is the ℓ¹ norm."""
        assert z2.length((3, -4)) == 7

    def test_distance(self, z2: FreeAbelianGroup) -> None:
        """d(x, y) = l(x⁻¹y)."""
        assert z2.distance((1, 1), (-1, 2)) == 3

    def test_parse_element(self, z2: FreeAbelianGroup) -> None:
        """Wrong arity is rejected."""
        assert z2.parse_element("(2,-1)") == (2, -1)
        with pytest.raises(InvalidParameterError):
            z2.parse_element("1,2,3")


class TestFreeGroup:
    """Tests for free groups."""

    def test_free_reduction(self, f2: FreeGroup) -> None:
        """A letter cancels against its inverse."""
        assert f2.multiply((1, 2), (-2, -1)) == ()
        assert f2.parse_element("bsSB") == ()

    def test_format_element(self, f2: FreeGroup) -> None:
        """Inverses print in upper case."""
        assert f2.format_element(f2.parse_element("bSb")) == "bSb"
        assert f2.format_element(()) == "1"

    def test_polynomial_growth_only_for_rank_one(self) -> None:
        """ℤ as a free group has polynomial growth, F₂ does not."""
        assert FreeGroup(FreeGroupSpec(rank=1)).polynomial_growth
        assert not FreeGroup(FreeGroupSpec(rank=2)).polynomial_growth

    def test_unknown_letter(self, f2: FreeGroup) -> None:
        """Letters outside the alphabet raise."""
        with pytest.raises(InvalidParameterError):
            f2.parse_element("bq")


class TestHeisenberg:
    """Tests for H₃."""

    def test_commutator_is_central(self, heisenberg: HeisenbergGroup) -> None:
        """[x, y] = (0, 0, 1) and has length 4."""
        commutator = heisenberg.parse_element("xyXY")
        assert commutator == (0, 0, 1)
        assert heisenberg.length(commutator) == 4

    def test_sphere_sizes(self, heisenberg: HeisenbergGroup) -> None:
        """Spheres of radius 0..3 have 1, 4, 12, 36 elements."""
        distances = cayley_bfs(heisenberg, 3)
        sizes = [sum(1 for d in distances.values() if d == r) for r in range(4)]
        assert sizes == [1, 4, 12, 36]

    def test_minimal_lifts(self, heisenberg: HeisenbergGroup) -> None:
        """(2, 3, c) has length 5 exactly for c between 0 and 6."""
        assert all(heisenberg.length((2, 3, c)) == 5 for c in range(7))
        assert heisenberg.length((2, 3, 7)) > 5
        assert heisenberg.length((2, 3, -1)) > 5


class TestDirectSumFinite:
    """Tests for the ultrametric direct sum."""

    def test_length_is_last_nonzero_index(self, direct_sum: DirectSumFiniteGroup) -> None:
        """l(g) is the index of the last nonzero coordinate."""
        assert direct_sum.length((0, 1, 0, 0, 0)) == 1
        assert direct_sum.length((0, 1, 0, 1, 0)) == 3
        assert direct_sum.length(direct_sum.identity) == 0

    def test_not_a_word_metric(self, direct_sum: DirectSumFiniteGroup) -> None:
        """The Cayley oracle refuses non-word metrics."""
        with pytest.raises(UnsupportedModelError):
            cayley_bfs(direct_sum, 2)

    def test_trivial_first_factor_required(self) -> None:
        """orders[0] must be 1."""
        with pytest.raises(InvalidParameterError):
            parse_group_spec("direct_sum_finite:2,2")


class TestLamplighter:
    """Tests for the restricted lamplighter subgroup."""

    def test_single_lamp(self, lamplighter: LamplighterRestrictedGroup) -> None:
        """Walk to position 1, toggle, walk back."""
        assert lamplighter.length(((1, 1),)) == 3

    def test_two_sided_support(self, lamplighter: LamplighterRestrictedGroup) -> None:
        """Lamps on both sides cost a round trip to each end."""
        assert lamplighter.length(((-1, 1), (1, 1))) == 6

    def test_multiply_cancels_lamps(self, lamplighter: LamplighterRestrictedGroup) -> None:
        """ℤ/2 lamps switch off when toggled twice."""
        x = ((0, 1), (2, 1))
        assert lamplighter.multiply(x, ((2, 1),)) == ((0, 1),)

    def test_matches_wreath_product_oracle(
        self, lamplighter: LamplighterRestrictedGroup
    ) -> None:
        """Closed-form length agrees with BFS for all supports in [-3, 3]."""
        distances = lamplighter_bfs(2, window=3)
        assert len(distances) == 2**7
        mismatches = [x for x, d in distances.items() if lamplighter.length(x) != d]
        assert mismatches == []

    @pytest.mark.slow
    def test_integer_lamps_match_oracle(self) -> None:
        """ℤ ≀ ℤ lengths agree with BFS for values up to 2 on [-3, 3]."""
        model = LamplighterRestrictedGroup(LamplighterSpec(lamp_order=None))
        distances = lamplighter_bfs(None, window=3, value_bound=2)
        mismatches = [x for x, d in distances.items() if model.length(x) != d]
        assert mismatches == []


class TestOracles:
    """Word-metric models against plain Cayley-graph BFS."""

    @pytest.mark.parametrize("literal", ["free_abelian:2", "free_group:2", "heisenberg"])
    def test_length_matches_bfs(self, literal: str) -> None:
        """l(x) equals graph distance on the radius-5 ball."""
        model = make_group(parse_group_spec(literal))
        distances = cayley_bfs(model, 5)
        assert all(model.length(x) == d for x, d in distances.items())

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "literal", ["free_abelian:1", "free_abelian:3", "free_group:2", "heisenberg"]
    )
    def test_length_matches_bfs_radius_eight(self, literal: str) -> None:
        """l(x) equals graph distance on the radius-8 ball."""
        model = make_group(parse_group_spec(literal))
        distances = cayley_bfs(model, 8)
        assert all(model.length(x) == d for x, d in distances.items())

    @pytest.mark.parametrize(
        "literal",
        [
            "free_abelian:3",
            "free_group:2",
            "heisenberg",
            "direct_sum_finite:1,2,3,2",
            "lamplighter:2",
            "lamplighter:inf",
        ],
    )
    def test_axioms_hold_on_samples(self, literal: str) -> None:
        """Group and length axioms have no sampled violations."""
        model = make_group(parse_group_spec(literal))
        counts = axiom_violations(model, samples=50, seed=7)
        assert set(counts.values()) == {0}


class TestExtensions:
    """Tests for extension models."""

    def test_heisenberg_section_picks_zero_lift(self) -> None:
        """The canonical tie-break selects c = 0."""
        ext = make_extension(parse_group_spec("extension:heisenberg"))
        assert ext.section((2, 3)) == (2, 3, 0)
        assert ext.section((-2, 3)) == (-2, 3, 0)

    def test_heisenberg_projection_to_kernel(self) -> None:
        """γ·σ(π(γ))⁻¹ is central."""
        ext = make_extension(parse_group_spec("extension:heisenberg"))
        assert ext.project_to_kernel((2, 3, 5)) == (5,)

    def test_induced_quotient_length(self) -> None:
        """The quotient length is the ℓ¹ length of (a, b)."""
        ext = make_extension(parse_group_spec("extension:heisenberg"))
        assert induced_quotient_length(ext, (2, -3, 17)) == 5

    def test_heisenberg_action_requires_matching_factors(self) -> None:
        """Other factors are rejected."""
        spec = ExtensionSpec(
            quotient=FreeAbelianSpec(rank=1), kernel=FreeAbelianSpec(rank=1), action="heisenberg"
        )
        with pytest.raises(InvalidParameterError):
            make_extension(spec)

    def test_trivial_extension_is_product(self) -> None:
        """The trivial action builds G × H with additive length."""
        ext = make_extension(
            parse_group_spec("extension:trivial(free_abelian:1;direct_sum_finite:1,2,2)")
        )
        assert isinstance(ext, ExtensionModel)
        assert isinstance(ext.total, ProductGroup)
        gamma = ((3,), (0, 1, 1))
        assert ext.total.length(gamma) == 5
        assert ext.project_to_kernel(gamma) == (0, 1, 1)
        assert ext.section((3,)) == ((3,), (0, 0, 0))

    def test_make_group_of_extension_is_total_group(self) -> None:
        """make_group on an extension returns Γ."""
        model = make_group(parse_group_spec("extension:heisenberg"))
        assert isinstance(model, HeisenbergGroup)

    def test_free_abelian_product_group_models(self) -> None:
        """Product groups report the factors' growth type."""
        left = FreeAbelianGroup(FreeAbelianSpec(rank=1))
        right = DirectSumFiniteGroup(DirectSumFiniteSpec(orders=[1, 2]))
        product = ProductGroup(FreeAbelianSpec(rank=1), left, right)
        assert product.polynomial_growth
        assert not product.is_word_metric
