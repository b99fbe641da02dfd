"""Tests for compression lower bounds and empirical exponents."""

import math

import numpy as np
import pytest

from hilbert_compression.balls import enumerate_ball
from hilbert_compression.bounds import (
    DIRECT_SUM_CAVEAT,
    constant_system,
    direct_sum_system,
    embedding_pairs,
    empirical_compression,
    extension_bound_hyp,
    extension_bound_hyp_finite,
    extension_bound_poly,
    extension_bound_poly_finite,
    finite_p_grid,
    limit_bound,
    limit_quotients,
    wreath_bound,
)
from hilbert_compression.errors import DegenerateInputError, InvalidParameterError
from hilbert_compression.groups import FreeAbelianGroup
from hilbert_compression.kernel import identity_embedding, sqrt_embedding
from hilbert_compression.models import LimitSystem, SequenceRule


class TestClosedForms:
    """Tests for the extension and wreath formulas."""

    def test_extension_poly(self) -> None:
        """δ/4."""
        assert extension_bound_poly(1.0).value == 0.25

    def test_extension_hyp(self) -> None:
        """δ/5."""
        assert extension_bound_hyp(1.0).value == 0.2

    def test_wreath(self) -> None:
        """2α/(d+4)."""
        report = wreath_bound(1.0, 1.0)
        assert report.value == pytest.approx(0.4)
        assert report.formula == "wreath"

    def test_finite_p_values(self) -> None:
        """Finite-p bounds sit below their limits and approach them."""
        assert extension_bound_poly_finite(1.0, 0.05) == pytest.approx(1 / (2 * (2.4 / 0.95 + 0.05)))
        assert extension_bound_hyp_finite(1.0, 0.05) == pytest.approx(1 / (2 * (2.95 / 0.95 + 0.05)))
        grid = finite_p_grid(1.0, [0.1, 0.01, 0.001])
        assert grid == sorted(grid)
        assert grid[-1] < 0.25
        assert grid[-1] == pytest.approx(0.25, abs=0.005)

    def test_finite_p_in_trace(self) -> None:
        """Passing p records the finite-p bound."""
        report = extension_bound_hyp(1.0, p=0.05)
        assert report.trace["finite_p"] == pytest.approx(extension_bound_hyp_finite(1.0, 0.05))

    @pytest.mark.parametrize(
        "call",
        [
            lambda: extension_bound_poly(0.0),
            lambda: extension_bound_hyp(1.5),
            lambda: extension_bound_poly_finite(0.5, 0.5),
            lambda: wreath_bound(0.0, 1.0),
            lambda: wreath_bound(1.0, -1.0),
        ],
    )
    def test_invalid_parameters(self, call) -> None:
        """Out-of-range exponents are rejected."""
        with pytest.raises(InvalidParameterError):
            call()


class TestLimitBound:
    """Tests for direct-limit bounds."""

    def test_constant_standard(self) -> None:
        """Bounded constants give δ/2 with a converged proxy."""
        report = limit_bound(constant_system(1.0))
        assert report.value == pytest.approx(0.5)
        assert report.symbolic_limit == pytest.approx(0.5)
        assert report.numeric_proxy == pytest.approx(0.494, abs=0.01)
        assert report.trace["converged"] is True

    def test_constant_quasi(self) -> None:
        """The quasi variant tends to δ but converges slowly."""
        report = limit_bound(constant_system(1.0), variant="quasi")
        assert report.formula == "limit-quasi"
        assert report.value == pytest.approx(1.0)
        assert report.numeric_proxy is not None
        assert report.numeric_proxy < 0.9
        assert any("not converged" in caveat for caveat in report.caveats)

    def test_finite_p(self) -> None:
        """The finite-p exponent adds p to the scale."""
        report = limit_bound(constant_system(1.0), variant="finite-p", p=0.05)
        assert report.symbolic_limit == pytest.approx(0.5 / 1.05)
        assert report.trace["p"] == 0.05

    def test_direct_sum(self) -> None:
        """The direct-sum system carries its caveat."""
        report = limit_bound(direct_sum_system(), n_max=10_000)
        assert report.symbolic_limit == pytest.approx(0.25)
        assert DIRECT_SUM_CAVEAT in report.caveats

    def test_table_sequences_use_proxy(self) -> None:
        """Tabulated constants have no symbolic limit."""
        system = LimitSystem(delta=1.0, C=SequenceRule(table=[1.0, 2.0]))
        report = limit_bound(system, n_max=1000)
        assert report.symbolic_limit is None
        assert report.value == report.numeric_proxy

    def test_quotients_start_at_two(self) -> None:
        """n runs over [2, n_max]."""
        n, quotients = limit_quotients(constant_system(1.0), 20)
        assert n[0] == 2
        assert n[-1] == 20
        assert np.all(np.isfinite(quotients))

    def test_n_max_too_small(self) -> None:
        """n_max below 10 is rejected."""
        with pytest.raises(InvalidParameterError):
            limit_bound(constant_system(1.0), n_max=5)

    def test_nonpositive_constant(self) -> None:
        """C must stay positive."""
        system = LimitSystem(delta=1.0, C=SequenceRule(table=[1.0, 0.0]))
        with pytest.raises(InvalidParameterError):
            limit_bound(system, n_max=100)


class TestEmpiricalCompression:
    """Tests for the dyadic lower-envelope slope."""

    def test_identity_on_z2(self, z2: FreeAbelianGroup) -> None:
        """ℓ¹ against ℓ² has slope 1."""
        ball = enumerate_ball(z2, 64)
        result = empirical_compression(embedding_pairs(z2, ball, identity_embedding))
        assert result.slope == pytest.approx(1.0, abs=0.05)
        assert not result.flagged

    def test_sqrt_on_z(self, z1: FreeAbelianGroup) -> None:
        """x ↦ √|x| has slope 1/2."""
        ball = enumerate_ball(z1, 64)
        result = empirical_compression(embedding_pairs(z1, ball, sqrt_embedding))
        assert result.slope == pytest.approx(0.5, abs=0.05)
        assert result.bins == 6

    def test_pairs_skip_basepoint(self, z1: FreeAbelianGroup) -> None:
        """Every element except x₀ contributes one pair."""
        ball = enumerate_ball(z1, 3)
        pairs = embedding_pairs(z1, ball, identity_embedding, basepoint=(1,))
        assert len(pairs) == 6
        assert (4.0, 4.0) in pairs

    def test_too_few_pairs(self, z1: FreeAbelianGroup) -> None:
        """At least 50 pairs are needed."""
        ball = enumerate_ball(z1, 10)
        with pytest.raises(InvalidParameterError) as exc_info:
            empirical_compression(embedding_pairs(z1, ball, identity_embedding))
        assert "at least 50" in str(exc_info.value)

    def test_collapsed_embedding(self) -> None:
        """A zero envelope point is degenerate."""
        pairs = [(float(d), 0.0) for d in range(2, 60)]
        with pytest.raises(DegenerateInputError):
            empirical_compression(pairs)

    def test_single_bin(self) -> None:
        """One dyadic bin cannot give a slope."""
        pairs = [(2.0, math.sqrt(2.0))] * 60
        with pytest.raises(DegenerateInputError):
            empirical_compression(pairs)
