"""Compression lower bounds: direct limits, extensions, wreath products, empirical slopes."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from typing import Literal

import numpy as np

from hilbert_compression.balls import Ball
from hilbert_compression.errors import DegenerateInputError, InvalidParameterError
from hilbert_compression.groups import Element, GroupModel
from hilbert_compression.kernel import Embedding
from hilbert_compression.models import (
    BoundReport,
    EmpiricalExponent,
    IndexRule,
    LimitSystem,
    SequenceRule,
)

logger = logging.getLogger(__name__)

Variant = Literal["standard", "quasi", "finite-p"]

CONVERGENCE_TOLERANCE = 0.02
MIN_PAIRS = 50
RESIDUAL_FLAG = 0.1

DIRECT_SUM_CAVEAT = (
    "The direct-sum example claims compression 1 for infinite direct sums of finite groups, "
    "but this formula with bounded constants gives at most delta/2 <= 1/2; the formula is "
    "evaluated as written."
)


# ==================== Direct Limits ====================


def _sequence_values(rule: SequenceRule, index: np.ndarray) -> np.ndarray:
    if rule.table is not None:
        table = np.asarray(rule.table, dtype=float)
        return table[np.clip(index, 1, len(table)) - 1]
    return rule.coefficient * index.astype(float) ** rule.degree


def _index_values(rule: IndexRule, n: np.ndarray) -> np.ndarray:
    raw = rule.coefficient * n.astype(float) ** rule.degree
    rounded = np.floor(raw + 1e-12) if rule.rounding == "floor" else np.ceil(raw - 1e-12)
    return np.maximum(1, rounded).astype(np.int64)


def _check_positive(system: LimitSystem) -> None:
    for name in ("C", "C_tilde"):
        rule: SequenceRule = getattr(system, name)
        values = rule.table if rule.table is not None else [rule.coefficient]
        if any(v <= 0 for v in values):
            raise InvalidParameterError(f"Sequence {name} must be positive")


def _symbolic_limit(system: LimitSystem, variant: Variant, p: float) -> float | None:
    """(δ/2)/E with E the leading power of n inside the denominator's logarithm."""
    rules = (system.C, system.C_tilde, system.D, system.D_tilde)
    if not all(rule.is_polynomial for rule in rules):
        return None
    e_g = system.g.degree
    e_c = system.C.degree * e_g
    reach = {"standard": 0.5, "quasi": 0.0, "finite-p": 0.5}[variant]
    tilde_terms = [system.C_tilde.degree * e_g + reach]
    if not system.D_tilde.is_zero:
        tilde_terms.append(system.D_tilde.degree * e_g)
    scale = 0.5 + p if variant == "finite-p" else 0.5
    exponent = e_c + scale + max(tilde_terms)
    if not system.D.is_zero:
        exponent = max(exponent, e_c + system.D.degree * e_g)
    if exponent <= 0:
        return None
    return (system.delta / 2) / exponent


def limit_quotients(
    system: LimitSystem, n_max: int, variant: Variant = "standard", p: float = 0.05
) -> tuple[np.ndarray, np.ndarray]:
    """(n, quotient(n)) for n ∈ [2, n_max], dropping n with a nonpositive denominator."""
    n = np.arange(2, n_max + 1, dtype=np.int64)
    index = _index_values(system.g, n)
    c = _sequence_values(system.C, index)
    c_tilde = _sequence_values(system.C_tilde, index)
    d = _sequence_values(system.D, index)
    d_tilde = _sequence_values(system.D_tilde, index)
    nf = n.astype(float)
    if variant == "quasi":
        reach = c_tilde * np.log(nf) + d_tilde
    else:
        reach = c_tilde * np.sqrt(nf) + d_tilde
    if variant == "finite-p":
        factor = np.sqrt(-math.log(2) / np.log1p(-1.0 / (2.0 * nf ** (2 * p + 1))))
        inside = c * (factor * reach + d)
    else:
        inside = c * np.sqrt(2 * math.log(2) * nf) * reach + c * d
    with np.errstate(divide="ignore", invalid="ignore"):
        denominator = np.log(inside)
    valid = np.isfinite(denominator) & (denominator > 0)
    quotients = (system.delta / 2) * np.log(nf[valid] - 1) / denominator[valid]
    return n[valid], quotients


def limit_bound(
    system: LimitSystem, n_max: int = 1_000_000, variant: Variant = "standard", p: float = 0.05
) -> BoundReport:
    """limsup of the direct-limit quotient as a running maximum, plus the symbolic limit.

    Raises:
        InvalidParameterError: If n_max < 10 or C, C̃ are not positive.
    """
    if n_max < 10:
        raise InvalidParameterError("n_max must be at least 10")
    _check_positive(system)
    n, quotients = limit_quotients(system, n_max, variant, p)
    running = np.maximum.accumulate(quotients) if quotients.size else np.zeros(0)
    proxy = float(running[-1]) if running.size else 0.0
    symbolic = _symbolic_limit(system, variant, p)
    caveats = [f"limsup approximated by the running maximum over n in [2, {n_max}]"]
    converged = symbolic is not None and abs(symbolic - proxy) <= CONVERGENCE_TOLERANCE
    if symbolic is not None and not converged:
        caveats.append(
            f"numeric proxy {proxy:.4f} has not converged to the symbolic limit {symbolic:.4f} "
            f"by n={n_max}"
        )
    if system.name == "direct-sum":
        caveats.append(DIRECT_SUM_CAVEAT)
    value = symbolic if symbolic is not None else proxy
    formula = {"standard": "limit", "quasi": "limit-quasi", "finite-p": "limit-finite-p"}[variant]
    return BoundReport(
        value=min(1.0, max(0.0, value)),
        formula=formula,
        symbolic_limit=symbolic,
        numeric_proxy=proxy,
        trace={
            "system": system.name,
            "delta": system.delta,
            "n_min": int(n[0]) if n.size else None,
            "n_max": n_max,
            "n_used": int(n.size),
            "argmax_n": int(n[int(np.argmax(quotients))]) if n.size else None,
            "p": p if variant == "finite-p" else None,
            "converged": converged,
        },
        caveats=caveats,
    )


def constant_system(delta: float, name: str = "constant") -> LimitSystem:
    """C = C̃ = 1, D = D̃ = 0 at every index, g(n) = 1."""
    return LimitSystem(delta=delta, name=name)


def direct_sum_system(delta: float = 0.5) -> LimitSystem:
    """⊕F_i with the simplex profile: constant sequences and g(n) = ⌊√n⌋."""
    return LimitSystem(
        delta=delta,
        g=IndexRule(coefficient=1.0, degree=0.5, rounding="floor"),
        name="direct-sum",
    )


# ==================== Extensions and Wreath Products ====================


def _check_delta(delta: float) -> None:
    if not 0 < delta <= 1:
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")


def extension_bound_poly_finite(delta: float, p: float) -> float:
    """[2((2+8p)/(δ−p) + p)]⁻¹."""
    if not 0 < p < delta:
        raise InvalidParameterError("Need 0 < p < delta")
    return 1.0 / (2.0 * ((2 + 8 * p) / (delta - p) + p))


def extension_bound_hyp_finite(delta: float, p: float) -> float:
    """[2((5/2+9p)/(δ−p) + p)]⁻¹."""
    if not 0 < p < delta:
        raise InvalidParameterError("Need 0 < p < delta")
    return 1.0 / (2.0 * ((2.5 + 9 * p) / (delta - p) + p))


def extension_bound_poly(delta: float, p: float | None = None) -> BoundReport:
    """δ/4 for extensions with a polynomial-growth quotient."""
    _check_delta(delta)
    trace: dict[str, object] = {"delta": delta, "p": "limit p -> 0"}
    if p is not None:
        trace["p"] = p
        trace["finite_p"] = extension_bound_poly_finite(delta, p)
    return BoundReport(
        value=delta / 4, formula="extension-poly", symbolic_limit=delta / 4, trace=trace
    )


def extension_bound_hyp(delta: float, p: float | None = None) -> BoundReport:
    """δ/5 for extensions with a hyperbolic quotient."""
    _check_delta(delta)
    trace: dict[str, object] = {"delta": delta, "p": "limit p -> 0"}
    if p is not None:
        trace["p"] = p
        trace["finite_p"] = extension_bound_hyp_finite(delta, p)
    return BoundReport(
        value=delta / 5, formula="extension-hyp", symbolic_limit=delta / 5, trace=trace
    )


def wreath_bound(alpha: float, d: float) -> BoundReport:
    """2α/(d+4) for G ≀ ℤ-type wreath products over a base of growth degree d."""
    if not 0 < alpha <= 1:
        raise InvalidParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if d < 0:
        raise InvalidParameterError("d must be nonnegative")
    value = 2 * alpha / (d + 4)
    return BoundReport(
        value=value,
        formula="wreath",
        symbolic_limit=value,
        trace={"alpha": alpha, "d": d},
    )


# ==================== Empirical Compression ====================


def embedding_pairs(
    model: GroupModel, ball: Ball, embedding: Embedding, basepoint: Element | None = None
) -> list[tuple[float, float]]:
    """(d(x₀, x), ‖F(x) − F(x₀)‖) for every ball element other than the basepoint."""
    origin = model.identity if basepoint is None else basepoint
    anchor = np.asarray(embedding(origin), dtype=float)
    pairs = []
    for x in ball:
        if x == origin:
            continue
        difference = np.asarray(embedding(x), dtype=float) - anchor
        pairs.append((float(model.distance(origin, x)), float(np.linalg.norm(difference))))
    return pairs


def empirical_compression(
    pairs: Iterable[tuple[float, float]], d_min: float = 2.0
) -> EmpiricalExponent:
    """Slope of log‖ΔF‖ against log d along the dyadic-bin lower envelope.

    Raises:
        InvalidParameterError: With fewer than 50 pairs at d ≥ d_min.
        DegenerateInputError: If an envelope point is zero or only one bin is populated.
    """
    usable = [(d, v) for d, v in pairs if d >= d_min and d > 0]
    if len(usable) < MIN_PAIRS:
        raise InvalidParameterError(
            f"Need at least {MIN_PAIRS} pairs with d >= {d_min}, got {len(usable)}"
        )
    data = np.asarray(usable, dtype=float)
    bins = np.floor(np.log2(data[:, 0]) + 1e-12).astype(np.int64)
    points: list[tuple[float, float]] = []
    for b in np.unique(bins):
        members = data[bins == b]
        d, v = members[int(np.argmin(members[:, 1]))]
        if v <= 0:
            raise DegenerateInputError(f"Embedding collapses a pair at distance {d:g}")
        points.append((math.log(d), math.log(v)))
    if len(points) < 2:
        raise DegenerateInputError("Envelope needs at least two populated dyadic bins")
    xs, ys = np.asarray(points).T
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = float(np.sqrt(np.mean((slope * xs + intercept - ys) ** 2)))
    flagged = residual > RESIDUAL_FLAG or len(points) < 3
    if flagged:
        logger.warning("Envelope fit is unreliable (residual %.3g, %d bins)", residual, len(points))
    return EmpiricalExponent(
        slope=float(slope),
        residual=residual,
        bins=len(points),
        pairs_used=len(usable),
        flagged=flagged,
        points=points,
    )


def finite_p_grid(delta: float, ps: Sequence[float], case: str = "poly") -> list[float]:
    """Finite-p extension bounds over a grid of p."""
    function = extension_bound_poly_finite if case == "poly" else extension_bound_hyp_finite
    return [function(delta, p) for p in ps]
