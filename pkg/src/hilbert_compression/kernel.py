"""Schoenberg unit-vector families built from a Hilbert space embedding.

Given F: G → ℓ² and a scale t, the vectors ξ_x = e^{−t‖F(x)‖²} Exp(√(2t)·F(x))
satisfy ⟨ξ_x, ξ_y⟩ = exp(−t‖F(x) − F(y)‖²). Only that Gram matrix is ever
stored; coordinates are recovered by a PSD factorization when needed.
"""

from __future__ import annotations

import bisect
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist, squareform

from hilbert_compression.balls import Ball
from hilbert_compression.errors import (
    InvalidParameterError,
    NumericError,
    PreconditionError,
)
from hilbert_compression.groups import Element, FreeAbelianGroup, GroupModel, ProductGroup
from hilbert_compression.models import (
    CompressionProfile,
    ConditionResult,
    CorollaryThreshold,
    RhoStep,
    ScaleParams,
    VerificationReport,
)

logger = logging.getLogger(__name__)

Embedding = Callable[[Element], np.ndarray]

EIGENVALUE_FLOOR = -1e-10
TIE_TOLERANCE = 1e-12


# ==================== Standard Embeddings ====================


def identity_embedding(x: Element) -> np.ndarray:
    """ℤ^d ⊂ ℝ^d."""
    return np.asarray(x, dtype=float)


def sqrt_embedding(x: Element) -> np.ndarray:
    """Coordinatewise sign(x)·√|x|."""
    values = np.asarray(x, dtype=float)
    return np.sign(values) * np.sqrt(np.abs(values))


def half_line_embedding(bound: int) -> Embedding:
    """ℤ → ℝ^{2·bound} with ‖F(c) − F(c′)‖² = |c − c′| for |c|, |c′| ≤ bound.

    F(c) is the indicator of the unit cells between 0 and c.
    """
    if bound < 0:
        raise InvalidParameterError("bound must be nonnegative")

    def embed(x: Element) -> np.ndarray:
        c = int(x[0])
        if abs(c) > bound:
            raise PreconditionError(f"|{c}| exceeds the half-line bound {bound}", element=x)
        vector = np.zeros(2 * bound)
        if c > 0:
            vector[bound : bound + c] = 1.0
        elif c < 0:
            vector[bound + c : bound] = 1.0
        return vector

    return embed


def simplex_embedding(orders: Sequence[int]) -> Embedding:
    """Embedding of ⊕F_i: residue j at index i ↦ √(2i−1)·e_{i,j}/√2.

    Differing at index i contributes 2i−1 to ‖ΔF‖², so with ultrametric
    length l the squared distance lies between 2l−1 and l².
    """
    offsets = np.concatenate([[0], np.cumsum(orders)])
    weights = [math.sqrt(max(2 * i - 1, 0) / 2) for i in range(len(orders))]

    def embed(x: Element) -> np.ndarray:
        vector = np.zeros(int(offsets[-1]))
        for i, residue in enumerate(x):
            vector[int(offsets[i]) + int(residue)] = weights[i]
        return vector

    return embed


SIMPLEX_PROFILE = CompressionProfile(delta=0.5, C=1.0, D=0.0, C_tilde=1.0, D_tilde=0.0)


def identity_profile(rank: int) -> CompressionProfile:
    """ℓ¹ against ℓ²: ‖x‖₁/√d ≤ ‖x‖₂ ≤ ‖x‖₁."""
    return CompressionProfile(delta=1.0, C=math.sqrt(rank), C_tilde=1.0)


# ==================== Families ====================


@dataclass(frozen=True, eq=False)
class ScaleFamily:
    """Gram matrix of the Schoenberg vectors at one scale, indexed like the ball."""

    model: GroupModel
    ball: Ball
    params: ScaleParams
    coords: np.ndarray
    gram: np.ndarray

    @property
    def t(self) -> float:
        return self.params.t

    def inner(self, x: Element, y: Element) -> float:
        return float(self.gram[self.ball.position(x), self.ball.position(y)])


def embed_ball(ball: Ball, embedding: Embedding) -> np.ndarray:
    """Stack F(x) for every ball element; rejects non-finite values."""
    rows = [np.atleast_1d(np.asarray(embedding(x), dtype=float)) for x in ball]
    coords = np.vstack(rows) if rows else np.zeros((0, 0))
    if not np.all(np.isfinite(coords)):
        raise InvalidParameterError("Embedding produced non-finite coordinates")
    return coords


def schoenberg_family(
    model: GroupModel, ball: Ball, embedding: Embedding, params: ScaleParams
) -> ScaleFamily:
    """Gram[x][y] = exp(−t‖F(x) − F(y)‖²) over the ball."""
    coords = embed_ball(ball, embedding)
    sq = squareform(pdist(coords, "sqeuclidean")) if len(ball) > 1 else np.zeros((1, 1))
    gram = np.exp(-params.t * sq)
    np.fill_diagonal(gram, 1.0)
    return ScaleFamily(model=model, ball=ball, params=params, coords=coords, gram=gram)


def realize_vectors(family: ScaleFamily) -> np.ndarray:
    """Rows V_x with V·Vᵀ = Gram and ‖V_x‖ = 1, via symmetric eigendecomposition.

    Raises:
        NumericError: If an eigenvalue lies below −1e−10.
    """
    return realize_gram(family.gram)


def realize_gram(gram: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = linalg.eigh(gram)
    worst = float(eigenvalues.min()) if eigenvalues.size else 0.0
    if worst < EIGENVALUE_FLOOR:
        raise NumericError(
            f"Gram matrix is indefinite (smallest eigenvalue {worst:.3e})",
            worst_eigenvalue=worst,
        )
    vectors = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors / np.where(norms > 0, norms, 1.0)


def corollary_threshold(profile: CompressionProfile, params: ScaleParams) -> CorollaryThreshold:
    """Far-distance thresholds for a Schoenberg family built from a profiled embedding.

    Raises:
        InvalidParameterError: If δ ≤ p.
    """
    exponent = profile.delta - params.p
    if exponent <= 0:
        raise InvalidParameterError(f"delta={profile.delta} must exceed p={params.p}")
    n = float(params.n)
    reach = profile.C_tilde * n**params.r + profile.D_tilde
    base = profile.C * math.sqrt(2) * params.a * n**params.b * reach + profile.C * profile.D
    a_n = base ** (1 / exponent)
    factor = math.sqrt(-math.log(2) / math.log1p(-params.eps_n**2 / 2))
    sharp = (profile.C * (factor * profile.rho_plus(params.R_n) + profile.D)) ** (1 / exponent)
    simplified_exponent = (params.r + params.b + params.p) / exponent
    simplified = n**simplified_exponent
    return CorollaryThreshold(
        A_n=a_n,
        sharp=sharp,
        simplified=simplified,
        simplified_exponent=simplified_exponent,
        within_simplified=a_n <= simplified,
    )


def distance_matrix(model: GroupModel, elements: Sequence[Element]) -> np.ndarray:
    """Pairwise d(x, y) = l(x⁻¹y) over the given elements.

    ℤ^d goes through ``pdist``, products split into factor matrices, and other
    models evaluate each distinct displacement x⁻¹y once.
    """
    size = len(elements)
    if isinstance(model, FreeAbelianGroup):
        if size < 2:
            return np.zeros((size, size), dtype=np.int64)
        points = np.asarray(elements, dtype=float).reshape(size, model.rank)
        return squareform(pdist(points, "cityblock")).astype(np.int64)
    if isinstance(model, ProductGroup):
        left = distance_matrix(model.left, [x[0] for x in elements])
        right = distance_matrix(model.right, [x[1] for x in elements])
        return left + right
    distances = np.zeros((size, size), dtype=np.int64)
    inverses = [model.inverse(x) for x in elements]
    lengths: dict[Element, int] = {}
    for i in range(size):
        for j in range(i + 1, size):
            z = model.multiply(inverses[i], elements[j])
            length = lengths.get(z)
            if length is None:
                length = lengths[z] = model.length(z)
            distances[i, j] = distances[j, i] = length
    logger.debug("%s: %d distinct displacements over %d elements", model.name, len(lengths), size)
    return distances


def _condition(
    name: str, n: int, mask: np.ndarray, margins: np.ndarray, note: str | None = None
) -> ConditionResult:
    checked = int(mask.sum())
    if checked == 0:
        logger.warning("Condition %s at n=%d is vacuous", name, n)
        return ConditionResult(condition=name, n=n, vacuous=True, note=note)
    selected = margins[mask]
    return ConditionResult(
        condition=name,
        n=n,
        pairs_checked=checked,
        violations=int((selected < -TIE_TOLERANCE).sum()),
        worst_margin=float(selected.min()),
        note=note,
    )


def verify_family(
    family: ScaleFamily,
    radius: float,
    epsilon: float,
    far_radius: float,
    distances: np.ndarray | None = None,
) -> VerificationReport:
    """Check near (d ≤ R ⇒ ‖ξ_x − ξ_y‖ ≤ ε) and far (d ≥ S ⇒ ‖ξ_x − ξ_y‖ ≥ 1) on all pairs.

    Also checks the Gram sandwich e^{−tρ₊(d)²} ≤ Gram ≤ e^{−tρ₋(d)²} on the
    pairs where F itself satisfies ρ₋(d) ≤ ‖F(x) − F(y)‖ ≤ ρ₊(d).
    """
    ball = family.ball
    d = distances if distances is not None else distance_matrix(family.model, ball.elements)
    upper = np.triu(np.ones_like(d, dtype=bool))
    gap = np.sqrt(np.clip(2.0 - 2.0 * family.gram, 0.0, None))
    near = _condition("near", family.params.n, upper & (d <= radius), epsilon - gap)
    far = _condition("far", family.params.n, upper & (d >= far_radius), gap - 1.0)

    profile = family.params.profile
    d_float = d.astype(float)
    lo = np.clip(d_float**profile.delta / profile.C - profile.D, 0.0, None)
    hi = profile.C_tilde * d_float + profile.D_tilde
    f_gap = np.zeros((1, 1))
    if len(ball) > 1:
        f_gap = np.sqrt(squareform(pdist(family.coords, "sqeuclidean")))
    premise = upper & (f_gap >= lo - TIE_TOLERANCE) & (f_gap <= hi + TIE_TOLERANCE)
    t = family.t
    sandwich_margin = np.minimum(
        family.gram - np.exp(-t * hi**2), np.exp(-t * lo**2) - family.gram
    )
    sandwich = _condition(
        "sandwich",
        family.params.n,
        premise,
        sandwich_margin,
        note=f"{int((upper & ~premise).sum())} pairs outside the profile",
    )
    return VerificationReport(
        subject="kernel",
        n=family.params.n,
        p=family.params.p,
        conditions=[near, far, sandwich],
        measurements={
            "t": t,
            "R_n": radius,
            "eps_n": epsilon,
            "S": far_radius,
            "ball_size": len(ball),
            "max_distance": int(d.max()) if d.size else 0,
        },
    )


# ==================== Step Function ====================


class RhoEvaluation(NamedTuple):
    value: float
    saturated: bool


def rho_minus_eval(step: RhoStep, d: float) -> RhoEvaluation:
    """½√(n−1) for the n with S_{n−1} ≤ d < S_n; 0 and saturated beyond S_N."""
    if d < 0:
        raise InvalidParameterError("d must be nonnegative")
    n = bisect.bisect_right(step.thresholds, d)
    if n >= len(step.thresholds):
        return RhoEvaluation(0.0, True)
    return RhoEvaluation(0.5 * math.sqrt(n - 1), False)


def polynomial_rho_step(exponent: float, depth: int) -> RhoStep:
    """Thresholds S_n = n^exponent for n = 1..depth."""
    return RhoStep(thresholds=(0.0,) + tuple(float(n) ** exponent for n in range(1, depth + 1)))


# ==================== Stacked Embedding ====================


def stacked_threshold_families(
    model: GroupModel,
    ball: Ball,
    embedding: Embedding,
    profile: CompressionProfile,
    p: float,
    depth: int,
) -> tuple[list[ScaleFamily], RhoStep]:
    """Per-level families η_i with R_i = √i, ε_i = i^{−(1/2+p)} and their far thresholds S_i."""
    if depth < 1:
        raise InvalidParameterError("depth must be at least 1")
    families: list[ScaleFamily] = []
    thresholds = [0.0]
    for i in range(1, depth + 1):
        params = ScaleParams(
            n=i,
            p=p,
            profile=profile,
            radius=math.sqrt(i),
            epsilon=float(i) ** -(0.5 + p),
        )
        families.append(schoenberg_family(model, ball, embedding, params))
        sharp = corollary_threshold(profile, params).sharp
        thresholds.append(max(sharp, thresholds[-1] * (1 + 1e-12) + 1e-12))
    return families, RhoStep(thresholds=tuple(thresholds))


@dataclass(frozen=True, eq=False)
class StackedEmbedding:
    """F(x) = ½ ⊕_{i ≤ N} (η_i(x) − η_i(x₀)), truncated at depth N."""

    ball: Ball
    basepoint: Element
    p: float
    depth: int
    vectors: np.ndarray
    squared_distances: np.ndarray

    def vector(self, x: Element) -> np.ndarray:
        return self.vectors[self.ball.position(x)]

    def tail_constant(self, d: float) -> float:
        """¼ Σ_{⌈d²⌉ ≤ i ≤ N} i^{−(1+2p)}."""
        start = max(1, math.ceil(d * d))
        if start > self.depth:
            return 0.0
        i = np.arange(start, self.depth + 1, dtype=float)
        return float(0.25 * np.sum(i ** -(1 + 2 * self.p)))


def stacked_embedding(families: Sequence[ScaleFamily], basepoint: Element) -> StackedEmbedding:
    """Concatenate realized per-level vectors, centered at the basepoint and scaled by ½.

    Raises:
        InvalidParameterError: If the families are empty, live on different
            balls, or the basepoint is missing.
    """
    if not families:
        raise InvalidParameterError("At least one family is required")
    ball = families[0].ball
    for family in families[1:]:
        if family.ball.elements != ball.elements:
            raise InvalidParameterError("All families must share one ball")
    if basepoint not in ball:
        raise InvalidParameterError(f"Basepoint {basepoint} is not in the ball")
    origin = ball.position(basepoint)
    blocks = []
    squared = np.zeros((len(ball), len(ball)))
    for family in families:
        realized = realize_vectors(family)
        blocks.append(0.5 * (realized - realized[origin]))
        squared += 0.25 * np.clip(2.0 - 2.0 * family.gram, 0.0, None)
    return StackedEmbedding(
        ball=ball,
        basepoint=basepoint,
        p=families[0].params.p,
        depth=len(families),
        vectors=np.hstack(blocks),
        squared_distances=squared,
    )


def verify_stacked(
    stack: StackedEmbedding, step: RhoStep, distances: np.ndarray
) -> VerificationReport:
    """Check ‖ΔF‖² ≤ d² + C(d) and ‖ΔF‖² ≥ (n−1)/4 for S_{n−1} ≤ d < S_n on every pair."""
    depth = step.depth
    upper = np.triu(np.ones_like(distances, dtype=bool), k=1)
    tails = {int(v): stack.tail_constant(float(v)) for v in np.unique(distances)}
    tail = np.vectorize(lambda v: tails[int(v)], otypes=[float])(distances)
    d_float = distances.astype(float)
    upper_margin = d_float**2 + tail - stack.squared_distances
    levels = np.searchsorted(np.asarray(step.thresholds), d_float, side="right")
    lower_bound = (np.minimum(levels, depth + 1) - 1) / 4.0
    lower_margin = stack.squared_distances - lower_bound
    return VerificationReport(
        subject="stacked",
        n=depth,
        p=stack.p,
        conditions=[
            _condition("stack_upper", depth, upper, upper_margin),
            _condition("stack_lower", depth, upper, lower_margin),
        ],
        measurements={"depth": depth, "ball_size": len(stack.ball)},
    )
