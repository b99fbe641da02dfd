"""Unit vectors from normalized ball indicators for groups of polynomial growth.

g_n(x) is the characteristic function of B(x, k(n)) scaled by 1/√|B_{k(n)}|.
Inner products are overlap counts, and by left invariance the overlap of
B(x, k) and B(y, k) depends only on z = x⁻¹y.
"""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from hilbert_compression.balls import Ball, enumerate_ball, find_k_n
from hilbert_compression.groups import Element, FreeAbelianGroup, GroupModel
from hilbert_compression.models import ConditionResult, KSearchResult, VerificationReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IndicatorVector:
    """Equal-weight vector supported on B(center, radius)."""

    center: Element
    radius: int
    support: frozenset[Element]
    weight: float

    @property
    def norm(self) -> float:
        return math.sqrt(len(self.support)) * self.weight


@dataclass(frozen=True, eq=False)
class PolyFamily:
    """The family x ↦ g_n(x) at one scale n."""

    model: GroupModel
    n: int
    p: float
    search: KSearchResult
    ball_k: Ball
    _overlaps: dict[Element, int] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def k(self) -> int:
        return self.search.k

    @property
    def support_radius(self) -> float:
        """S_n^G = n^{3/2+5p}."""
        return float(self.n) ** (1.5 + 5 * self.p)

    @property
    def measured_support_radius(self) -> int:
        return int(self.ball_k.lengths[-1])

    @property
    def support_contained(self) -> bool:
        return self.measured_support_radius <= self.support_radius

    @property
    def working_radius(self) -> float:
        return math.sqrt(self.n) + self.k + 1

    def vector(self, x: Element) -> IndicatorVector:
        model = self.model
        support = frozenset(model.multiply(x, b) for b in self.ball_k)
        return IndicatorVector(
            center=x, radius=self.k, support=support, weight=1.0 / math.sqrt(len(self.ball_k))
        )

    def overlap(self, z: Element) -> int:
        """|B_k ∩ z·B_k|, memoized per displacement."""
        cached = self._overlaps.get(z)
        if cached is not None:
            return cached
        if isinstance(self.model, FreeAbelianGroup):
            points = np.asarray(self.ball_k.elements, dtype=np.int64)
            shift = np.asarray(z, dtype=np.int64)
            count = int(np.count_nonzero(np.abs(points - shift).sum(axis=1) <= self.k))
        else:
            z_inv = self.model.inverse(z)
            count = sum(1 for w in self.ball_k if self.model.multiply(z_inv, w) in self.ball_k)
        with self._lock:
            self._overlaps[z] = count
        return count

    def inner(self, x: Element, y: Element) -> float:
        """⟨g_n(x), g_n(y)⟩ = |B(x,k) ∩ B(y,k)| / |B_k|."""
        z = self.model.multiply(self.model.inverse(x), y)
        return self.overlap(z) / len(self.ball_k)

    def explicit_inner(self, x: Element, y: Element) -> float:
        """Inner product from materialized supports, without left invariance."""
        gx, gy = self.vector(x), self.vector(y)
        return len(gx.support & gy.support) * gx.weight * gy.weight

    def symmetric_difference(self, z: Element) -> int:
        """|B_k △ z·B_k| by membership in the enumerated ball."""
        if isinstance(self.model, FreeAbelianGroup):
            points = np.asarray(self.ball_k.elements, dtype=np.int64).reshape(
                len(self.ball_k), self.model.rank
            )
            shifted = points + np.asarray(z, dtype=np.int64)
            half = int(np.abs(shifted).max(initial=0)) + self.k
            weights = (2 * half + 1) ** np.arange(self.model.rank, dtype=np.int64)
            shared = np.isin((shifted + half) @ weights, (points + half) @ weights)
            return 2 * (len(self.ball_k) - int(np.count_nonzero(shared)))
        base = self.vector(self.model.identity).support
        return len(base ^ self.vector(z).support)

    def l1_ratio(self, x: Element, y: Element) -> float:
        """‖χ_x^k − χ_y^k‖₁ / ‖χ_k‖₁ from the symmetric difference of materialized supports."""
        gx, gy = self.vector(x), self.vector(y)
        return len(gx.support ^ gy.support) / len(self.ball_k)


def poly_family(
    model: GroupModel, n: int, p: float, memory_budget: int | None = None
) -> PolyFamily:
    """Build g_n with k = k(n) from the radius scan.

    Raises:
        UnsupportedModelError: If the model does not have polynomial growth.
        ResourceBudgetError: If the scan or the radius-k ball exceeds the budget.
    """
    search = find_k_n(model, n, p, memory_budget)
    ball_k = enumerate_ball(model, search.k, memory_budget)
    family = PolyFamily(model=model, n=n, p=p, search=search, ball_k=ball_k)
    if not family.support_contained:
        logger.info(
            "n=%d: k(n)=%d exceeds S_n^G=%.3f; support containment fails at this n",
            n,
            search.k,
            family.support_radius,
        )
    return family


def verify_poly_lemma(
    model: GroupModel,
    n: int,
    p: float,
    memory_budget: int | None = None,
    family: PolyFamily | None = None,
) -> VerificationReport:
    """Check |1 − ⟨g_n(x), g_n(y)⟩| ≤ 1/(4n^{1+2p}) for d(x,y) ≤ √n and the support radius.

    Pairs are reduced to displacements z = x⁻¹y with l(z) ≤ √n; every pair of
    the working ball B(√n + k + 1) at distance ≤ √n has one of these.
    """
    fam = family or poly_family(model, n, p, memory_budget)
    tolerance = 1.0 / (4.0 * float(n) ** (1 + 2 * p))
    chain_bound = 1.0 / (2.0 * float(n) ** (1 + 2 * p))
    displacements = fam.ball_k.within(math.sqrt(n) + 1e-12)
    size = len(fam.ball_k)
    near_margins = []
    chain_margins = []
    bound_margins = []
    for z in displacements:
        inner = fam.overlap(z) / size
        near_margins.append(tolerance - abs(1.0 - inner))
        gap = max(0.0, 2.0 - 2.0 * inner)
        chain_margins.append(fam.symmetric_difference(z) / size - gap)
        bound_margins.append(chain_bound - gap)
    near = _from_margins("near", n, near_margins, "pairs reduced to displacements z = x^-1 y")
    chain = _from_margins("l1_chain", n, chain_margins)
    chain_end = _from_margins("chain_bound", n, bound_margins)
    support_margin = fam.support_radius - fam.measured_support_radius
    support = ConditionResult(
        condition="support",
        n=n,
        pairs_checked=1,
        violations=0 if support_margin >= 0 else 1,
        worst_margin=support_margin,
        note=f"k(n)={fam.k}, S_n^G={fam.support_radius:.4g}",
    )
    return VerificationReport(
        subject="poly",
        n=n,
        p=p,
        conditions=[near, chain, chain_end, support],
        measurements={
            "k": fam.k,
            "ratio": fam.search.ratio,
            "ratio_bound": fam.search.bound,
            "ball_k": size,
            "working_radius": fam.working_radius,
            "support_radius_formula": fam.support_radius,
            "support_radius_measured": fam.measured_support_radius,
            "k_bound_holds": k_bound_holds(fam.search),
        },
    )


def _from_margins(
    name: str, n: int, margins: list[float], note: str | None = None
) -> ConditionResult:
    if not margins:
        logger.warning("Condition %s at n=%d is vacuous", name, n)
        return ConditionResult(condition=name, n=n, vacuous=True, note=note)
    values = np.asarray(margins)
    return ConditionResult(
        condition=name,
        n=n,
        pairs_checked=len(margins),
        violations=int((values < -1e-12).sum()),
        worst_margin=float(values.min()),
        note=note,
    )


def k_bound_holds(search: KSearchResult) -> bool:
    """k(n) ≤ 2n^{3/2+4p}."""
    return search.k <= 2.0 * float(search.n) ** (1.5 + 4 * search.p)


def empirical_threshold(flags: Mapping[int, bool]) -> int | None:
    """Smallest scanned n such that the flag holds for every scanned n′ ≥ n.

    Returns:
        The threshold, or None when the largest scanned n fails.
    """
    threshold: int | None = None
    for n in sorted(flags, reverse=True):
        if not flags[n]:
            break
        threshold = n
    return threshold


def k_bound_sweep(
    model: GroupModel,
    n_values: Iterable[int],
    p: float,
    memory_budget: int | None = None,
) -> tuple[dict[int, KSearchResult], int | None]:
    """Scan k(n) over ``n_values`` and report n̄ for k(n) ≤ 2n^{3/2+4p}.

    Returns:
        The search result per n and the empirical threshold, None when the
        bound fails at the largest n.
    """
    searches = {n: find_k_n(model, n, p, memory_budget) for n in sorted(set(n_values))}
    threshold = empirical_threshold({n: k_bound_holds(s) for n, s in searches.items()})
    logger.info(
        "%s: k(n) bound holds from n = %s over %d scales", model.name, threshold, len(searches)
    )
    return searches, threshold


def left_invariance_violations(
    family: PolyFamily, samples: int, seed: int = 0, word_length: int = 3
) -> int:
    """Count sampled (x, y, z) with ⟨g(zx), g(zy)⟩ ≠ ⟨g(x), g(y)⟩ using explicit supports."""
    rng = np.random.default_rng(seed)
    model = family.model
    failures = 0
    for _ in range(samples):
        x = model.random_element(rng, word_length)
        y = model.random_element(rng, word_length)
        z = model.random_element(rng, word_length)
        before = family.explicit_inner(x, y)
        after = family.explicit_inner(model.multiply(z, x), model.multiply(z, y))
        if abs(before - after) > 1e-12:
            failures += 1
    return failures
