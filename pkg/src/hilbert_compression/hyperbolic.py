"""Ray-segment unit vectors for free groups.

For a boundary point a and a level m, F(x, k, m) is the set of vertices at
distance i ∈ [m, 2m] along the geodesic rays from the points y with
d(x, y) < k toward a. H(x, m) sums these for k < √m with weight
m^{−(3/2−q)}, and g(x, m) = √(H / ‖H‖₁).
"""

from __future__ import annotations

import logging
import math
import threading
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from hilbert_compression.balls import enumerate_ball
from hilbert_compression.errors import (
    DegenerateInputError,
    InvalidParameterError,
    UnsupportedModelError,
)
from hilbert_compression.groups import Element, FreeGroup, GroupModel
from hilbert_compression.models import (
    BoundaryDescriptor,
    ConditionResult,
    HypParams,
    VerificationReport,
    q_supremum,
)

logger = logging.getLogger(__name__)


def midpoint_q(p: float) -> float:
    """Midpoint of (0, sup q) under (2+5p)(1/2−q) > 1+2p."""
    return q_supremum(p) / 2


def _require_free(model: GroupModel) -> FreeGroup:
    if not isinstance(model, FreeGroup):
        raise UnsupportedModelError(f"{model.name} is not a free group; rays need a tree")
    return model


def _word(model: FreeGroup, letters: str) -> Element:
    return tuple(model.letter_code(char) for char in letters)


def boundary_prefix(model: GroupModel, boundary: BoundaryDescriptor, length: int) -> Element:
    """First ``length`` letters of preperiod·period^∞.

    Raises:
        InvalidParameterError: If the infinite word is not reduced.
    """
    free = _require_free(model)
    pre = _word(free, boundary.preperiod)
    period = _word(free, boundary.period)
    window = pre + period * 2
    if any(a == -b for a, b in zip(window, window[1:])):
        raise InvalidParameterError(
            f"Boundary {boundary.preperiod}({boundary.period})^inf is not a reduced word"
        )
    repeats = max(0, length - len(pre)) // len(period) + 1
    return (pre + period * repeats)[:length]


def parse_boundary(text: str) -> BoundaryDescriptor:
    """'preperiod|period' or just 'period'."""
    pre, sep, period = text.partition("|")
    if not sep:
        pre, period = "", text
    return BoundaryDescriptor(preperiod=pre.strip(), period=period.strip())


def ray_segment(
    model: GroupModel, y: Element, boundary: BoundaryDescriptor, lo: float, hi: float
) -> list[Element]:
    """Vertices g(i), ⌈lo⌉ ≤ i ≤ ⌊hi⌋, of the geodesic ray from y toward the boundary point.

    Raises:
        UnsupportedModelError: If the model is not a free group.
        InvalidParameterError: Unless 0 ≤ lo ≤ hi.
    """
    _require_free(model)
    if not 0 <= lo <= hi:
        raise InvalidParameterError(f"Need 0 <= lo <= hi, got [{lo}, {hi}]")
    first, last = math.ceil(lo - 1e-12), math.floor(hi + 1e-12)
    a = boundary_prefix(model, boundary, len(y) + last + 1)
    common = 0
    while common < len(y) and y[common] == a[common]:
        common += 1
    back = len(y) - common
    vertices = []
    for i in range(first, last + 1):
        if i <= back:
            vertices.append(y[: len(y) - i])
        else:
            vertices.append(a[: common + i - back])
    return vertices


def ray_is_geodesic(
    model: GroupModel, y: Element, boundary: BoundaryDescriptor, length: int
) -> bool:
    """Unit steps, d(y, g(i)) = i, and eventually decreasing distance to prefixes of a."""
    ray = ray_segment(model, y, boundary, 0, length)
    if any(model.distance(u, v) != 1 for u, v in zip(ray, ray[1:])):
        return False
    if any(model.distance(y, g) != i for i, g in enumerate(ray)):
        return False
    target = boundary_prefix(model, boundary, len(y) + length + 1)
    tail = [model.distance(g, target) for g in ray[len(y) :]]
    return all(b < a for a, b in zip(tail, tail[1:]))


@dataclass(frozen=True, eq=False)
class HypFamily:
    """F, H and g at one level m, memoized per center."""

    model: FreeGroup
    params: HypParams
    level: float
    _counts: dict[Element, Counter[Element]] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def terms(self) -> int:
        """K = #{k ≥ 1 : k < √m}."""
        return max(0, math.ceil(math.sqrt(self.level)) - 1)

    @property
    def scale(self) -> float:
        return self.level ** -(1.5 - self.params.q)

    def f_indicator(self, x: Element, k: int) -> frozenset[Element]:
        """F(x, k, m)."""
        if k < 1:
            raise InvalidParameterError("k must be at least 1")
        neighbors = enumerate_ball(self.model, k - 1)
        boundary = self.params.boundary
        members: set[Element] = set()
        for offset in neighbors:
            y = self.model.multiply(x, offset)
            members.update(ray_segment(self.model, y, boundary, self.level, 2 * self.level))
        return frozenset(members)

    def counts(self, x: Element) -> Counter[Element]:
        """Integer multiplicities Σ_{k<√m} F(x, k, m)."""
        cached = self._counts.get(x)
        if cached is not None:
            return cached
        total: Counter[Element] = Counter()
        for k in range(1, self.terms + 1):
            total.update(self.f_indicator(x, k))
        with self._lock:
            self._counts[x] = total
        return total

    def h_vector(self, x: Element) -> dict[Element, float]:
        scale = self.scale
        return {g: scale * c for g, c in self.counts(x).items()}

    def h_l1(self, x: Element, exact: bool = False) -> float:
        if exact:
            return self.scale * sum(self.counts(x).values())
        return float(sum(self.h_vector(x).values()))

    def h_l1_difference(self, x: Element, y: Element, exact: bool = False) -> float:
        cx, cy = self.counts(x), self.counts(y)
        keys = cx.keys() | cy.keys()
        if exact:
            return self.scale * sum(abs(cx[g] - cy[g]) for g in keys)
        hx, hy = self.h_vector(x), self.h_vector(y)
        return float(sum(abs(hx.get(g, 0.0) - hy.get(g, 0.0)) for g in keys))

    def g_vector(self, x: Element) -> dict[Element, float]:
        """√(H / ‖H‖₁).

        Raises:
            DegenerateInputError: If H(x, m) is zero.
        """
        counts = self.counts(x)
        mass = sum(counts.values())
        if mass == 0:
            raise DegenerateInputError(f"H({x}, {self.level:g}) is the zero vector")
        return {g: math.sqrt(c / mass) for g, c in counts.items()}

    def g_inner(self, x: Element, y: Element) -> float:
        gx, gy = self.g_vector(x), self.g_vector(y)
        return float(sum(v * gy.get(g, 0.0) for g, v in gx.items()))

    def support_radius(self, x: Element) -> int:
        return max((self.model.distance(x, g) for g in self.counts(x)), default=0)

    def l1_additive(self, x: Element) -> bool:
        """Σ_k |F(x, k, m)| equals the total multiplicity exactly."""
        expected = sum(len(self.f_indicator(x, k)) for k in range(1, self.terms + 1))
        return expected == sum(self.counts(x).values())


def hyp_family(model: GroupModel, params: HypParams, level: float | None = None) -> HypFamily:
    """Family at level m, k(n) = n^{2+5p} by default."""
    free = _require_free(model)
    boundary_prefix(free, params.boundary, 1)
    family = HypFamily(model=free, params=params, level=params.k_n if level is None else level)
    if family.terms == 0:
        logger.warning("Level %.4g has no k < sqrt(m); H is the zero vector", family.level)
    return family


def fit_log_constants(levels: Mapping[int, float]) -> tuple[float, float]:
    """Least-squares (C, D) for level(n) ≈ C ln n + D; D only from a single n."""
    if not levels:
        raise InvalidParameterError("No levels to fit")
    ns = sorted(levels)
    values = np.asarray([levels[n] for n in ns], dtype=float)
    if len(ns) == 1:
        return 0.0, float(values[0])
    design = np.column_stack([np.log(np.asarray(ns, dtype=float)), np.ones(len(ns))])
    (c, d), *_ = np.linalg.lstsq(design, values, rcond=None)
    return float(c), float(d)


def verify_hyp_lemma(
    model: GroupModel,
    n: int,
    p: float,
    q: float | None = None,
    boundary: BoundaryDescriptor | None = None,
    work_radius: int = 2,
    arithmetic: str = "float",
) -> VerificationReport:
    """Check the hyperbolic lemma's mass, difference and support conditions on a working ball.

    Mass: ‖H(x, k(n))‖₁ ≥ 1. Difference: ‖H(x) − H(y)‖₁ ≤ 1/(4n^{1+2p}) when
    d(x, y) ≤ ln n. Support: supp H(x) ⊂ B(x, n^{2+6p}). Also checks
    ‖g(x) − g(y)‖² ≤ 2‖H(x) − H(y)‖₁ on pairs whose H masses are at least 1.
    """
    free = _require_free(model)
    params = HypParams(n=n, p=p, q=q, boundary=boundary or BoundaryDescriptor())
    family = hyp_family(free, params)
    exact = arithmetic == "exact"
    ball = enumerate_ball(free, work_radius)
    elements = ball.elements
    tolerance = 1.0 / (4.0 * float(n) ** (1 + 2 * p))

    masses = {x: family.h_l1(x, exact=exact) for x in elements}
    mass = _margins("mass", n, [masses[x] - 1.0 for x in elements])

    near_margins: list[float] = []
    chain_margins: list[float] = []
    worst_difference = 0.0
    for i, x in enumerate(elements):
        for y in elements[i:]:
            difference = family.h_l1_difference(x, y, exact=exact)
            if free.distance(x, y) <= params.near_radius:
                near_margins.append(tolerance - difference)
                worst_difference = max(worst_difference, difference)
            if masses[x] >= 1.0 and masses[y] >= 1.0 and family.terms > 0:
                gap = max(0.0, 2.0 - 2.0 * family.g_inner(x, y))
                chain_margins.append(2.0 * difference - gap)
    difference = _margins("difference", n, near_margins)
    chain = _margins("g_chain", n, chain_margins)

    radii = [family.support_radius(x) for x in elements]
    support = _margins("support", n, [params.support_bound - r for r in radii])
    level = worst_difference * family.level ** (0.5 - params.q)
    return VerificationReport(
        subject="hyp",
        n=n,
        p=p,
        conditions=[mass, difference, chain, support],
        measurements={
            "q": params.q,
            "k_n": family.level,
            "terms": family.terms,
            "scale": family.scale,
            "mass_min": min(masses.values()),
            "max_difference": worst_difference,
            "difference_level": level,
            "support_radius_measured": max(radii),
            "support_radius_bound": params.support_bound,
            "arithmetic": arithmetic,
            "degenerate": family.terms == 0,
        },
    )


def _margins(name: str, n: int, margins: list[float]) -> ConditionResult:
    if not margins:
        logger.warning("Condition %s at n=%d is vacuous", name, n)
        return ConditionResult(condition=name, n=n, vacuous=True)
    values = np.asarray(margins)
    return ConditionResult(
        condition=name,
        n=n,
        pairs_checked=len(margins),
        violations=int((values < -1e-12).sum()),
        worst_margin=float(values.min()),
    )


def equivariance_violations(
    family: HypFamily, samples: int, seed: int = 0, word_length: int = 3
) -> int:
    """Sampled check of ⟨g(wx), g(wy)⟩ = ⟨g(x), g(y)⟩ for w the boundary period.

    Raises:
        InvalidParameterError: If the boundary has a preperiod (w no longer fixes it).
    """
    boundary = family.params.boundary
    if boundary.preperiod:
        raise InvalidParameterError("Equivariance needs a purely periodic boundary point")
    shift = _word(family.model, boundary.period)
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(samples):
        x = family.model.random_element(rng, word_length)
        y = family.model.random_element(rng, word_length)
        power = int(rng.integers(-2, 3))
        w = family.model.identity
        for _ in range(abs(power)):
            step = shift if power > 0 else family.model.inverse(shift)
            w = family.model.multiply(w, step)
        before = family.g_inner(x, y)
        after = family.g_inner(family.model.multiply(w, x), family.model.multiply(w, y))
        if abs(before - after) > 1e-12:
            failures += 1
    return failures
