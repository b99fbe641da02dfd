"""Combining a quotient family with a kernel family on a group extension.

For 1 → H → Γ → G → 1 with section σ, a unit-vector family g on G with
finite supports and a Schoenberg family h on H give

    f(a)(x) = g(π(a))(x) · h(project_to_kernel(σ(x)⁻¹·a)),  x ∈ supp g(π(a)),

a unit vector in ℓ²(G) ⊗ 𝓗 with ⟨f(a), f(b)⟩ = Σ_x g g ⟨h, h⟩.
"""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from hilbert_compression.balls import Ball, enumerate_ball
from hilbert_compression.errors import (
    InvalidParameterError,
    PreconditionError,
    UnsupportedModelError,
)
from hilbert_compression.groups import (
    DirectSumFiniteGroup,
    Element,
    ExtensionModel,
    FreeAbelianGroup,
    FreeGroup,
    HeisenbergGroup,
)
from hilbert_compression.hyperbolic import HypFamily, hyp_family
from hilbert_compression.kernel import (
    SIMPLEX_PROFILE,
    Embedding,
    ScaleFamily,
    half_line_embedding,
    identity_embedding,
    identity_profile,
    schoenberg_family,
    simplex_embedding,
)
from hilbert_compression.models import (
    CompressionProfile,
    ConditionResult,
    ExtensionScales,
    HypParams,
    ScaleParams,
    VerificationReport,
)
from hilbert_compression.poly import PolyFamily, poly_family

logger = logging.getLogger(__name__)


def project_to_kernel(ext: ExtensionModel, gamma: Element) -> Element:
    """γ·σ(π(γ))⁻¹ as an element of H."""
    return ext.project_to_kernel(gamma)


# ==================== Quotient Families ====================


class QuotientVectors(Protocol):
    """Finitely supported unit vectors x ↦ g(x) ∈ ℓ²(G)."""

    case: str

    def vector(self, x: Element) -> dict[Element, float]: ...

    def support_radius(self, x: Element) -> float: ...


@dataclass(frozen=True)
class PolyQuotient:
    family: PolyFamily
    case: str = "polynomial"

    def vector(self, x: Element) -> dict[Element, float]:
        weight = 1.0 / math.sqrt(len(self.family.ball_k))
        model = self.family.model
        return {model.multiply(x, b): weight for b in self.family.ball_k}

    def support_radius(self, x: Element) -> float:  # noqa: ARG002
        return float(self.family.measured_support_radius)


@dataclass(frozen=True)
class HypQuotient:
    family: HypFamily
    case: str = "hyperbolic"

    def vector(self, x: Element) -> dict[Element, float]:
        return self.family.g_vector(x)

    def support_radius(self, x: Element) -> float:
        return float(self.family.support_radius(x))


def quotient_family(ext: ExtensionModel, n: int, p: float) -> QuotientVectors:
    """The polynomial-growth family for polynomial quotients, the ray family for free ones.

    Raises:
        UnsupportedModelError: For quotients with neither structure.
    """
    quotient = ext.quotient
    if quotient.polynomial_growth:
        return PolyQuotient(poly_family(quotient, n, p))
    if isinstance(quotient, FreeGroup):
        return HypQuotient(hyp_family(quotient, HypParams(n=n, p=p)))
    raise UnsupportedModelError(f"No quotient family for {quotient.name}")


# ==================== Kernel Families ====================


def kernel_embedding(ext: ExtensionModel, bound: int) -> tuple[Embedding, CompressionProfile]:
    """Standard embedding of the kernel and its profile in the induced length.

    ``bound`` is the largest kernel-length argument the family must accept.
    """
    kernel = ext.kernel
    if isinstance(ext.total, HeisenbergGroup):
        # ‖ΔF‖ = √|Δc| is at most the induced length of the central element.
        return half_line_embedding(bound), CompressionProfile(delta=1.0, C=4.0, D=1.0)
    if isinstance(kernel, DirectSumFiniteGroup):
        return simplex_embedding(kernel.orders), SIMPLEX_PROFILE
    if isinstance(kernel, FreeAbelianGroup):
        return identity_embedding, identity_profile(kernel.rank)
    raise UnsupportedModelError(f"No standard embedding for kernel {kernel.name}")


def kernel_family(
    ext: ExtensionModel,
    scales: ExtensionScales,
    radius: int,
    embedding: Embedding,
    profile: CompressionProfile,
) -> ScaleFamily:
    """h_n on the kernel ball of the given radius, near-tolerant up to ``scales.kernel_radius``."""
    params = ScaleParams(
        n=scales.n,
        p=scales.p,
        profile=profile,
        radius=scales.kernel_radius,
        epsilon=1.0 / (math.sqrt(2) * float(scales.n) ** (0.5 + scales.p)),
    )
    ball = enumerate_ball(ext.kernel, radius)
    return schoenberg_family(ext.kernel, ball, embedding, params)


# ==================== Combined Family ====================


class OutOfDomainError(Exception):
    """A kernel argument lies outside the ball the kernel family was built on."""


@dataclass(frozen=True, eq=False)
class CombinedFamily:
    """f_n on Γ, evaluated lazily and memoized per element."""

    ext: ExtensionModel
    quotient: QuotientVectors
    kernel: ScaleFamily
    scales: ExtensionScales
    _values: dict[Element, dict[Element, tuple[float, Element]]] = field(
        default_factory=dict, repr=False
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def value(self, a: Element) -> dict[Element, tuple[float, Element]]:
        """x ↦ (g(π(a))(x), kernel argument) over supp g(π(a))."""
        cached = self._values.get(a)
        if cached is not None:
            return cached
        return self._store(a, kernel_arguments(self.ext, self.quotient, a))

    def _store(
        self, a: Element, value: dict[Element, tuple[float, Element]]
    ) -> dict[Element, tuple[float, Element]]:
        with self._lock:
            self._values.setdefault(a, value)
        return self._values[a]

    def kernel_inner(self, u: Element, v: Element) -> float:
        if u not in self.kernel.ball or v not in self.kernel.ball:
            raise OutOfDomainError(f"{u} or {v} outside the kernel ball")
        return self.kernel.inner(u, v)

    def inner(self, a: Element, b: Element) -> float:
        fa, fb = self.value(a), self.value(b)
        if len(fb) < len(fa):
            fa, fb = fb, fa
        total = 0.0
        for x, (wa, ua) in fa.items():
            other = fb.get(x)
            if other is not None:
                total += wa * other[0] * self.kernel_inner(ua, other[1])
        return total

    def norm(self, a: Element) -> float:
        return math.sqrt(sum(w * w for w, _ in self.value(a).values()))


def kernel_arguments(
    ext: ExtensionModel, quotient: QuotientVectors, a: Element
) -> dict[Element, tuple[float, Element]]:
    """For each x in supp g(π(a)): (g(π(a))(x), project_to_kernel(σ(x)⁻¹·a))."""
    total = ext.total
    values: dict[Element, tuple[float, Element]] = {}
    for x, weight in quotient.vector(ext.project(a)).items():
        shifted = total.multiply(total.inverse(ext.section(x)), a)
        values[x] = (weight, ext.project_to_kernel(shifted))
    return values


def check_support(
    ext: ExtensionModel, quotient: QuotientVectors, scales: ExtensionScales, ball: Ball
) -> None:
    """supp g(x) ⊂ B(x, S_n^G) for every x = π(a), a in the ball.

    Raises:
        PreconditionError: Naming the first offending x.
    """
    for x in {ext.project(a) for a in ball}:
        radius = quotient.support_radius(x)
        if radius > scales.S_G + 1e-12:
            raise PreconditionError(
                f"supp g({x}) reaches radius {radius:g} > S_n^G={scales.S_G:g}", element=x
            )


def combine_family(
    quotient: QuotientVectors,
    kernel: ScaleFamily,
    ext: ExtensionModel,
    scales: ExtensionScales,
    ball: Ball,
) -> CombinedFamily:
    """f_n on ``ball`` ⊂ Γ.

    Raises:
        PreconditionError: If some quotient support leaves B(x, S_n^G) or the
            kernel family's near radius is below 2S_n^G + near radius.
    """
    check_support(ext, quotient, scales, ball)
    if kernel.params.R_n + 1e-12 < scales.kernel_radius:
        raise PreconditionError(
            f"kernel near radius {kernel.params.R_n:g} < 2S_n^G + near = {scales.kernel_radius:g}"
        )
    return CombinedFamily(ext=ext, quotient=quotient, kernel=kernel, scales=scales)


def build_extension_family(
    ext: ExtensionModel, n: int, p: float, work_radius: int
) -> tuple[CombinedFamily, Ball]:
    """Quotient family, scales, kernel family and f_n on B_Γ(work_radius)."""
    ball = enumerate_ball(ext.total, work_radius)
    quotient = quotient_family(ext, n, p)
    measured = max(quotient.support_radius(x) for x in {ext.project(a) for a in ball})
    arguments = {a: kernel_arguments(ext, quotient, a) for a in ball}
    reach = max(
        (ext.kernel.length(u) for value in arguments.values() for _, u in value.values()),
        default=0,
    )
    embedding, profile = kernel_embedding(ext, reach)
    if profile.delta <= p:
        raise InvalidParameterError(f"Kernel exponent {profile.delta} must exceed p={p}")
    scales = ExtensionScales(
        n=n, p=p, delta=profile.delta, case=quotient.case, measured_support_radius=measured
    )
    if scales.support_radius_source == "measured":
        logger.info(
            "n=%d: measured support radius %g exceeds the formula radius %.4g; using it",
            n,
            measured,
            scales.formula_support_radius,
        )
    kernel = kernel_family(ext, scales, reach, embedding, profile)
    family = combine_family(quotient, kernel, ext, scales, ball)
    for a, value in arguments.items():
        family._store(a, value)
    return family, ball


# ==================== Verification ====================


def _result(name: str, n: int, margins: list[float], note: str | None = None) -> ConditionResult:
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


def verify_combined(
    family: CombinedFamily,
    ball: Ball,
    distance: Callable[[Element, Element], int] | None = None,
) -> VerificationReport:
    """Exhaustive pair check of the near and far bullets on a ball of Γ.

    Pairs whose kernel arguments fall outside the kernel ball are counted as
    out of domain instead of being checked.
    """
    ext, scales = family.ext, family.scales
    n = scales.n
    dist = distance or ext.total.distance
    near_tol = scales.near_tolerance
    derived_tol = 1.0 / float(n) ** (0.5 + scales.p)
    near: list[float] = []
    far: list[float] = []
    derived_near: list[float] = []
    derived_far: list[float] = []
    drift: list[float] = []
    out_of_domain = 0
    drift_bound = 2 * scales.S_G + scales.near_radius
    elements = ball.elements
    norms = [abs(family.norm(a) - 1.0) for a in elements]
    for i, a in enumerate(elements):
        for b in elements[i:]:
            d = dist(a, b)
            try:
                inner = family.inner(a, b)
            except OutOfDomainError:
                out_of_domain += 1
                continue
            gap = math.sqrt(max(0.0, 2.0 - 2.0 * inner))
            if d <= scales.near_radius:
                near.append(near_tol - abs(1.0 - inner))
                derived_near.append(derived_tol - gap)
                drift.extend(drift_bound - v for v in _drifts(family, a, b))
            if d >= scales.far_radius:
                far.append(gap - 1.0)
            if d >= scales.S_bar:
                derived_far.append(gap - 1.0)
    unit = ConditionResult(
        condition="unit_norm",
        n=n,
        pairs_checked=len(norms),
        violations=sum(1 for v in norms if v > 1e-12),
        worst_margin=-max(norms) if norms else None,
    )
    return VerificationReport(
        subject="extension",
        n=n,
        p=scales.p,
        conditions=[
            unit,
            _result("near", n, near),
            _result("far", n, far),
            _result("derived_near", n, derived_near),
            _result("derived_far", n, derived_far),
            _result("drift", n, drift),
        ],
        measurements={
            "ball_size": len(ball),
            "S_G": scales.S_G,
            "S_G_source": scales.support_radius_source,
            "S_H": scales.S_H,
            "S_bar": scales.S_bar,
            "far_radius": scales.far_radius,
            "kernel_radius": scales.kernel_radius,
            "out_of_domain": out_of_domain,
        },
    )


def _drifts(family: CombinedFamily, a: Element, b: Element) -> list[int]:
    """Induced length of u_a(x)⁻¹u_b(x) over the common support."""
    ext = family.ext
    fa, fb = family.value(a), family.value(b)
    values = []
    for x, (_, ua) in fa.items():
        other = fb.get(x)
        if other is None:
            continue
        step = ext.kernel.multiply(ext.kernel.inverse(ua), other[1])
        values.append(ext.total.length(ext.include(step)))
    return values
