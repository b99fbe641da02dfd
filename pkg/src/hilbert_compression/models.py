"""Pydantic models for group specs, construction parameters and reports.

Specs and parameters validate their own domains so that heavy work never
starts on invalid input. Reports are plain data so they serialize to CSV and
text without knowing which construction produced them.
"""

from __future__ import annotations

import json
import math
from typing import Annotated, Any, Literal

from pydantic import BaseModel, Field, TypeAdapter, field_validator, model_validator

# ==================== Group Specs ====================


class FreeAbelianSpec(BaseModel):
    """ℤ^d with the standard generators."""

    kind: Literal["free_abelian"] = "free_abelian"
    rank: int = Field(..., ge=1, description="Dimension d of ℤ^d")

    model_config = {"frozen": True}


class FreeGroupSpec(BaseModel):
    """Free group of the given rank; inverses are written in upper case."""

    kind: Literal["free_group"] = "free_group"
    rank: int = Field(..., ge=1, description="Number of free generators")
    letters: str | None = Field(
        default=None,
        description="Lower-case generator names, first letter first (default 'bstuvwxyz')",
    )

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_letters(self) -> FreeGroupSpec:
        if self.letters is not None:
            if len(self.letters) != self.rank:
                raise ValueError("letters must name exactly rank generators")
            if not self.letters.isalpha() or not self.letters.islower():
                raise ValueError("letters must be lower-case ASCII letters")
            if len(set(self.letters)) != len(self.letters):
                raise ValueError("letters must be distinct")
        elif self.rank > 9:
            raise ValueError("rank above 9 needs explicit letters")
        return self


class HeisenbergSpec(BaseModel):
    """Discrete Heisenberg group H₃ with generators x, y."""

    kind: Literal["heisenberg"] = "heisenberg"

    model_config = {"frozen": True}


class DirectSumFiniteSpec(BaseModel):
    """F₀ ⊕ F₁ ⊕ … with F_i cyclic of the given order, truncated to the listed factors."""

    kind: Literal["direct_sum_finite"] = "direct_sum_finite"
    orders: list[int] = Field(..., min_length=1, description="Orders of F_0, F_1, ...")

    model_config = {"frozen": True}

    @field_validator("orders")
    @classmethod
    def _check_orders(cls, orders: list[int]) -> list[int]:
        if any(order < 1 for order in orders):
            raise ValueError("orders must be positive integers")
        if orders[0] != 1:
            raise ValueError("F_0 must be trivial (orders[0] == 1)")
        return orders


class LamplighterSpec(BaseModel):
    """Subgroup {(f, 0)} of (ℤ/m) ≀ ℤ (or ℤ ≀ ℤ) with the induced metric."""

    kind: Literal["lamplighter"] = "lamplighter"
    lamp_order: int | None = Field(
        default=2,
        ge=1,
        description="Lamp group order m; None means ℤ lamps",
    )

    model_config = {"frozen": True}


class PluginGroupSpec(BaseModel):
    """Group model provided by an installed plugin."""

    kind: Literal["plugin"] = "plugin"
    name: str = Field(..., min_length=1, description="Registered plugin name")
    params: dict[str, Any] = Field(default_factory=dict, description="Plugin parameters")

    model_config = {"frozen": True}


class ExtensionSpec(BaseModel):
    """Extension 1 → H → Γ → G → 1 given by quotient, kernel and action."""

    kind: Literal["extension"] = "extension"
    quotient: GroupSpec
    kernel: GroupSpec
    action: Literal["trivial", "heisenberg"] = Field(
        default="trivial",
        description="'trivial' for G × H, 'heisenberg' for the central extension of ℤ² by ℤ",
    )

    model_config = {"frozen": True}


GroupSpec = Annotated[
    FreeAbelianSpec
    | FreeGroupSpec
    | HeisenbergSpec
    | DirectSumFiniteSpec
    | LamplighterSpec
    | PluginGroupSpec
    | ExtensionSpec,
    Field(discriminator="kind"),
]

ExtensionSpec.model_rebuild()

GROUP_SPEC_ADAPTER: TypeAdapter[GroupSpec] = TypeAdapter(GroupSpec)


def canonical_spec(spec: BaseModel) -> str:
    """Stable string for a spec: sorted-key compact JSON."""
    return json.dumps(spec.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


# ==================== Embedding Parameters ====================


class CompressionProfile(BaseModel):
    """ρ₋(r) = (1/C)·r^δ − D and ρ₊(r) = C̃·r + D̃."""

    delta: float = Field(..., gt=0, le=1, description="Compression exponent δ")
    C: float = Field(default=1.0, gt=0, description="Lower-bound constant C")
    D: float = Field(default=0.0, ge=0, description="Lower-bound offset D")
    C_tilde: float = Field(default=1.0, gt=0, description="Lipschitz constant C̃")
    D_tilde: float = Field(default=0.0, ge=0, description="Lipschitz offset D̃")

    model_config = {"frozen": True}

    def rho_minus(self, r: float, p: float = 0.0) -> float:
        return r ** (self.delta - p) / self.C - self.D

    def rho_plus(self, r: float) -> float:
        return self.C_tilde * r + self.D_tilde

    @model_validator(mode="after")
    def _check_sandwich(self) -> CompressionProfile:
        # Distances of word metrics are 0 or at least 1.
        grid = [0.0] + [10 ** (k / 20) for k in range(0, 121)]
        for r in grid:
            lo, hi = self.rho_minus(r), self.rho_plus(r)
            if lo > hi + 1e-12 * max(1.0, abs(hi)):
                raise ValueError(f"rho_minus exceeds rho_plus at r={r:g}")
        return self


class ScaleParams(BaseModel):
    """Per-scale parameters: R_n = n^r, ε_n = 1/(a·n^b), t = −ln(1−ε_n²/2)/ρ₊(R_n)².

    ``radius``, ``epsilon`` and ``t_override`` replace the derived values when set.
    p = 0 stands for the p → 0 limit.
    """

    n: int = Field(..., ge=1, description="Scale index")
    p: float = Field(default=0.05, ge=0, lt=1, description="Exponent slack p")
    r: float = Field(default=0.5, gt=0, description="Radius exponent")
    a: float = Field(default=math.sqrt(2), gt=0, description="Tolerance constant a")
    b: float = Field(default=0.55, gt=0, description="Tolerance exponent b")
    profile: CompressionProfile
    radius: float | None = Field(default=None, gt=0, description="Explicit R_n")
    epsilon: float | None = Field(default=None, gt=0, description="Explicit ε_n")
    t_override: float | None = Field(default=None, ge=0, description="Explicit Gaussian scale t")

    model_config = {"frozen": True}

    @property
    def R_n(self) -> float:
        return self.radius if self.radius is not None else float(self.n) ** self.r

    @property
    def eps_n(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return 1.0 / (self.a * float(self.n) ** self.b)

    @property
    def t(self) -> float:
        if self.t_override is not None:
            return self.t_override
        reach = self.profile.rho_plus(self.R_n)
        return -math.log1p(-self.eps_n**2 / 2) / reach**2

    @model_validator(mode="after")
    def _check_derived(self) -> ScaleParams:
        if not 0 < self.eps_n < math.sqrt(2):
            raise ValueError(f"epsilon_n={self.eps_n:g} must lie in (0, sqrt(2))")
        if self.t_override is None and not self.t > 0:
            raise ValueError("derived t must be positive")
        return self


class CorollaryThreshold(BaseModel):
    """Distances beyond which a Schoenberg family is guaranteed far (‖ξ_x − ξ_y‖ ≥ 1)."""

    A_n: float = Field(..., description="[C√2·a·n^b(C̃n^r + D̃) + CD]^{1/(δ−p)}")
    sharp: float = Field(..., description="Distance forcing ⟨ξ_x, ξ_y⟩ ≤ 1/2 for these params")
    simplified: float = Field(..., description="n^{(r+b+p)/(δ−p)}")
    simplified_exponent: float
    within_simplified: bool = Field(..., description="A_n ≤ n^{(r+b+p)/(δ−p)} at this n")


class RhoStep(BaseModel):
    """Step function equal to √(n−1)/2 on [S_{n−1}, S_n), with S₀ = 0."""

    thresholds: tuple[float, ...] = Field(..., min_length=2)

    model_config = {"frozen": True}

    @field_validator("thresholds")
    @classmethod
    def _increasing_from_zero(cls, thresholds: tuple[float, ...]) -> tuple[float, ...]:
        if thresholds[0] != 0:
            raise ValueError("S_0 must be 0")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        return thresholds

    @property
    def depth(self) -> int:
        return len(self.thresholds) - 1


def q_supremum(p: float) -> float:
    """Supremum of q allowed by (2+5p)(1/2−q) > 1+2p."""
    return 0.5 - (1 + 2 * p) / (2 + 5 * p)


class BoundaryDescriptor(BaseModel):
    """Eventually periodic infinite reduced word: preperiod followed by period repeated."""

    preperiod: str = Field(default="", description="Finite reduced prefix")
    period: str = Field(default="b", min_length=1, description="Repeated block")

    model_config = {"frozen": True}


class HypParams(BaseModel):
    """Parameters of the hyperbolic construction; q defaults to the midpoint rule."""

    n: int = Field(..., ge=1)
    p: float = Field(default=0.05, gt=0, lt=1)
    q: float = Field(..., gt=0, description="Decay slack q")
    boundary: BoundaryDescriptor = Field(default_factory=BoundaryDescriptor)

    model_config = {"frozen": True}

    @model_validator(mode="before")
    @classmethod
    def _default_q(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("q") is None:
            p = float(data.get("p", 0.05))
            return {**data, "q": q_supremum(p) / 2}
        return data

    @model_validator(mode="after")
    def _check_q(self) -> HypParams:
        if not (2 + 5 * self.p) * (0.5 - self.q) > 1 + 2 * self.p:
            raise ValueError(
                f"q={self.q:g} violates (2+5p)(1/2-q) > 1+2p (need q < {q_supremum(self.p):g})"
            )
        return self

    @property
    def k_n(self) -> float:
        return float(self.n) ** (2 + 5 * self.p)

    @property
    def support_bound(self) -> float:
        return float(self.n) ** (2 + 6 * self.p)

    @property
    def near_radius(self) -> float:
        return math.log(self.n)


class ExtensionScales(BaseModel):
    """Radii used when combining a quotient family with a kernel family."""

    n: int = Field(..., ge=2)
    p: float = Field(default=0.05, gt=0, lt=1)
    delta: float = Field(..., gt=0, le=1, description="Kernel compression exponent δ")
    case: Literal["polynomial", "hyperbolic"] = "polynomial"
    measured_support_radius: float | None = Field(
        default=None,
        ge=0,
        description="Measured support radius of the quotient family, used when larger",
    )

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_delta(self) -> ExtensionScales:
        if self.delta <= self.p:
            raise ValueError("delta must exceed p")
        return self

    @property
    def formula_support_radius(self) -> float:
        if self.case == "polynomial":
            return float(self.n) ** (1.5 + 5 * self.p)
        return float(self.n) ** (2 + 6 * self.p)

    @property
    def support_radius_source(self) -> str:
        measured = self.measured_support_radius
        if measured is not None and measured > self.formula_support_radius:
            return "measured"
        return "formula"

    @property
    def S_G(self) -> float:
        return max(self.formula_support_radius, self.measured_support_radius or 0.0)

    @property
    def S_H(self) -> float:
        return (float(self.n) ** (0.5 + 3 * self.p) * self.S_G) ** (1 / (self.delta - self.p))

    @property
    def S_bar(self) -> float:
        return float(self.n) ** self.p * self.S_H

    @property
    def near_radius(self) -> float:
        return math.sqrt(self.n) if self.case == "polynomial" else math.log(self.n)

    @property
    def far_radius(self) -> float:
        return 2 * self.S_G + self.S_H

    @property
    def kernel_radius(self) -> float:
        """Distance up to which the kernel family must be near-tolerant."""
        return 2 * self.S_G + self.near_radius

    @property
    def near_tolerance(self) -> float:
        return 1.0 / (2 * float(self.n) ** (1 + 2 * self.p))


# ==================== Ball and Growth Results ====================


class GrowthProfile(BaseModel):
    """Ball counts |B_r| for r = 0..Rmax with a growth-type fit."""

    counts: list[int] = Field(..., min_length=1)
    degree: float | None = Field(default=None, description="Fitted polynomial degree")
    residual: float | None = Field(default=None, description="RMS residual of the degree fit")
    exponential: bool = Field(default=False, description="Growth looks exponential")

    @field_validator("counts")
    @classmethod
    def _nondecreasing(cls, counts: list[int]) -> list[int]:
        if any(b < a for a, b in zip(counts, counts[1:])):
            raise ValueError("ball counts must be nondecreasing")
        return counts

    @property
    def r_max(self) -> int:
        return len(self.counts) - 1


class KSearchResult(BaseModel):
    """Smallest integer radius k with |B_{k+R_n}|/|B_{k−R_n}| ≤ 1 + 1/(2n^{1+2p})."""

    n: int
    p: float
    k: int
    radius_n: float = Field(..., description="R_n = sqrt(n)")
    ratio: float = Field(..., description="Achieved ratio at k")
    bound: float = Field(..., description="1 + 1/(2n^{1+2p})")
    radii_scanned: int = Field(default=0)

    @model_validator(mode="after")
    def _ratio_within_bound(self) -> KSearchResult:
        if self.ratio > self.bound:
            raise ValueError("achieved ratio exceeds bound")
        return self


# ==================== Verification Reports ====================


class ConditionResult(BaseModel):
    """Outcome of checking one inequality over a set of pairs or elements."""

    condition: str = Field(..., description="Stable condition identifier")
    n: int
    pairs_checked: int = 0
    violations: int = 0
    worst_margin: float | None = Field(
        default=None,
        description="Smallest (bound − value) seen; negative means violated",
    )
    vacuous: bool = Field(default=False, description="No pair fell in the condition's range")
    note: str | None = None

    @property
    def holds(self) -> bool:
        return self.violations == 0


class VerificationReport(BaseModel):
    """Collection of condition results plus named measurements."""

    subject: str
    n: int
    p: float | None = None
    conditions: list[ConditionResult] = Field(default_factory=list)
    measurements: dict[str, float | int | str | bool | None] = Field(default_factory=dict)

    def get(self, condition: str) -> ConditionResult:
        for result in self.conditions:
            if result.condition == condition:
                return result
        raise KeyError(condition)

    @property
    def passed(self) -> bool:
        return all(result.holds for result in self.conditions)


# ==================== Bounds ====================


class SequenceRule(BaseModel):
    """Sequence i ↦ coefficient·i^degree, or a table indexed from i = 1 (last entry repeats)."""

    coefficient: float = Field(default=1.0, ge=0)
    degree: float = Field(default=0.0)
    table: list[float] | None = Field(default=None, min_length=1)

    model_config = {"frozen": True}

    def value(self, i: int) -> float:
        if self.table is not None:
            return self.table[min(max(i, 1), len(self.table)) - 1]
        return self.coefficient * float(i) ** self.degree

    @property
    def is_zero(self) -> bool:
        if self.table is not None:
            return all(v == 0 for v in self.table)
        return self.coefficient == 0

    @property
    def is_polynomial(self) -> bool:
        return self.table is None


class IndexRule(BaseModel):
    """g(n) = round(coefficient·n^degree), at least 1."""

    coefficient: float = Field(default=1.0, gt=0)
    degree: float = Field(default=0.0, ge=0)
    rounding: Literal["floor", "ceil"] = "ceil"

    model_config = {"frozen": True}

    def value(self, n: int) -> int:
        raw = self.coefficient * float(n) ** self.degree
        rounded = math.floor(raw + 1e-12) if self.rounding == "floor" else math.ceil(raw - 1e-12)
        return max(1, rounded)


class LimitSystem(BaseModel):
    """Directed system G_1 ⊂ G_2 ⊂ … with per-index profile constants."""

    delta: float = Field(..., gt=0, le=1)
    C: SequenceRule = Field(default_factory=SequenceRule)
    C_tilde: SequenceRule = Field(default_factory=SequenceRule)
    D: SequenceRule = Field(default_factory=lambda: SequenceRule(coefficient=0.0))
    D_tilde: SequenceRule = Field(default_factory=lambda: SequenceRule(coefficient=0.0))
    g: IndexRule = Field(default_factory=IndexRule)
    name: str = "custom"

    model_config = {"frozen": True}


class BoundReport(BaseModel):
    """A compression lower bound with the trace that produced it."""

    value: float = Field(..., ge=0, le=1)
    formula: str = Field(..., description="Stable formula identifier")
    symbolic_limit: float | None = None
    numeric_proxy: float | None = None
    trace: dict[str, Any] = Field(default_factory=dict)
    caveats: list[str] = Field(default_factory=list)


class EmpiricalExponent(BaseModel):
    """Slope of the dyadic lower envelope of log‖ΔF‖ against log d."""

    slope: float
    residual: float
    bins: int
    pairs_used: int
    flagged: bool = Field(default=False, description="Residual too large to trust the slope")
    points: list[tuple[float, float]] = Field(default_factory=list)


# ==================== Run Config ====================


def _split_ints(value: Any) -> Any:
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(",") if part.strip()]
        expanded: list[int] = []
        for part in parts:
            lo, sep, hi = part.partition("-")
            if sep and lo:
                expanded.extend(range(int(lo), int(hi) + 1))
            else:
                expanded.append(int(part))
        return expanded
    return value


class RunConfig(BaseModel):
    """Validated CLI run configuration (config file merged with flags)."""

    command: Literal["ball", "verify", "bound", "estimate", "cache"]
    group: str | None = Field(default=None, description="Group spec literal")
    radius: float | None = Field(default=None, ge=0)
    r_max: int | None = Field(default=None, ge=1)
    n_values: list[int] = Field(default_factory=list)
    p: float = Field(default=0.05, ge=0, lt=1)
    q: float | None = Field(default=None, gt=0)
    r: float = Field(default=0.5, gt=0)
    a: float = Field(default=math.sqrt(2), gt=0)
    b: float | None = Field(default=None, gt=0)
    delta: float = Field(default=1.0, gt=0, le=1)
    C: float = Field(default=1.0, gt=0)
    D: float = Field(default=0.0, ge=0)
    C_tilde: float = Field(default=1.0, gt=0)
    D_tilde: float = Field(default=0.0, ge=0)
    target: Literal["kernel", "poly", "hyp", "extension"] | None = None
    formula: (
        Literal[
            "limit",
            "limit-quasi",
            "limit-finite-p",
            "extension-poly",
            "extension-hyp",
            "wreath",
            "direct-sum",
        ]
        | None
    ) = None
    alpha: float = Field(default=1.0, gt=0, le=1)
    d: float = Field(default=1.0, ge=0)
    n_max: int = Field(default=1_000_000, ge=10)
    embedding: Literal["identity", "sqrt"] = "identity"
    d_min: float = Field(default=2.0, ge=0)
    boundary: str = Field(default="b", description="Boundary point 'preperiod|period'")
    work_radius: int = Field(default=2, ge=0)
    arithmetic: Literal["float", "exact"] = "float"
    cache_action: Literal["build", "list", "show", "clear"] | None = None
    seed: int = 0
    samples: int = Field(default=0, ge=0, description="Sampled property checks per scale")
    jobs: int = Field(default=1, ge=1)
    memory_budget: int | None = Field(default=None, gt=0)
    cache_dir: str | None = None
    output: str | None = None
    points_output: str | None = None

    model_config = {"frozen": True}

    @field_validator("n_values", mode="before")
    @classmethod
    def _parse_n_values(cls, value: Any) -> Any:
        return _split_ints(value)

    @field_validator("n_values")
    @classmethod
    def _positive_n(cls, values: list[int]) -> list[int]:
        if any(v < 1 for v in values):
            raise ValueError("n values must be positive")
        return values


class CommandResult(BaseModel):
    """Standard result wrapper for CLI commands."""

    success: bool = Field(default=True, description="Whether the command succeeded")
    data: Any = Field(default=None, description="Command output")
    error: str | None = Field(default=None, description="Error message if success is False")
    category: str | None = Field(default=None, description="Error category if success is False")

    @classmethod
    def ok(cls, data: Any) -> CommandResult:
        """Create a successful result.

        Args:
            data: The result data.

        Returns:
            CommandResult with success=True.
        """
        return cls(success=True, data=data)

    @classmethod
    def fail(cls, error: str, category: str = "internal") -> CommandResult:
        """Create a failed result.

        Args:
            error: Error message.
            category: Machine-readable error category.

        Returns:
            CommandResult with success=False.
        """
        return cls(success=False, error=error, category=category)
