"""Concrete finitely generated groups with length functions.

Elements are nested tuples of ints so they hash, compare and encode without
per-model classes. Every model exposes multiply/inverse/identity, a length
function, and a symmetric set of local moves from which balls are grown.
"""

from __future__ import annotations

import logging
import struct
import threading
from abc import ABC, abstractmethod
from collections import deque
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from hilbert_compression.errors import InvalidParameterError, UnsupportedModelError
from hilbert_compression.models import (
    GROUP_SPEC_ADAPTER,
    DirectSumFiniteSpec,
    ExtensionSpec,
    FreeAbelianSpec,
    FreeGroupSpec,
    GroupSpec,
    HeisenbergSpec,
    LamplighterSpec,
    PluginGroupSpec,
    canonical_spec,
)

logger = logging.getLogger(__name__)

Element = tuple[Any, ...]

DEFAULT_LETTERS = "bstuvwxyz"


# ==================== Canonical Encoding ====================


def encode_element(x: Any) -> bytes:
    """Injective, platform-independent byte encoding of a nested int tuple.

    Tuples are ``b"T"`` + big-endian u32 arity + items; ints are ``b"I"`` +
    big-endian signed 64-bit value.
    """
    if isinstance(x, tuple):
        return b"T" + struct.pack(">I", len(x)) + b"".join(encode_element(item) for item in x)
    if isinstance(x, bool) or not isinstance(x, int | np.integer):
        raise TypeError(f"Cannot encode element component of type {type(x).__name__}")
    return b"I" + struct.pack(">q", int(x))


def decode_element(data: bytes) -> Element:
    """Inverse of :func:`encode_element` for top-level tuples."""
    value, offset = _decode(data, 0)
    if offset != len(data) or not isinstance(value, tuple):
        raise ValueError("Trailing or malformed element bytes")
    return value


def _decode(data: bytes, offset: int) -> tuple[Any, int]:
    tag = data[offset : offset + 1]
    if tag == b"I":
        (value,) = struct.unpack_from(">q", data, offset + 1)
        return value, offset + 9
    if tag == b"T":
        (arity,) = struct.unpack_from(">I", data, offset + 1)
        offset += 5
        items = []
        for _ in range(arity):
            item, offset = _decode(data, offset)
            items.append(item)
        return tuple(items), offset
    raise ValueError(f"Bad element tag at offset {offset}")


# ==================== Group Models ====================


class GroupModel(ABC):
    """A finitely generated group with a proper length function."""

    is_word_metric: bool = True
    polynomial_growth: bool = False

    def __init__(self, spec: BaseModel) -> None:
        self.spec = spec

    @property
    def name(self) -> str:
        return canonical_spec(self.spec)

    @property
    @abstractmethod
    def identity(self) -> Element: ...

    @abstractmethod
    def multiply(self, x: Element, y: Element) -> Element: ...

    @abstractmethod
    def inverse(self, x: Element) -> Element: ...

    @abstractmethod
    def length(self, x: Element) -> int: ...

    @property
    @abstractmethod
    def generators(self) -> tuple[Element, ...]:
        """Symmetric generating set; for word metrics, the one the length is taken over."""

    def local_moves(self, radius: float) -> Sequence[Element]:  # noqa: ARG002
        """Moves that connect every ball of the given radius to the identity."""
        return self.generators

    def canonical_bytes(self, x: Element) -> bytes:
        return encode_element(x)

    def distance(self, x: Element, y: Element) -> int:
        return self.length(self.multiply(self.inverse(x), y))

    def parse_element(self, text: str) -> Element:
        raise UnsupportedModelError(f"{self.name} does not accept element literals")

    def format_element(self, x: Element) -> str:
        return ",".join(str(v) for v in x)

    def random_element(self, rng: np.random.Generator, word_length: int) -> Element:
        moves = list(self.local_moves(word_length)) or [self.identity]
        x = self.identity
        for index in rng.integers(0, len(moves), size=word_length):
            x = self.multiply(x, moves[int(index)])
        return x


class FreeAbelianGroup(GroupModel):
    """ℤ^d with word length over ±e_i, i.e. the ℓ¹ norm."""

    polynomial_growth = True

    def __init__(self, spec: FreeAbelianSpec) -> None:
        super().__init__(spec)
        self.rank = spec.rank
        gens: list[Element] = []
        for i in range(self.rank):
            for sign in (1, -1):
                gens.append(tuple(sign if j == i else 0 for j in range(self.rank)))
        self._generators = tuple(gens)

    @property
    def identity(self) -> Element:
        return (0,) * self.rank

    def multiply(self, x: Element, y: Element) -> Element:
        return tuple(a + b for a, b in zip(x, y))

    def inverse(self, x: Element) -> Element:
        return tuple(-a for a in x)

    def length(self, x: Element) -> int:
        return sum(abs(a) for a in x)

    @property
    def generators(self) -> tuple[Element, ...]:
        return self._generators

    def parse_element(self, text: str) -> Element:
        parts = [part for part in text.strip().strip("()").split(",") if part.strip()]
        if len(parts) != self.rank:
            raise InvalidParameterError(f"Expected {self.rank} integers, got {text!r}")
        return tuple(int(part) for part in parts)


class FreeGroup(GroupModel):
    """Free group on ``rank`` letters; elements are reduced words of ±(i+1)."""

    def __init__(self, spec: FreeGroupSpec) -> None:
        super().__init__(spec)
        self.rank = spec.rank
        self.letters = spec.letters or DEFAULT_LETTERS[: self.rank]
        self.polynomial_growth = self.rank == 1
        self._generators = tuple((sign * (i + 1),) for i in range(self.rank) for sign in (1, -1))

    @property
    def identity(self) -> Element:
        return ()

    def multiply(self, x: Element, y: Element) -> Element:
        cancel = 0
        limit = min(len(x), len(y))
        while cancel < limit and x[len(x) - 1 - cancel] == -y[cancel]:
            cancel += 1
        return x[: len(x) - cancel] + y[cancel:]

    def inverse(self, x: Element) -> Element:
        return tuple(-g for g in reversed(x))

    def length(self, x: Element) -> int:
        return len(x)

    @property
    def generators(self) -> tuple[Element, ...]:
        return self._generators

    def letter_code(self, char: str) -> int:
        index = self.letters.find(char.lower())
        if index < 0:
            raise InvalidParameterError(f"Unknown generator {char!r} (letters: {self.letters})")
        return index + 1 if char.islower() else -(index + 1)

    def parse_element(self, text: str) -> Element:
        word = text.strip()
        if word in ("", "1", "e"):
            return ()
        x: Element = ()
        for char in word:
            x = self.multiply(x, (self.letter_code(char),))
        return x

    def format_element(self, x: Element) -> str:
        if not x:
            return "1"
        return "".join(
            self.letters[abs(g) - 1] if g > 0 else self.letters[abs(g) - 1].upper() for g in x
        )


class HeisenbergGroup(GroupModel):
    """H₃ as triples (a, b, c) ↔ [[1,a,c],[0,1,b],[0,0,1]] over generators x, y.

    Lengths come from a breadth-first search that is memoized and grown on
    demand; insertion into the memo is serialized.
    """

    polynomial_growth = True

    def __init__(self, spec: BaseModel | None = None) -> None:
        super().__init__(spec or HeisenbergSpec())
        self._generators: tuple[Element, ...] = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))
        self._distances: dict[Element, int] = {(0, 0, 0): 0}
        self._frontier: list[Element] = [(0, 0, 0)]
        self._radius = 0
        self._lock = threading.Lock()

    @property
    def identity(self) -> Element:
        return (0, 0, 0)

    def multiply(self, x: Element, y: Element) -> Element:
        return (x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1])

    def inverse(self, x: Element) -> Element:
        return (-x[0], -x[1], -x[2] + x[0] * x[1])

    def length(self, x: Element) -> int:
        distance = self._distances.get(x)
        while distance is None:
            self._grow()
            distance = self._distances.get(x)
        return distance

    def _grow(self) -> None:
        with self._lock:
            fresh: list[Element] = []
            for element in self._frontier:
                for gen in self._generators:
                    neighbor = self.multiply(element, gen)
                    if neighbor not in self._distances:
                        self._distances[neighbor] = self._radius + 1
                        fresh.append(neighbor)
            self._frontier = fresh
            self._radius += 1
        logger.debug("Heisenberg length memo grown to radius %d", self._radius)

    @property
    def generators(self) -> tuple[Element, ...]:
        return self._generators

    def parse_element(self, text: str) -> Element:
        literal = text.strip()
        if literal and set(literal) <= set("xyXY"):
            codes = {"x": (1, 0, 0), "X": (-1, 0, 0), "y": (0, 1, 0), "Y": (0, -1, 0)}
            x = self.identity
            for char in literal:
                x = self.multiply(x, codes[char])
            return x
        parts = [part for part in literal.strip("()").split(",") if part.strip()]
        if len(parts) != 3:
            raise InvalidParameterError(f"Expected 'a,b,c' or a word in x,y,X,Y, got {text!r}")
        return tuple(int(part) for part in parts)


class DirectSumFiniteGroup(GroupModel):
    """⊕ F_i with l(g) = min{n : g ∈ F_0 ⊕ … ⊕ F_n}; an ultrametric, not a word metric."""

    is_word_metric = False
    polynomial_growth = True

    def __init__(self, spec: DirectSumFiniteSpec) -> None:
        super().__init__(spec)
        self.orders = tuple(spec.orders)

    @property
    def identity(self) -> Element:
        return (0,) * len(self.orders)

    def multiply(self, x: Element, y: Element) -> Element:
        return tuple((a + b) % m for a, b, m in zip(x, y, self.orders))

    def inverse(self, x: Element) -> Element:
        return tuple((-a) % m for a, m in zip(x, self.orders))

    def length(self, x: Element) -> int:
        for index in range(len(x) - 1, -1, -1):
            if x[index]:
                return index
        return 0

    def local_moves(self, radius: float) -> Sequence[Element]:
        moves: list[Element] = []
        for i, order in enumerate(self.orders):
            if i == 0 or i > radius or order == 1:
                continue
            for step in {1, order - 1}:
                moves.append(tuple(step if j == i else 0 for j in range(len(self.orders))))
        return moves

    @property
    def generators(self) -> tuple[Element, ...]:
        return tuple(self.local_moves(len(self.orders)))

    def parse_element(self, text: str) -> Element:
        parts = [part for part in text.strip().strip("()").split(",") if part.strip()]
        if len(parts) != len(self.orders):
            raise InvalidParameterError(f"Expected {len(self.orders)} residues, got {text!r}")
        return tuple(int(part) % m for part, m in zip(parts, self.orders))


class LamplighterRestrictedGroup(GroupModel):
    """Cursor-at-origin subgroup {(f, 0)} of (ℤ/m) ≀ ℤ, or of ℤ ≀ ℤ when m is None.

    Elements are sorted ((position, value), ...) with nonzero canonical values.
    The induced length is the lamp cost plus the shortest closed walk from 0
    covering the support: Σ cost(f(i)) + 2·|leftmost| + 2·|rightmost|.
    """

    is_word_metric = False

    def __init__(self, spec: LamplighterSpec) -> None:
        super().__init__(spec)
        self.order = spec.lamp_order
        self.polynomial_growth = self.order == 1

    def _canon(self, value: int) -> int:
        return value % self.order if self.order is not None else value

    def lamp_cost(self, value: int) -> int:
        if self.order is None:
            return abs(value)
        value %= self.order
        return min(value, self.order - value)

    @property
    def identity(self) -> Element:
        return ()

    def multiply(self, x: Element, y: Element) -> Element:
        lamps = dict(x)
        for position, value in y:
            lamps[position] = self._canon(lamps.get(position, 0) + value)
        return tuple(sorted((pos, val) for pos, val in lamps.items() if val != 0))

    def inverse(self, x: Element) -> Element:
        return tuple((pos, self._canon(-val)) for pos, val in x)

    def length(self, x: Element) -> int:
        if not x:
            return 0
        leftmost = min(0, x[0][0])
        rightmost = max(0, x[-1][0])
        return sum(self.lamp_cost(val) for _, val in x) + 2 * (rightmost - leftmost)

    def local_moves(self, radius: float) -> Sequence[Element]:
        if self.order == 1:
            return []
        reach = int(radius) // 2
        steps = [1, -1] if self.order is None else sorted({1, self.order - 1})
        return [((pos, step),) for pos in range(-reach, reach + 1) for step in steps]

    @property
    def generators(self) -> tuple[Element, ...]:
        return tuple(self.local_moves(2))

    def parse_element(self, text: str) -> Element:
        literal = text.strip()
        if literal in ("", "1", "e"):
            return ()
        x: Element = ()
        for item in literal.split(","):
            position, _, value = item.partition(":")
            x = self.multiply(x, ((int(position), self._canon(int(value or "1"))),))
        return x

    def format_element(self, x: Element) -> str:
        return ",".join(f"{pos}:{val}" for pos, val in x) or "1"


class ProductGroup(GroupModel):
    """Direct product G × H with l(g, h) = l_G(g) + l_H(h)."""

    def __init__(self, spec: BaseModel, left: GroupModel, right: GroupModel) -> None:
        super().__init__(spec)
        self.left = left
        self.right = right
        self.is_word_metric = left.is_word_metric and right.is_word_metric
        self.polynomial_growth = left.polynomial_growth and right.polynomial_growth

    @property
    def identity(self) -> Element:
        return (self.left.identity, self.right.identity)

    def multiply(self, x: Element, y: Element) -> Element:
        return (self.left.multiply(x[0], y[0]), self.right.multiply(x[1], y[1]))

    def inverse(self, x: Element) -> Element:
        return (self.left.inverse(x[0]), self.right.inverse(x[1]))

    def length(self, x: Element) -> int:
        return self.left.length(x[0]) + self.right.length(x[1])

    def local_moves(self, radius: float) -> Sequence[Element]:
        return [(s, self.right.identity) for s in self.left.local_moves(radius)] + [
            (self.left.identity, t) for t in self.right.local_moves(radius)
        ]

    @property
    def generators(self) -> tuple[Element, ...]:
        return tuple((s, self.right.identity) for s in self.left.generators) + tuple(
            (self.left.identity, t) for t in self.right.generators
        )

    def parse_element(self, text: str) -> Element:
        left, sep, right = text.partition("|")
        if not sep:
            raise InvalidParameterError(f"Product element literal needs 'g|h', got {text!r}")
        return (self.left.parse_element(left), self.right.parse_element(right))

    def format_element(self, x: Element) -> str:
        return f"{self.left.format_element(x[0])}|{self.right.format_element(x[1])}"


# ==================== Extensions ====================


@dataclass(frozen=True)
class ExtensionModel:
    """1 → H → Γ → G → 1 with projection π, kernel inclusion and a section σ.

    ``lifts(x)`` must return exactly the minimal-length lifts of x; the section
    picks the one with the smallest canonical bytes.
    """

    spec: ExtensionSpec
    total: GroupModel
    kernel: GroupModel
    quotient: GroupModel
    project: Callable[[Element], Element]
    include: Callable[[Element], Element]
    kernel_part: Callable[[Element], Element]
    lifts: Callable[[Element], Iterable[Element]]
    _sections: dict[Element, Element] = field(default_factory=dict, compare=False, repr=False)

    def section(self, x: Element) -> Element:
        cached = self._sections.get(x)
        if cached is None:
            cached = min(self.lifts(x), key=self.total.canonical_bytes)
            self._sections[x] = cached
        return cached

    def induced_quotient_length(self, gamma: Element) -> int:
        return self.quotient.length(self.project(gamma))

    def project_to_kernel(self, gamma: Element) -> Element:
        lift = self.section(self.project(gamma))
        return self.kernel_part(self.total.multiply(gamma, self.total.inverse(lift)))


def induced_quotient_length(ext: ExtensionModel, x: Element) -> int:
    """l_G(π(x)) = inf{l_Γ(y) : π(y) = π(x)}, evaluated as word length of π(x) over π(S)."""
    return ext.induced_quotient_length(x)


def _heisenberg_kernel_part(gamma: Element) -> Element:
    if gamma[0] or gamma[1]:
        raise InvalidParameterError(f"{gamma} is not central")
    return (gamma[2],)


def _heisenberg_lifts(x: Element) -> list[Element]:
    a, b = x
    lo, hi = min(0, a * b), max(0, a * b)
    return [(a, b, c) for c in range(lo, hi + 1)]


def make_extension(spec: ExtensionSpec) -> ExtensionModel:
    """Build an extension model from its spec.

    Raises:
        InvalidParameterError: If the action does not fit the factors.
    """
    if spec.action == "trivial":
        quotient = make_group(spec.quotient)
        kernel = make_group(spec.kernel)
        total = ProductGroup(spec, quotient, kernel)
        return ExtensionModel(
            spec=spec,
            total=total,
            kernel=kernel,
            quotient=quotient,
            project=lambda gamma: gamma[0],
            include=lambda h: (quotient.identity, h),
            kernel_part=lambda gamma: gamma[1],
            lifts=lambda x: [(x, kernel.identity)],
        )
    if spec.quotient != FreeAbelianSpec(rank=2) or spec.kernel != FreeAbelianSpec(rank=1):
        raise InvalidParameterError(
            "The heisenberg action needs quotient free_abelian:2 and kernel free_abelian:1"
        )
    return ExtensionModel(
        spec=spec,
        total=HeisenbergGroup(spec),
        kernel=FreeAbelianGroup(FreeAbelianSpec(rank=1)),
        quotient=FreeAbelianGroup(FreeAbelianSpec(rank=2)),
        project=lambda gamma: (gamma[0], gamma[1]),
        include=lambda h: (0, 0, h[0]),
        kernel_part=_heisenberg_kernel_part,
        lifts=_heisenberg_lifts,
    )


# ==================== Construction ====================


def make_group(spec: GroupSpec) -> GroupModel:
    """Instantiate the group model described by ``spec``."""
    if isinstance(spec, FreeAbelianSpec):
        return FreeAbelianGroup(spec)
    if isinstance(spec, FreeGroupSpec):
        return FreeGroup(spec)
    if isinstance(spec, HeisenbergSpec):
        return HeisenbergGroup(spec)
    if isinstance(spec, DirectSumFiniteSpec):
        return DirectSumFiniteGroup(spec)
    if isinstance(spec, LamplighterSpec):
        return LamplighterRestrictedGroup(spec)
    if isinstance(spec, ExtensionSpec):
        return make_extension(spec).total
    if isinstance(spec, PluginGroupSpec):
        from hilbert_compression.plugin import build_plugin_group

        return build_plugin_group(spec)
    raise InvalidParameterError(f"Unknown group spec: {spec!r}")


def _parse_spec_dict(text: str) -> dict[str, Any]:
    kind, _, args = text.strip().partition(":")
    kind = kind.strip().lower().replace("-", "_")
    if kind == "free_abelian":
        return {"kind": kind, "rank": int(args or "1")}
    if kind == "free_group":
        rank, _, letters = args.partition(":")
        data: dict[str, Any] = {"kind": kind, "rank": int(rank or "2")}
        if letters:
            data["letters"] = letters
        return data
    if kind == "heisenberg":
        return {"kind": kind}
    if kind == "direct_sum_finite":
        return {"kind": kind, "orders": [int(v) for v in args.split(",") if v.strip()]}
    if kind == "lamplighter":
        order = args.strip().lower()
        return {"kind": kind, "lamp_order": None if order in ("inf", "z") else int(order or "2")}
    if kind == "plugin":
        name, _, raw_params = args.partition(":")
        params = dict(item.split("=", 1) for item in raw_params.split(",") if "=" in item)
        return {"kind": kind, "name": name, "params": params}
    if kind == "extension":
        action, _, rest = args.partition("(")
        action = action.strip() or "trivial"
        if action == "heisenberg" and not rest:
            return {
                "kind": kind,
                "action": action,
                "quotient": {"kind": "free_abelian", "rank": 2},
                "kernel": {"kind": "free_abelian", "rank": 1},
            }
        quotient, sep, kernel = rest.rstrip(")").partition(";")
        if not sep:
            raise ValueError("extension literal needs 'extension:action(quotient;kernel)'")
        return {
            "kind": kind,
            "action": action,
            "quotient": _parse_spec_dict(quotient),
            "kernel": _parse_spec_dict(kernel),
        }
    raise ValueError(f"unknown group kind {kind!r}")


def parse_group_spec(text: str) -> GroupSpec:
    """Parse a group literal such as ``free_abelian:2`` or ``direct_sum_finite:1,2,2,2``.

    JSON objects are accepted as well.

    Raises:
        InvalidParameterError: With the validation diagnostic if the literal is invalid.
    """
    try:
        if text.strip().startswith("{"):
            return GROUP_SPEC_ADAPTER.validate_json(text)
        return GROUP_SPEC_ADAPTER.validate_python(_parse_spec_dict(text))
    except ValidationError as e:
        raise InvalidParameterError(f"Invalid group spec {text!r}: {e}") from e
    except ValueError as e:
        raise InvalidParameterError(f"Invalid group spec {text!r}: {e}") from e


# ==================== Oracles and Sampled Checks ====================


def cayley_bfs(model: GroupModel, radius: int) -> dict[Element, int]:
    """Graph distance from the identity for every element within ``radius``.

    Raises:
        UnsupportedModelError: If the model's length is not a word metric.
    """
    if not model.is_word_metric:
        raise UnsupportedModelError(f"{model.name} is not a word metric")
    distances: dict[Element, int] = {model.identity: 0}
    queue: deque[Element] = deque([model.identity])
    while queue:
        element = queue.popleft()
        depth = distances[element]
        if depth == radius:
            continue
        for gen in model.generators:
            neighbor = model.multiply(element, gen)
            if neighbor not in distances:
                distances[neighbor] = depth + 1
                queue.append(neighbor)
    return distances


def lamplighter_bfs(
    order: int | None, window: int, value_bound: int = 2
) -> dict[Element, int]:
    """Distances in the full wreath product, restricted to cursor position 0.

    Uses generators t^{±1} (move the cursor) and e₀^{±1} (change the lamp under
    the cursor). Cursor and lamps are confined to [−window, window], which
    contains every geodesic to a configuration supported there; for ℤ lamps
    values are confined to [−value_bound, value_bound].

    Returns:
        Map from restricted elements ((position, value), ...) to distance.
    """
    size = 2 * window + 1
    start = ((0,) * size, 0)
    distances = {start: 0}
    queue: deque[tuple[tuple[int, ...], int]] = deque([start])
    while queue:
        state = queue.popleft()
        lamps, cursor = state
        depth = distances[state]
        neighbors: list[tuple[tuple[int, ...], int]] = []
        for move in (-1, 1):
            if -window <= cursor + move <= window:
                neighbors.append((lamps, cursor + move))
            slot = cursor + window
            value = lamps[slot] + move
            if order is not None:
                value %= order
            elif abs(value) > value_bound:
                continue
            neighbors.append((lamps[:slot] + (value,) + lamps[slot + 1 :], cursor))
        for neighbor in neighbors:
            if neighbor not in distances:
                distances[neighbor] = depth + 1
                queue.append(neighbor)
    restricted: dict[Element, int] = {}
    for (lamps, cursor), depth in distances.items():
        if cursor == 0:
            key = tuple((i - window, v) for i, v in enumerate(lamps) if v != 0)
            restricted[key] = depth
    return restricted


def axiom_violations(
    model: GroupModel, samples: int, seed: int = 0, word_length: int = 4
) -> dict[str, int]:
    """Count group-axiom and length-axiom failures on random samples.

    Returns:
        Violation counts keyed by axiom name; all zero for a valid model.
    """
    rng = np.random.default_rng(seed)
    axioms = (
        "associativity",
        "identity",
        "inverse",
        "length_identity",
        "length_symmetry",
        "length_subadditivity",
    )
    counts = dict.fromkeys(axioms, 0)
    e = model.identity
    for _ in range(samples):
        x = model.random_element(rng, word_length)
        y = model.random_element(rng, word_length)
        z = model.random_element(rng, word_length)
        if model.multiply(model.multiply(x, y), z) != model.multiply(x, model.multiply(y, z)):
            counts["associativity"] += 1
        if model.multiply(x, e) != x or model.multiply(e, x) != x:
            counts["identity"] += 1
        if model.multiply(x, model.inverse(x)) != e:
            counts["inverse"] += 1
        lx = model.length(x)
        if (lx == 0) != (x == e):
            counts["length_identity"] += 1
        if lx != model.length(model.inverse(x)):
            counts["length_symmetry"] += 1
        if model.length(model.multiply(x, y)) > lx + model.length(y):
            counts["length_subadditivity"] += 1
    return counts
