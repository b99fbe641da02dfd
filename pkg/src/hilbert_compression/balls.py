"""Ball enumeration, growth profiles, the k(n) radius search and the ball cache.

Cache file layout (all integers big-endian):

    b"HCBALL" | u16 version | u32 len + UTF-8 canonical spec | f64 radius | u64 count
    count × ( u32 len + canonical element bytes | i64 length )
"""

from __future__ import annotations

import hashlib
import logging
import math
import struct
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO

import numpy as np

from hilbert_compression.config import get_settings
from hilbert_compression.errors import (
    CacheIOError,
    CacheMismatchError,
    InvalidParameterError,
    ResourceBudgetError,
    UnsupportedModelError,
)
from hilbert_compression.groups import Element, GroupModel, decode_element, encode_element
from hilbert_compression.models import GrowthProfile, KSearchResult

logger = logging.getLogger(__name__)

CACHE_MAGIC = b"HCBALL"
CACHE_VERSION = 1
CACHE_SUFFIX = ".hcball"

# Rough per-element cost of a tuple key, its dict slot and list entry.
ELEMENT_OVERHEAD_BYTES = 240


# ==================== Ball ====================


@dataclass(frozen=True, eq=False)
class Ball:
    """Exact ball {x : l(x) ≤ radius}, sorted by (length, canonical bytes)."""

    spec: str
    radius: float
    elements: tuple[Element, ...]
    lengths: np.ndarray
    index: dict[Element, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x: object) -> bool:
        return x in self.index

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ball):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.radius == other.radius
            and self.elements == other.elements
            and np.array_equal(self.lengths, other.lengths)
        )

    __hash__ = None  # type: ignore[assignment]

    def position(self, x: Element) -> int:
        return self.index[x]

    def length_of(self, x: Element) -> int:
        return int(self.lengths[self.index[x]])

    def count_within(self, r: float) -> int:
        """|B_r| for r ≤ radius; 0 for negative r."""
        if r < 0:
            return 0
        if r > self.radius:
            raise InvalidParameterError(f"Radius {r} exceeds enumerated radius {self.radius}")
        return int(np.searchsorted(self.lengths, math.floor(r), side="right"))

    def within(self, r: float) -> tuple[Element, ...]:
        return self.elements[: self.count_within(r)]


def _element_budget(model: GroupModel, memory_budget: int) -> int:
    per_element = ELEMENT_OVERHEAD_BYTES + 2 * len(model.canonical_bytes(model.identity))
    return max(1, memory_budget // per_element)


def _finish(model: GroupModel, radius: float, found: dict[Element, int]) -> Ball:
    keyed = sorted(found.items(), key=lambda item: (item[1], model.canonical_bytes(item[0])))
    elements = tuple(element for element, _ in keyed)
    lengths = np.fromiter((length for _, length in keyed), dtype=np.int64, count=len(keyed))
    return Ball(
        spec=model.name,
        radius=float(radius),
        elements=elements,
        lengths=lengths,
        index={element: i for i, element in enumerate(elements)},
    )


def enumerate_ball(model: GroupModel, radius: float, memory_budget: int | None = None) -> Ball:
    """Enumerate B(e, radius) exactly.

    Word metrics are grown layer by layer over the generators. Other lengths
    are explored over ``model.local_moves(radius)``, keeping elements of length
    at most ``radius``.

    Args:
        model: Group model.
        radius: Nonnegative radius.
        memory_budget: Budget in bytes; defaults to the configured budget.

    Returns:
        The ball.

    Raises:
        InvalidParameterError: If radius is negative or not finite.
        ResourceBudgetError: If the estimated size exceeds the budget.
    """
    if not math.isfinite(radius) or radius < 0:
        raise InvalidParameterError(f"Ball radius must be finite and nonnegative, got {radius}")
    budget = memory_budget if memory_budget is not None else get_settings().memory_budget_bytes
    limit = _element_budget(model, budget)
    found: dict[Element, int] = {model.identity: 0}

    def over_budget(reached: float | None) -> ResourceBudgetError:
        return ResourceBudgetError(
            f"Ball of {model.name} exceeded the memory budget of {budget} bytes "
            f"(complete up to radius {reached}, {len(found)} elements)",
            radius_reached=reached,
            elements=len(found),
        )

    if model.is_word_metric:
        frontier = [model.identity]
        depth = 0
        while frontier and depth + 1 <= radius:
            fresh: list[Element] = []
            for element in frontier:
                for gen in model.generators:
                    neighbor = model.multiply(element, gen)
                    if neighbor not in found:
                        found[neighbor] = depth + 1
                        fresh.append(neighbor)
                        if len(found) > limit:
                            raise over_budget(depth)
            frontier = fresh
            depth += 1
            logger.debug("%s: layer %d has %d elements", model.name, depth, len(fresh))
    else:
        moves = model.local_moves(radius)
        stack = [model.identity]
        while stack:
            element = stack.pop()
            for move in moves:
                neighbor = model.multiply(element, move)
                if neighbor in found:
                    continue
                length = model.length(neighbor)
                if length <= radius:
                    found[neighbor] = length
                    stack.append(neighbor)
                    if len(found) > limit:
                        raise over_budget(None)
    return _finish(model, radius, found)


# ==================== Growth ====================


def growth_profile(
    model: GroupModel, r_max: int, memory_budget: int | None = None
) -> GrowthProfile:
    """Ball counts |B_r| for r = 0..r_max with a growth fit.

    The degree is the least-squares slope of log|B_r| against log r over the
    upper half of the radii. Growth is flagged exponential when the per-step
    log increments do not decay: polynomial growth has increments ~ d/r.
    """
    if r_max < 1:
        raise InvalidParameterError("r_max must be at least 1")
    ball = enumerate_ball(model, r_max, memory_budget)
    counts = [ball.count_within(r) for r in range(r_max + 1)]
    radii = np.arange(max(1, r_max // 2), r_max + 1, dtype=float)
    log_counts = np.log(np.asarray(counts, dtype=float)[radii.astype(int)])
    degree: float | None = None
    residual: float | None = None
    if radii.size >= 2:
        coeffs = np.polyfit(np.log(radii), log_counts, 1)
        fitted = np.polyval(coeffs, np.log(radii))
        degree = float(coeffs[0])
        residual = float(np.sqrt(np.mean((fitted - log_counts) ** 2)))
    exponential = False
    if r_max >= 4:
        increments = np.diff(np.log(np.asarray(counts, dtype=float)))
        quarter = max(1, r_max // 4)
        early = float(np.mean(increments[quarter : 2 * quarter]))
        late = float(np.mean(increments[-quarter:]))
        exponential = early > 0 and late / early > 0.75
    return GrowthProfile(
        counts=counts,
        degree=None if exponential else degree,
        residual=residual,
        exponential=exponential,
    )


class _CountOracle:
    """|B_r| for growing r, re-enumerating at doubled radius when needed."""

    def __init__(self, model: GroupModel, memory_budget: int | None) -> None:
        self.model = model
        self.memory_budget = memory_budget
        self.ball = enumerate_ball(model, 0, memory_budget)

    def count(self, r: float) -> int:
        if r < 0:
            return 0
        if r > self.ball.radius:
            target = max(math.floor(r), 2 * self.ball.radius, 8)
            self.ball = enumerate_ball(self.model, target, self.memory_budget)
            logger.debug("%s: count oracle extended to radius %g", self.model.name, target)
        return self.ball.count_within(r)


def find_k_n(
    model: GroupModel, n: int, p: float, memory_budget: int | None = None
) -> KSearchResult:
    """Smallest integer r ≥ √n with |B_{r+√n}| / |B_{r−√n}| ≤ 1 + 1/(2n^{1+2p}).

    The count oracle doubles its radius, so the scan either returns or raises
    ResourceBudgetError. Under the default 2 GiB budget at p = 0.05 it
    completes for ℤ up to n = 1024, for ℤ² up to n = 16 and for the
    Heisenberg group only at n = 1; H₃ at n = 2 needs a ball beyond radius 32.

    Raises:
        UnsupportedModelError: If the model does not have polynomial growth.
        ResourceBudgetError: If the scan outgrows the memory budget before success.
    """
    if n < 1:
        raise InvalidParameterError("n must be positive")
    if not 0 <= p < 1:
        raise InvalidParameterError("p must lie in [0, 1)")
    if not model.polynomial_growth:
        raise UnsupportedModelError(f"{model.name} does not have polynomial growth")
    radius_n = math.sqrt(n)
    bound = 1.0 + 1.0 / (2.0 * float(n) ** (1 + 2 * p))
    oracle = _CountOracle(model, memory_budget)
    r = math.ceil(radius_n - 1e-12)
    scanned = 0
    largest = 0.0
    smallest = math.inf
    while True:
        try:
            upper = oracle.count(math.floor(r + radius_n + 1e-12))
        except ResourceBudgetError as e:
            raise ResourceBudgetError(
                f"k(n) scan for {model.name} at n={n} exceeded the memory budget at r={r}; "
                f"ratios seen ranged over [{smallest:g}, {largest:g}]",
                radius_reached=e.radius_reached,
                elements=e.elements,
                largest_ratio=largest,
                smallest_ratio=smallest,
            ) from e
        lower = oracle.count(math.floor(r - radius_n + 1e-12))
        ratio = upper / lower if lower else math.inf
        scanned += 1
        if ratio <= bound:
            return KSearchResult(
                n=n, p=p, k=r, radius_n=radius_n, ratio=ratio, bound=bound, radii_scanned=scanned
            )
        if math.isfinite(ratio):
            largest = max(largest, ratio)
        smallest = min(smallest, ratio)
        r += 1


# ==================== Cache ====================


def cache_path(cache_dir: str | Path, model: GroupModel, radius: float) -> Path:
    """Deterministic cache file location for a (model, radius) pair."""
    digest = hashlib.sha256(f"{model.name}|{float(radius)!r}".encode()).hexdigest()[:16]
    return Path(cache_dir) / f"{digest}{CACHE_SUFFIX}"


def _require_path(path: str | Path) -> Path:
    if str(path).strip() == "":
        raise CacheIOError("Cache path is empty")
    return Path(path)


def cache_save(ball: Ball, path: str | Path) -> Path:
    """Write a ball to ``path``.

    Raises:
        CacheIOError: If the path is empty or the file cannot be written.
    """
    target = _require_path(path)
    spec_bytes = ball.spec.encode("utf-8")
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack(">HI", CACHE_VERSION, len(spec_bytes)))
            fh.write(spec_bytes)
            fh.write(struct.pack(">dQ", ball.radius, len(ball)))
            for element, length in zip(ball.elements, ball.lengths):
                data = encode_element(element)
                fh.write(struct.pack(">I", len(data)))
                fh.write(data)
                fh.write(struct.pack(">q", int(length)))
    except OSError as e:
        raise CacheIOError(f"Cannot write cache file {target}: {e}") from e
    logger.info(
        "Cached %d elements of %s (radius %g) at %s", len(ball), ball.spec, ball.radius, target
    )
    return target


def _read_exact(fh: BinaryIO, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise CacheIOError("Truncated cache file")
    return data


def _read_header(fh: BinaryIO) -> tuple[str, float, int]:
    if _read_exact(fh, len(CACHE_MAGIC)) != CACHE_MAGIC:
        raise CacheIOError("Not a ball cache file")
    version, spec_len = struct.unpack(">HI", _read_exact(fh, 6))
    if version != CACHE_VERSION:
        raise CacheMismatchError(
            f"Cache format version {version} does not match {CACHE_VERSION}", version=version
        )
    spec = _read_exact(fh, spec_len).decode("utf-8")
    radius, count = struct.unpack(">dQ", _read_exact(fh, 16))
    return spec, radius, count


def read_cache_header(path: str | Path) -> tuple[str, float, int]:
    """Return (canonical spec, radius, element count) stored in a cache file."""
    source = _require_path(path)
    try:
        with source.open("rb") as fh:
            return _read_header(fh)
    except OSError as e:
        raise CacheIOError(f"Cannot read cache file {source}: {e}") from e


def cache_load(model: GroupModel, path: str | Path) -> Ball:
    """Read a ball written by :func:`cache_save` for this model.

    Raises:
        CacheIOError: If the file is missing, unreadable or truncated.
        CacheMismatchError: If the header names another model or format version.
    """
    source = _require_path(path)
    try:
        with source.open("rb") as fh:
            spec, radius, count = _read_header(fh)
            if spec != model.name:
                raise CacheMismatchError(
                    f"Cache {source} holds {spec}, expected {model.name}", cached_spec=spec
                )
            found: list[tuple[Element, int]] = []
            for _ in range(count):
                (size,) = struct.unpack(">I", _read_exact(fh, 4))
                element = decode_element(_read_exact(fh, size))
                (length,) = struct.unpack(">q", _read_exact(fh, 8))
                found.append((element, length))
    except OSError as e:
        raise CacheIOError(f"Cannot read cache file {source}: {e}") from e
    except (struct.error, ValueError, UnicodeDecodeError) as e:
        raise CacheIOError(f"Corrupt cache file {source}: {e}") from e
    elements = tuple(element for element, _ in found)
    return Ball(
        spec=spec,
        radius=radius,
        elements=elements,
        lengths=np.fromiter((length for _, length in found), dtype=np.int64, count=len(found)),
        index={element: i for i, element in enumerate(elements)},
    )


def cached_ball(
    model: GroupModel,
    radius: float,
    cache_dir: str | Path | None = None,
    memory_budget: int | None = None,
) -> Ball:
    """Load the ball from the cache directory, enumerating and saving it on a miss."""
    directory = Path(cache_dir) if cache_dir is not None else get_settings().cache_dir
    path = cache_path(directory, model, radius)
    if path.exists():
        logger.debug("Cache hit for %s radius %g", model.name, radius)
        return cache_load(model, path)
    ball = enumerate_ball(model, radius, memory_budget)
    cache_save(ball, path)
    return ball


def list_cache(cache_dir: str | Path) -> list[dict[str, object]]:
    """Describe every readable cache file in a directory; unreadable files are skipped."""
    entries: list[dict[str, object]] = []
    directory = Path(cache_dir)
    if not directory.is_dir():
        return entries
    for path in sorted(directory.glob(f"*{CACHE_SUFFIX}")):
        try:
            spec, radius, count = read_cache_header(path)
        except (CacheIOError, CacheMismatchError):
            logger.warning("Skipping unreadable cache file %s", path)
            continue
        entries.append({"path": str(path), "spec": spec, "radius": radius, "count": count})
    return entries


def clear_cache(cache_dir: str | Path) -> int:
    """Delete every cache file in a directory and return how many were removed."""
    removed = 0
    directory = Path(cache_dir)
    if not directory.is_dir():
        return removed
    for path in directory.glob(f"*{CACHE_SUFFIX}"):
        try:
            path.unlink()
        except OSError as e:
            raise CacheIOError(f"Cannot delete cache file {path}: {e}") from e
        removed += 1
    return removed
