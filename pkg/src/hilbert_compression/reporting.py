"""CSV emission and human-readable formatting of reports.

CSV dialect: comma separated, UTF-8, ``.`` decimal mark, LF line endings.
Every table ends with a metadata comment block so a file identifies the tool
version, the configuration and the seed that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from collections.abc import Iterable, Sequence
from typing import Any, TextIO

from hilbert_compression import __version__
from hilbert_compression.models import (
    BoundReport,
    EmpiricalExponent,
    GrowthProfile,
    KSearchResult,
    RunConfig,
    VerificationReport,
)

# Fields that do not change what is computed.
HASH_EXCLUDED_FIELDS = {"jobs", "output", "points_output", "memory_budget", "cache_dir"}

Row = Sequence[Any]


def format_value(value: Any) -> str:
    """Render one CSV cell deterministically."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical JSON of the computation-relevant config fields."""
    payload = config.model_dump(mode="json", exclude=HASH_EXCLUDED_FIELDS)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_csv(
    stream: TextIO, header: Sequence[str], rows: Iterable[Row], config: RunConfig
) -> None:
    """Write a header, the rows and the metadata block to ``stream``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    stream.write(f"# tool_version={__version__}\n")
    stream.write(f"# config_hash={config_hash(config)}\n")
    stream.write(f"# seed={config.seed}\n")


def render_csv(header: Sequence[str], rows: Iterable[Row], config: RunConfig) -> str:
    buffer = io.StringIO()
    write_csv(buffer, header, rows, config)
    return buffer.getvalue()


# ==================== Tables ====================

BALL_HEADER = ("group", "radius", "count", "sphere")
VERIFY_HEADER = (
    "subject",
    "n",
    "p",
    "kind",
    "name",
    "pairs_checked",
    "violations",
    "worst_margin",
    "vacuous",
    "value",
    "note",
)
BOUND_HEADER = ("formula", "value", "symbolic_limit", "numeric_proxy", "caveats")
ESTIMATE_HEADER = ("group", "embedding", "slope", "residual", "bins", "pairs_used", "flagged")
POINTS_HEADER = ("log_d", "log_norm")
K_SEARCH_HEADER = ("group", "n", "p", "k", "radius_n", "ratio", "bound", "radii_scanned")


def ball_rows(group: str, profile: GrowthProfile) -> list[Row]:
    """One row per radius r with |B_r| and |S_r|."""
    rows: list[Row] = []
    previous = 0
    for r, count in enumerate(profile.counts):
        rows.append((group, r, count, count - previous))
        previous = count
    return rows


def verification_rows(reports: Iterable[VerificationReport]) -> list[Row]:
    """Condition rows followed by measurement rows, per report in order."""
    rows: list[Row] = []
    for report in reports:
        for c in report.conditions:
            rows.append(
                (
                    report.subject,
                    report.n,
                    report.p,
                    "condition",
                    c.condition,
                    c.pairs_checked,
                    c.violations,
                    c.worst_margin,
                    c.vacuous,
                    None,
                    c.note,
                )
            )
        for key in sorted(report.measurements):
            value = report.measurements[key]
            rows.append(
                (report.subject, report.n, report.p, "measurement", key)
                + (None,) * 4
                + (value, None)
            )
    return rows


def bound_rows(report: BoundReport) -> list[Row]:
    return [
        (
            report.formula,
            report.value,
            report.symbolic_limit,
            report.numeric_proxy,
            " | ".join(report.caveats),
        )
    ]


def estimate_rows(group: str, embedding: str, result: EmpiricalExponent) -> list[Row]:
    return [
        (
            group,
            embedding,
            result.slope,
            result.residual,
            result.bins,
            result.pairs_used,
            result.flagged,
        )
    ]


def point_rows(result: EmpiricalExponent) -> list[Row]:
    return [(x, y) for x, y in result.points]


def k_search_rows(group: str, searches: Iterable[KSearchResult]) -> list[Row]:
    return [
        (group, s.n, s.p, s.k, s.radius_n, s.ratio, s.bound, s.radii_scanned) for s in searches
    ]


# ==================== Text ====================


def format_growth_profile(group: str, profile: GrowthProfile) -> str:
    """Summarize ball counts and the growth-type fit."""
    lines = [f"Group: {group}", f"  |B_{profile.r_max}| = {profile.counts[-1]}"]
    if profile.exponential:
        lines.append("  Growth: exponential")
    elif profile.degree is not None:
        lines.append(f"  Growth degree: {profile.degree:.3f} (residual {profile.residual:.3g})")
    return "\n".join(lines)


def format_verification_report(report: VerificationReport) -> str:
    """Format a verification report as an indented condition list.

    Args:
        report: The report to format.

    Returns:
        One line per condition, then the measurements.
    """
    status = "PASS" if report.passed else "FAIL"
    p_text = f", p={report.p:g}" if report.p is not None else ""
    lines = [f"{report.subject} n={report.n}{p_text}: {status}"]
    for c in report.conditions:
        if c.vacuous:
            lines.append(f"  {c.condition}: vacuous")
            continue
        margin = f"{c.worst_margin:.3e}" if c.worst_margin is not None else "n/a"
        lines.append(
            f"  {c.condition}: {c.violations}/{c.pairs_checked} violations, worst margin {margin}"
        )
        if c.note:
            lines.append(f"    {c.note}")
    for key in sorted(report.measurements):
        lines.append(f"  {key} = {report.measurements[key]}")
    return "\n".join(lines)


def format_bound_report(report: BoundReport) -> str:
    lines = [f"Bound ({report.formula}): {report.value:.6g}"]
    if report.symbolic_limit is not None:
        lines.append(f"  Symbolic limit: {report.symbolic_limit:.6g}")
    if report.numeric_proxy is not None:
        lines.append(f"  Numeric proxy: {report.numeric_proxy:.6g}")
    for key in sorted(report.trace):
        lines.append(f"  {key}: {report.trace[key]}")
    for caveat in report.caveats:
        lines.append(f"  Caveat: {caveat}")
    return "\n".join(lines)


def format_empirical(result: EmpiricalExponent) -> str:
    flag = " (unreliable fit)" if result.flagged else ""
    return (
        f"Empirical exponent: {result.slope:.4f}{flag}\n"
        f"  residual {result.residual:.3g} over {result.bins} bins, "
        f"{result.pairs_used} pairs"
    )


def format_cache_entries(entries: Sequence[dict[str, object]]) -> str:
    if not entries:
        return "No cached balls."
    lines = [f"Found {len(entries)} cached ball(s):"]
    for entry in entries:
        lines.append(f"  {entry['spec']} R={entry['radius']} ({entry['count']} elements)")
        lines.append(f"    {entry['path']}")
    return "\n".join(lines)
