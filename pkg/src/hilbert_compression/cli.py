"""Command-line entrypoint for hilbert_compression.

Subcommands ball, verify, bound, estimate and cache. CSV goes to ``--output``
or stdout; summaries and logs go to stderr so stdout stays byte-identical for
identical configurations.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from hilbert_compression import __version__
from hilbert_compression.balls import (
    cache_path,
    cached_ball,
    clear_cache,
    enumerate_ball,
    find_k_n,
    growth_profile,
    list_cache,
    read_cache_header,
)
from hilbert_compression.bounds import (
    direct_sum_system,
    embedding_pairs,
    empirical_compression,
    extension_bound_hyp,
    extension_bound_poly,
    limit_bound,
    wreath_bound,
)
from hilbert_compression.config import Settings, get_settings, load_config_file
from hilbert_compression.errors import (
    CompressionError,
    ConfigValidationError,
    OutputIOError,
    UnsupportedModelError,
    exit_code_for,
)
from hilbert_compression.extensions import build_extension_family, verify_combined
from hilbert_compression.groups import (
    DirectSumFiniteGroup,
    FreeAbelianGroup,
    GroupModel,
    axiom_violations,
    make_extension,
    make_group,
    parse_group_spec,
)
from hilbert_compression.hyperbolic import (
    equivariance_violations,
    hyp_family,
    parse_boundary,
    verify_hyp_lemma,
)
from hilbert_compression.kernel import (
    SIMPLEX_PROFILE,
    Embedding,
    corollary_threshold,
    identity_embedding,
    identity_profile,
    schoenberg_family,
    simplex_embedding,
    sqrt_embedding,
    verify_family,
)
from hilbert_compression.models import (
    BoundReport,
    CommandResult,
    CompressionProfile,
    ExtensionSpec,
    HypParams,
    LimitSystem,
    RunConfig,
    ScaleParams,
    SequenceRule,
    VerificationReport,
)
from hilbert_compression.poly import (
    empirical_threshold,
    left_invariance_violations,
    poly_family,
    verify_poly_lemma,
)
from hilbert_compression.reporting import (
    BALL_HEADER,
    BOUND_HEADER,
    ESTIMATE_HEADER,
    K_SEARCH_HEADER,
    POINTS_HEADER,
    VERIFY_HEADER,
    ball_rows,
    bound_rows,
    estimate_rows,
    format_bound_report,
    format_cache_entries,
    format_empirical,
    format_growth_profile,
    format_verification_report,
    k_search_rows,
    point_rows,
    render_csv,
    verification_rows,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Config-file spellings accepted for RunConfig fields.
KEY_ALIASES = {"n": "n_values", "action": "cache_action", "points": "points_output"}


# ==================== Configuration ====================


def _validation_error(e: ValidationError) -> ConfigValidationError:
    fields = []
    problems = []
    for err in e.errors():
        name = ".".join(str(part) for part in err["loc"]) or "<config>"
        fields.append(name)
        problems.append(f"{name}: {err['msg']}")
    return ConfigValidationError("Invalid configuration: " + "; ".join(problems), fields=fields)


def build_run_config(
    command: str,
    flags: dict[str, Any],
    config_file: str | None = None,
    settings: Settings | None = None,
) -> RunConfig:
    """Merge Settings defaults, config file keys and flags (in increasing precedence).

    Raises:
        ConfigValidationError: Listing every unknown or invalid field.
    """
    settings = settings or get_settings()
    merged: dict[str, Any] = {
        "seed": settings.seed,
        "jobs": settings.jobs,
        "memory_budget": settings.memory_budget_bytes,
        "cache_dir": str(settings.cache_dir),
    }
    if config_file is not None:
        for key, value in load_config_file(config_file).items():
            merged[KEY_ALIASES.get(key, key)] = value
    merged.update(flags)
    merged["command"] = command
    unknown = sorted(set(merged) - set(RunConfig.model_fields))
    if unknown:
        raise ConfigValidationError(
            f"Unknown configuration keys: {', '.join(unknown)}", fields=unknown
        )
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise _validation_error(e) from e


def _require(config: RunConfig, *names: str) -> None:
    missing = [name for name in names if getattr(config, name) in (None, [])]
    if missing:
        raise ConfigValidationError(
            f"{config.command} needs: {', '.join(missing)}", fields=missing
        )


def _model(config: RunConfig) -> GroupModel:
    assert config.group is not None
    return make_group(parse_group_spec(config.group))


def _output(text: str, csv_text: str | None = None, points: str | None = None) -> dict[str, Any]:
    return {"text": text, "csv": csv_text, "points": points}


# ==================== ball ====================


def cmd_ball(config: RunConfig) -> CommandResult:
    """Ball counts up to the radius, or the k(n) radius scan when n values are given."""
    _require(config, "group")
    model = _model(config)
    if config.n_values:
        searches = [find_k_n(model, n, config.p, config.memory_budget) for n in config.n_values]
        text = "\n".join(f"n={s.n}: k={s.k} ratio={s.ratio:.6g}" for s in searches)
        csv_text = render_csv(K_SEARCH_HEADER, k_search_rows(model.name, searches), config)
        return CommandResult.ok(_output(text, csv_text))
    if config.r_max is None and config.radius is None:
        raise ConfigValidationError("ball needs radius or r_max", fields=["radius", "r_max"])
    r_max = config.r_max if config.r_max is not None else math.floor(config.radius or 0)
    profile = growth_profile(model, r_max, config.memory_budget)
    return CommandResult.ok(
        _output(
            format_growth_profile(model.name, profile),
            render_csv(BALL_HEADER, ball_rows(model.name, profile), config),
        )
    )


# ==================== verify ====================


def _standard_embedding(model: GroupModel) -> tuple[Embedding, CompressionProfile]:
    if isinstance(model, FreeAbelianGroup):
        return identity_embedding, identity_profile(model.rank)
    if isinstance(model, DirectSumFiniteGroup):
        return simplex_embedding(model.orders), SIMPLEX_PROFILE
    raise UnsupportedModelError(f"No standard embedding for {model.name}")


def _verify_kernel(config: RunConfig, model: GroupModel, n: int) -> VerificationReport:
    embedding, profile = _standard_embedding(model)
    params = ScaleParams(
        n=n,
        p=config.p,
        r=config.r,
        a=config.a,
        b=config.b if config.b is not None else 0.5 + config.p,
        profile=profile,
    )
    threshold = corollary_threshold(profile, params)
    radius = config.radius if config.radius is not None else math.ceil(2 * threshold.A_n)
    ball = enumerate_ball(model, radius, config.memory_budget)
    family = schoenberg_family(model, ball, embedding, params)
    report = verify_family(family, params.R_n, params.eps_n, threshold.A_n)
    report.measurements["A_n"] = threshold.A_n
    report.measurements["sharp_threshold"] = threshold.sharp
    report.measurements["within_simplified"] = threshold.within_simplified
    return report


def _verify_poly(config: RunConfig, model: GroupModel, n: int) -> VerificationReport:
    family = poly_family(model, n, config.p, config.memory_budget)
    report = verify_poly_lemma(model, n, config.p, config.memory_budget, family=family)
    if config.samples:
        report.measurements["left_invariance_violations"] = left_invariance_violations(
            family, config.samples, config.seed
        )
    return report


def _verify_hyp(config: RunConfig, model: GroupModel, n: int) -> VerificationReport:
    boundary = parse_boundary(config.boundary)
    report = verify_hyp_lemma(
        model,
        n,
        config.p,
        q=config.q,
        boundary=boundary,
        work_radius=config.work_radius,
        arithmetic=config.arithmetic,
    )
    if config.samples and not boundary.preperiod:
        family = hyp_family(model, HypParams(n=n, p=config.p, q=config.q, boundary=boundary))
        report.measurements["equivariance_violations"] = equivariance_violations(
            family, config.samples, config.seed
        )
    return report


def _verify_extension(config: RunConfig, n: int) -> VerificationReport:
    assert config.group is not None
    spec = parse_group_spec(config.group)
    if not isinstance(spec, ExtensionSpec):
        raise UnsupportedModelError(f"{config.group} is not an extension")
    family, ball = build_extension_family(make_extension(spec), n, config.p, config.work_radius)
    return verify_combined(family, ball)


VERIFIERS: dict[str, Callable[[RunConfig, GroupModel, int], VerificationReport]] = {
    "kernel": _verify_kernel,
    "poly": _verify_poly,
    "hyp": _verify_hyp,
}


def verify_one(task: tuple[RunConfig, int]) -> VerificationReport:
    """Verification report for one scale n; top level so worker processes can run it."""
    config, n = task
    logger.info("Verifying %s for %s at n=%d", config.target, config.group, n)
    if config.target == "extension":
        report = _verify_extension(config, n)
    else:
        assert config.target is not None
        model = _model(config)
        report = VERIFIERS[config.target](config, model, n)
        if config.samples:
            counts = axiom_violations(model, config.samples, config.seed)
            report.measurements["axiom_violations"] = sum(counts.values())
    return report


def _thresholds_text(reports: Sequence[VerificationReport]) -> list[str]:
    lines = []
    flags = {r.n: r.get("support").holds for r in reports}
    lines.append(f"Support condition holds from n0 = {empirical_threshold(flags)}")
    k_flags = {r.n: bool(r.measurements.get("k_bound_holds")) for r in reports}
    lines.append(f"k(n) <= 2n^(3/2+4p) holds from n = {empirical_threshold(k_flags)}")
    return lines


def cmd_verify(config: RunConfig) -> CommandResult:
    """Verification CSV over every requested n, in order."""
    _require(config, "group", "target", "n_values")
    tasks = [(config, n) for n in config.n_values]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            reports = list(pool.map(verify_one, tasks))
    else:
        reports = [verify_one(task) for task in tasks]
    lines = [format_verification_report(r) for r in reports]
    if config.target == "poly":
        lines.extend(_thresholds_text(reports))
    return CommandResult.ok(
        _output("\n".join(lines), render_csv(VERIFY_HEADER, verification_rows(reports), config))
    )


# ==================== bound ====================


def _limit_system(config: RunConfig) -> LimitSystem:
    return LimitSystem(
        delta=config.delta,
        C=SequenceRule(coefficient=config.C),
        C_tilde=SequenceRule(coefficient=config.C_tilde),
        D=SequenceRule(coefficient=config.D),
        D_tilde=SequenceRule(coefficient=config.D_tilde),
        name="constant",
    )


def _bound_report(config: RunConfig) -> BoundReport:
    formula = config.formula
    if formula == "limit":
        return limit_bound(_limit_system(config), config.n_max, "standard")
    if formula == "limit-quasi":
        return limit_bound(_limit_system(config), config.n_max, "quasi")
    if formula == "limit-finite-p":
        return limit_bound(_limit_system(config), config.n_max, "finite-p", config.p)
    if formula == "direct-sum":
        return limit_bound(direct_sum_system(config.delta), config.n_max)
    if formula == "extension-poly":
        return extension_bound_poly(config.delta, config.p)
    if formula == "extension-hyp":
        return extension_bound_hyp(config.delta, config.p)
    return wreath_bound(config.alpha, config.d)


def cmd_bound(config: RunConfig) -> CommandResult:
    """Evaluate one bound formula."""
    _require(config, "formula")
    report = _bound_report(config)
    return CommandResult.ok(
        _output(format_bound_report(report), render_csv(BOUND_HEADER, bound_rows(report), config))
    )


# ==================== estimate ====================


def cmd_estimate(config: RunConfig) -> CommandResult:
    """Empirical compression exponent of a standard embedding over a ball."""
    _require(config, "group", "radius")
    model = _model(config)
    if not isinstance(model, FreeAbelianGroup):
        raise UnsupportedModelError(f"Estimation embeddings are defined on Z^d, not {model.name}")
    embedding = identity_embedding if config.embedding == "identity" else sqrt_embedding
    assert config.radius is not None
    ball = enumerate_ball(model, config.radius, config.memory_budget)
    result = empirical_compression(embedding_pairs(model, ball, embedding), config.d_min)
    csv_text = render_csv(
        ESTIMATE_HEADER, estimate_rows(model.name, config.embedding, result), config
    )
    points = render_csv(POINTS_HEADER, point_rows(result), config)
    return CommandResult.ok(_output(format_empirical(result), csv_text, points))


# ==================== cache ====================


def cmd_cache(config: RunConfig) -> CommandResult:
    """Build, list, show or clear cached balls."""
    _require(config, "cache_action", "cache_dir")
    assert config.cache_dir is not None
    directory = Path(config.cache_dir)
    action = config.cache_action
    if action == "list":
        return CommandResult.ok(_output(format_cache_entries(list_cache(directory))))
    if action == "clear":
        removed = clear_cache(directory)
        return CommandResult.ok(_output(f"Removed {removed} cached ball(s)"))
    _require(config, "group", "radius")
    assert config.radius is not None
    model = _model(config)
    if action == "build":
        ball = cached_ball(model, config.radius, directory, config.memory_budget)
        return CommandResult.ok(_output(f"Cached {len(ball)} elements of {model.name}"))
    path = cache_path(directory, model, config.radius)
    spec, radius, count = read_cache_header(path)
    entry = {"path": str(path), "spec": spec, "radius": radius, "count": count}
    return CommandResult.ok(_output(format_cache_entries([entry])))


COMMANDS: dict[str, Callable[[RunConfig], CommandResult]] = {
    "ball": cmd_ball,
    "verify": cmd_verify,
    "bound": cmd_bound,
    "estimate": cmd_estimate,
    "cache": cmd_cache,
}


def run_command(config: RunConfig) -> CommandResult:
    """Run one subcommand, turning library errors into failed results."""
    try:
        return COMMANDS[config.command](config)
    except CompressionError as e:
        logger.debug("Command %s failed: %s", config.command, e.context)
        return CommandResult.fail(e.message, e.category)
    except ValidationError as e:
        return CommandResult.fail(str(e), "invalid-parameter")


# ==================== Entrypoint ====================


def _add_group(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--group", help="Group literal, e.g. free_abelian:2, free_group:2, heisenberg"
    )
    parser.add_argument("--memory-budget", dest="memory_budget", type=int)
    parser.add_argument("--cache-dir", dest="cache_dir")


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", "-o", help="CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser; unset flags are absent from the namespace so config files apply."""
    parser = argparse.ArgumentParser(
        prog="hilbert-compression",
        description="Uniform embeddings and Hilbert space compression of groups",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="Flat 'key = value' configuration file")
    parser.add_argument(
        "--log-level",
        dest="log_level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ball = sub.add_parser("ball", help="Ball counts and growth", argument_default=argparse.SUPPRESS)
    _add_group(ball)
    ball.add_argument("--radius", type=float)
    ball.add_argument("--r-max", dest="r_max", type=int)
    ball.add_argument("--n", dest="n_values", help="Scan k(n) for these n, e.g. 4,9,16 or 2-8")
    ball.add_argument("--p", type=float)
    _add_output(ball)

    verify = sub.add_parser(
        "verify", help="Check a construction's conditions", argument_default=argparse.SUPPRESS
    )
    _add_group(verify)
    verify.add_argument("--target", choices=["kernel", "poly", "hyp", "extension"])
    verify.add_argument("--n", dest="n_values", help="Scales, e.g. 4,9,16 or 2-8")
    for name in ("p", "q", "r", "a", "b", "radius"):
        verify.add_argument(f"--{name}", type=float)
    verify.add_argument("--boundary", help="Boundary point 'preperiod|period'")
    verify.add_argument("--work-radius", dest="work_radius", type=int)
    verify.add_argument("--arithmetic", choices=["float", "exact"])
    verify.add_argument("--samples", type=int, help="Sampled property checks per scale")
    verify.add_argument("--seed", type=int)
    verify.add_argument("--jobs", type=int)
    _add_output(verify)

    bound = sub.add_parser(
        "bound", help="Evaluate a compression bound", argument_default=argparse.SUPPRESS
    )
    bound.add_argument(
        "--formula",
        choices=[
            "limit",
            "limit-quasi",
            "limit-finite-p",
            "extension-poly",
            "extension-hyp",
            "wreath",
            "direct-sum",
        ],
    )
    for name in ("delta", "C", "D", "p", "alpha", "d"):
        bound.add_argument(f"--{name}", type=float)
    bound.add_argument("--C-tilde", dest="C_tilde", type=float)
    bound.add_argument("--D-tilde", dest="D_tilde", type=float)
    bound.add_argument("--n-max", dest="n_max", type=int)
    _add_output(bound)

    estimate = sub.add_parser(
        "estimate", help="Empirical compression exponent", argument_default=argparse.SUPPRESS
    )
    _add_group(estimate)
    estimate.add_argument("--radius", type=float)
    estimate.add_argument("--embedding", choices=["identity", "sqrt"])
    estimate.add_argument("--d-min", dest="d_min", type=float)
    estimate.add_argument("--points-output", dest="points_output", help="Plot-ready point file")
    _add_output(estimate)

    cache = sub.add_parser("cache", help="Manage cached balls", argument_default=argparse.SUPPRESS)
    cache.add_argument("cache_action", choices=["build", "list", "show", "clear"])
    _add_group(cache)
    cache.add_argument("--radius", type=float)
    return parser


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise OutputIOError(f"Cannot write {path}: {e}") from e


def _fail(category: str, message: str) -> int:
    flat = " ".join(message.split())
    print(f"error category={category} message={flat}", file=sys.stderr)
    return exit_code_for(category)


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the subcommand and write outputs; returns the exit code."""
    args = vars(build_parser().parse_args(argv))
    logging.basicConfig(level=args.pop("log_level"), format=LOG_FORMAT, stream=sys.stderr)
    command = args.pop("command")
    config_file = args.pop("config", None)
    try:
        config = build_run_config(command, args, config_file)
    except ConfigValidationError as e:
        return _fail(e.category, e.message)
    except ValueError as e:
        # Invalid HILBERT_COMPRESSION_* environment values.
        return _fail("config", str(e))

    result = run_command(config)
    if not result.success:
        return _fail(result.category or "internal", result.error or "")
    data = result.data
    try:
        if data["csv"] is not None:
            if config.output:
                _write(config.output, data["csv"])
            else:
                sys.stdout.write(data["csv"])
        if data["points"] is not None and config.points_output:
            _write(config.points_output, data["points"])
    except OutputIOError as e:
        return _fail(e.category, e.message)
    print(data["text"], file=sys.stderr)
    return 0


def main(argv: Sequence[str] | None = None) -> None:
    """Main entrypoint for the hilbert-compression command."""
    try:
        code = run(argv)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        code = 130
    except Exception as e:
        logger.exception("Command failed: %s", e)
        code = _fail("internal", str(e))
    if code:
        sys.exit(code)


if __name__ == "__main__":
    main()
