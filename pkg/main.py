#!/usr/bin/env python3
import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field

from acceptance import CriterionResult, SuiteReport, VerifyConfig, run_suite
from bounds import (
    BoundConstants,
    BoundQuery,
    BoundReport,
    check_insertion_inequality,
    empirical_growth,
    bound_report,
    ratio_table,
)
from classifier import ClassificationRecord, PrimeVariant, classify
from composer import (
    ConstructionRecord,
    ConstructionVariant,
    InsertMode,
    InsertSpec,
    build_irreducible,
    insert_even,
    insert_odd,
    prime_closure,
)
from enumerator import (
    REFERENCE_PATH,
    CalibrationReport,
    CountCache,
    CountRow,
    ReferenceTable,
    SearchConfig,
    calibrate,
    count_closed,
    enumerate_open,
    parallel_count,
)
from meander import (
    MeanderError,
    OpenMeander,
    SymmetryConvention,
    concatenate,
    format_permutation,
    parse_permutation,
)
from renderer import RenderFormat, RenderSpec, render_arc_diagram, save_render

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path("meander.env")
ENV_PREFIX = "MEANDER_"
JOBS_VARIABLE = "MEANDER_JOBS"


class UsageError(MeanderError):
    pass


class CliArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class CliConfig(BaseModel):
    max_order: int = Field(default=12, ge=1)
    convention: SymmetryConvention = SymmetryConvention.EVEN_ROAD_REVERSAL
    prime_variant: PrimeVariant = PrimeVariant.PAPER
    workers: int = Field(default=1, ge=1)
    prefix_depth: int = Field(default=3, ge=0)
    cache_path: Optional[Path] = None
    render_format: RenderFormat = RenderFormat.SVG

    def search(self, max_order: int, classify: bool = True, progress: bool = False) -> SearchConfig:
        return SearchConfig(
            max_order=max_order,
            prefix_depth=min(self.prefix_depth, max_order - 1),
            workers=self.workers,
            convention=self.convention,
            classify=classify,
            prime_variant=self.prime_variant,
            progress=progress,
        )


def load_config(args: argparse.Namespace) -> CliConfig:
    """defaults < key=value file < flags < MEANDER_JOBS"""
    values = {}
    path = Path(args.config) if args.config else DEFAULT_CONFIG
    if path.exists():
        for key, value in dotenv_values(path).items():
            if key.startswith(ENV_PREFIX) and key != JOBS_VARIABLE and value is not None:
                values[key[len(ENV_PREFIX):].lower()] = value
        logger.debug(f"Config file loaded: {path}")
    elif args.config:
        raise MeanderError(f"Config file not found: {path}")

    for field in CliConfig.model_fields:
        flag = getattr(args, field, None)
        if flag is not None:
            values[field] = flag

    load_dotenv()
    jobs = os.getenv(JOBS_VARIABLE)
    if jobs:
        values["workers"] = jobs
    return CliConfig.model_validate(values)


def emit(data, out: Optional[str] = None) -> None:
    text = data if isinstance(data, str) else json.dumps(data, ensure_ascii=False, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Saved: {out}")
    else:
        sys.stdout.write(text)


def cmd_count(args, config: CliConfig) -> int:
    cache = CountCache(config.cache_path) if config.cache_path else None
    search = config.search(args.max_order or config.max_order, classify=not args.no_classify, progress=args.progress)
    table = parallel_count(search, cache)
    emit(table.to_csv(), args.out)
    return 0


def cmd_classify(args, config: CliConfig) -> int:
    record = classify(parse_permutation(args.perm), config.prime_variant)
    emit(record.to_json())
    return 0


def cmd_concat(args, config: CliConfig) -> int:
    result = concatenate(OpenMeander.of(parse_permutation(args.a)), OpenMeander.of(parse_permutation(args.b)))
    emit({"a": args.a, "b": args.b, "result": list(result.meander.values), "branch": result.branch})
    return 0


def cmd_insert(args, config: CliConfig) -> int:
    spec = InsertSpec(
        OpenMeander.of(parse_permutation(args.host)),
        OpenMeander.of(parse_permutation(args.guest)),
        args.pos,
    )
    result = insert_even(spec) if args.even else insert_odd(spec, InsertMode(args.mode))
    emit({"result": list(result.values), "order": result.meander.order, "branch": result.branch})
    return 0


def cmd_construct(args, config: CliConfig) -> int:
    record = build_irreducible(OpenMeander.of(parse_permutation(args.perm)), ConstructionVariant.parse(args.variant))
    emit(record.model_dump(mode="json"), args.out)
    return 0


def cmd_prime_close(args, config: CliConfig) -> int:
    meander = OpenMeander.of(parse_permutation(args.perm))
    result = prime_closure(meander)
    emit({"input": list(meander.values), "output": list(result.values), "branch": result.branch})
    return 0


def cmd_bounds(args, config: CliConfig) -> int:
    constants = BoundConstants(
        mu_closed_upper=args.mu_upper, mu_open_lower_sq=args.mu_lower_sq, mu_open_lower=args.mu_lower
    )
    query = BoundQuery(k=args.k) if args.k is not None else None
    emit(bound_report(query, constants).model_dump(mode="json", exclude_none=True))
    return 0


def cmd_inequality(args, config: CliConfig) -> int:
    target = args.n + 2 * int(args.n // args.k)
    table = parallel_count(config.search(target))
    emit(check_insertion_inequality(args.n, args.k, table).model_dump(mode="json"))
    return 0


def cmd_ratio(args, config: CliConfig) -> int:
    table = parallel_count(config.search(args.max_order or config.max_order, progress=args.progress))
    report = ratio_table(table)
    if args.out:
        emit(report.to_csv(), args.out)
    emit(
        {"upper_min": report.upper_min, "mu_open_lower": report.mu_open_lower, "corollary_holds": report.corollary_holds}
    )
    return 0


def cmd_growth(args, config: CliConfig) -> int:
    table = parallel_count(config.search(args.max_order or config.max_order, progress=args.progress))
    emit(empirical_growth(table).to_csv(), args.out)
    return 0


def cmd_render(args, config: CliConfig) -> int:
    spec = RenderSpec(
        perm=list(parse_permutation(args.perm)),
        format=RenderFormat(args.format) if args.format else config.render_format,
        spacing=args.spacing,
    )
    if args.out:
        save_render(spec, Path(args.out))
    else:
        emit(render_arc_diagram(spec))
    return 0


def cmd_calibrate(args, config: CliConfig) -> int:
    reference = ReferenceTable.load(Path(args.reference)) if args.reference else None
    report = calibrate(args.max_order or config.max_order, reference, progress=args.progress)
    emit(report.model_dump(mode="json"), args.out)
    return 0


def cmd_verify(args, config: CliConfig) -> int:
    verify = VerifyConfig(
        max_order=args.max_order or VerifyConfig().max_order,
        workers=config.workers,
        reference_path=Path(args.reference) if args.reference else REFERENCE_PATH,
        progress=args.progress,
    )
    only = [int(x) for x in args.only.split(",")] if args.only else None
    report = run_suite(verify, only)
    emit(report.model_dump(mode="json"), args.out)
    if report.skipped:
        logger.warning(f"Skipped criteria: {report.skipped}")
    return 0 if report.passed else 1


def cmd_enumerate(args, config: CliConfig) -> int:
    lines = [format_permutation(p) for p in enumerate_open(args.order)]
    emit("\n".join(lines) + "\n", args.out)
    logger.info(f"{len(lines)} meanders of order {args.order}")
    return 0


def cmd_closed(args, config: CliConfig) -> int:
    emit([{"n": n, "closed": count_closed(n)} for n in range(1, args.max_half_order + 1)])
    return 0


def cmd_schemas(args, config: CliConfig) -> int:
    models = {
        "classification": ClassificationRecord,
        "construction": ConstructionRecord,
        "bounds": BoundReport,
        "count_row": CountRow,
        "calibration": CalibrationReport,
        "criterion": CriterionResult,
        "verify": SuiteReport,
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, model in models.items():
        path = out_dir / f"{name}.schema.json"
        path.write_text(json.dumps(model.model_json_schema(), indent=2) + "\n", encoding="utf-8")
        logger.info(f"Schema saved: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        description="Enumerate, classify and build open meanders",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py classify --perm "3,2,1,6,5,4"
  python main.py count --max-order 14 -j 8 -o counts.csv
  python main.py bounds --k 2
  python main.py verify --max-order 12
        """,
    )
    parser.add_argument("--config", help=f"key=value config file (default: {DEFAULT_CONFIG} if present)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Warnings only, no progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    def order_options(p, name="--max-order"):
        p.add_argument(name, dest="max_order", type=int, help="Largest order (default: from config)")
        p.add_argument("--convention", choices=[c.value for c in SymmetryConvention], help="Even-order convention")
        p.add_argument("-j", "--jobs", dest="workers", type=int, help="Worker processes")
        p.add_argument("--prefix-depth", type=int, help="Prefix length used to split the search")

    p = sub.add_parser("count", help="Count open meanders by order")
    order_options(p)
    p.add_argument("--no-classify", action="store_true", help="Skip irreducible and prime counts")
    p.add_argument("--cache", dest="cache_path", help="JSON-lines count cache")
    p.add_argument("-o", "--out", help="CSV output (default: stdout)")
    p.set_defaults(handler=cmd_count)

    p = sub.add_parser("classify", help="Irreducibility and primality of a permutation")
    p.add_argument("--perm", required=True, help='Permutation, e.g. "3,2,1,6,5,4"')
    p.add_argument("--prime-variant", dest="prime_variant", choices=[v.value for v in PrimeVariant])
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("concat", help="Concatenate two meanders")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(handler=cmd_concat)

    p = sub.add_parser("insert", help="Insert a meander into another")
    p.add_argument("--host", required=True)
    p.add_argument("--guest", required=True)
    p.add_argument("--pos", type=int, required=True, help="Road position k in the host")
    p.add_argument("--even", action="store_true", help="Even insert between positions k and k+1")
    p.add_argument("--mode", choices=[m.value for m in InsertMode], default=InsertMode.LITERAL.value)
    p.set_defaults(handler=cmd_insert)

    p = sub.add_parser("construct", help="Irreducible meander of order 2n+32 or 2n+35")
    p.add_argument("--perm", required=True)
    p.add_argument("--variant", choices=["32", "35", "plus32", "plus35"], default="32")
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser("prime-close", help="Prime meander containing the given one")
    p.add_argument("--perm", required=True)
    p.set_defaults(handler=cmd_prime_close)

    p = sub.add_parser("bounds", help="Growth-rate bounds")
    p.add_argument("--mu-upper", type=float, default=12.901)
    p.add_argument("--mu-lower-sq", type=float, default=11.38)
    p.add_argument("--mu-lower", type=float, default=3.37343)
    p.add_argument("--k", type=float, help="Also evaluate the upper bound at this k")
    p.set_defaults(handler=cmd_bounds)

    p = sub.add_parser("inequality", help="Check the trefoil insertion inequality at (n, k)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("-j", "--jobs", dest="workers", type=int)
    p.set_defaults(handler=cmd_inequality)

    p = sub.add_parser("ratio", help="Share of irreducible meanders by order")
    order_options(p)
    p.add_argument("-o", "--out", help="CSV output")
    p.set_defaults(handler=cmd_ratio)

    p = sub.add_parser("growth", help="n-th roots of the counts")
    order_options(p)
    p.add_argument("-o", "--out", help="CSV output (default: stdout)")
    p.set_defaults(handler=cmd_growth)

    p = sub.add_parser("render", help="Draw the arc diagram")
    p.add_argument("--perm", required=True)
    p.add_argument("--format", choices=[f.value for f in RenderFormat])
    p.add_argument("--spacing", type=float, default=40.0)
    p.add_argument("-o", "--out", help="File or directory (default: stdout)")
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser("calibrate", help="Check counts against the reference table")
    p.add_argument("--max-order", dest="max_order", type=int)
    p.add_argument("--reference", help="Reference table JSON")
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("verify", help="Run the verification suite")
    p.add_argument("--max-order", dest="max_order", type=int, help="Skip criteria needing larger orders")
    p.add_argument("--only", help="Comma-separated criterion numbers")
    p.add_argument("--reference", help="Reference table JSON")
    p.add_argument("-j", "--jobs", dest="workers", type=int)
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("enumerate", help="List every meander of one order")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_enumerate)

    p = sub.add_parser("closed", help="Count closed meanders")
    p.add_argument("--max-half-order", type=int, required=True)
    p.set_defaults(handler=cmd_closed)

    p = sub.add_parser("schemas", help="Write JSON schemas of the outputs")
    p.add_argument("-o", "--out", default="schemas")
    p.set_defaults(handler=cmd_schemas)
    return parser


def _fail(error: Exception) -> None:
    sys.stderr.write(json.dumps({"error": type(error).__name__, "message": str(error)}, ensure_ascii=False) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        _fail(e)
        return 2

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")
    args.progress = not args.quiet and sys.stderr.isatty()

    try:
        config = load_config(args)
        return args.handler(args, config)
    except (MeanderError, ValueError) as e:
        _fail(e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
