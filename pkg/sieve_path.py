import logging
import os
import sys

from arguments import (CliParser, DataParams, NewtonParams, SieveParams, SolverParams, load_configs,
                       parse_lambda_fracs, write_cfg_args)
from problem import load_from_params
from solvers import PathConfig, PpdnaConfig, SievingError, as_path
from utils.general_utils import safe_state
from utils.logistic_utils import lambda_max
from utils.system_utils import (EXIT_INTERNAL, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, JsonlWriter,
                                mkdir_p, run_record, write_results)

logger = logging.getLogger("sieve_path")

PATH_HEADER = "{:>10} | {:>5} | {:>3} | {:>6} | {:>6} | {:>8} | {:>7}".format(
    "lambda", "nnx", "iAS", "iOuter", "iInner", "res", "time")


def format_path_row(record):
    return "{:10.3e} | {:5d} | {:3d} | {:6d} | {:6d} | {:8.1e} | {:7.2f}".format(
        record["lambda"], record["nnx"], record["iAS"], record["iOuter"], record["iInner"], record["res"],
        record["time"])


def build_parser():
    parser = CliParser(description="Solution path over a decreasing lambda grid with adaptive sieving")
    dp = DataParams(parser)
    sp = SolverParams(parser)
    np_ = NewtonParams(parser)
    ap = SieveParams(parser)
    parser.add_argument("--out", type=str, default="")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--configs", type=str, default="")
    return parser, (dp, sp, np_, ap)


def main(argv=None):
    parser, (dp, sp, np_, ap) = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        args = load_configs(args)
    except Exception as exc:
        logger.error("could not load %s: %s", args.configs, exc)
        return EXIT_USAGE
    safe_state(args.quiet)

    try:
        fracs = parse_lambda_fracs(args.lambda_fracs)
        dataset = load_from_params(dp.extract(args))
        lam_max = lambda_max(dataset.X, dataset.b)
        solver = PpdnaConfig.from_params(sp.extract(args), np_.extract(args))
        cfg = PathConfig.from_params(ap.extract(args), [f * lam_max for f in fracs], solver)
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    writer = JsonlWriter(stream=sys.stdout)
    file_writer = None
    code = EXIT_OK
    records = []
    try:
        if args.out:
            mkdir_p(args.out)
            write_cfg_args(args.out, args)
            file_writer = JsonlWriter(os.path.join(args.out, "records.jsonl"))
        logger.info("Sieving path on %s: m=%d n=%d lambda_max=%.6e grid=%s",
                    dataset.name, dataset.X.m, dataset.X.n, lam_max, fracs)

        def emit(entry):
            frac = entry.lam / lam_max
            record = run_record("path", dataset=dataset.name, lambda_frac=frac, lambda_max=lam_max,
                                eps=cfg.resolve_eps(dataset.b), **entry.as_record())
            records.append(record)
            writer.write(record)
            if file_writer is not None:
                file_writer.write(dict(record, kind="path"))

        try:
            result = as_path(dataset.X, dataset.b, cfg, callback=emit, progress=not args.quiet)
            total = result.wall_time
        except SievingError as exc:
            logger.warning("%s", exc)
            code = EXIT_NOT_CONVERGED
            total = sum(r["time"] for r in records)

        logger.info(PATH_HEADER)
        for record in records:
            logger.info(format_path_row(record))
        if file_writer is not None:
            file_writer.close()
            write_results(args.out, {dataset.name: {"entries": records, "time": total,
                                                    "complete": code == EXIT_OK}})
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL
    return code


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
