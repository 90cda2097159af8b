import logging
import os
import sys

from tqdm import tqdm

from arguments import CliParser, read_cfg_args
from sieve_path import PATH_HEADER, format_path_row
from utils.general_utils import safe_state
from utils.system_utils import EXIT_OK, EXIT_USAGE, read_jsonl, searchForRuns, write_results

logger = logging.getLogger("bench")

SOLVE_HEADER = "{:<28} | {:>8} | {:>11} | {:>8} | {:>8} | {:>5}".format(
    "run", "solver", "outer(inner)", "time", "R_kkt", "nnz")


def format_solve_row(name, record):
    return "{:<28} | {:>8} | {:>11} | {:8.2f} | {:8.1e} | {:>5}".format(
        name[-28:], record["solver"], record["iterations"], record["time"], record["rkkt"], str(record["nnz"]))


def collect(folder):
    """Summaries of every run below `folder`, keyed by run directory relative to it."""
    runs = {}
    for path in searchForRuns(folder):
        run_dir = os.path.dirname(path)
        name = os.path.relpath(run_dir, folder)
        records = read_jsonl(path)
        cfg = read_cfg_args(run_dir)
        runs[name] = {
            "config": os.path.basename(cfg.configs) if cfg is not None and getattr(cfg, "configs", "") else "",
            "solve": [r for r in records if r.get("kind") == "summary"],
            "path": [r for r in records if r.get("kind") == "path"],
        }
    return runs


def evaluate(run_paths):
    results = {}
    for folder in tqdm(run_paths, desc="Collecting runs"):
        runs = collect(folder)
        if not runs:
            logger.warning("no records.jsonl below %s", folder)
            continue
        results[folder] = runs

        logger.info("Runs below %s", folder)
        solves = [(name, rec) for name, run in runs.items() for rec in run["solve"]]
        if solves:
            logger.info(SOLVE_HEADER)
            for name, rec in solves:
                logger.info(format_solve_row(name, rec))
        for name, run in runs.items():
            if run["path"]:
                logger.info("Path %s", name)
                logger.info(PATH_HEADER)
                for rec in run["path"]:
                    logger.info(format_path_row(rec))
        write_results(folder, runs, name="bench_results.json")
    return results


def main(argv=None):
    parser = CliParser(description="Aggregate run records into result tables")
    parser.add_argument("--run_paths", "-r", required=True, nargs="+", type=str, default=[])
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    safe_state(args.quiet)
    missing = [p for p in args.run_paths if not os.path.isdir(p)]
    if missing:
        logger.error("not a directory: %s", ", ".join(missing))
        return EXIT_USAGE
    evaluate(args.run_paths)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
