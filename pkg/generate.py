import logging
import os
import sys

from arguments import CliParser, load_configs
from problem.dataset_readers import synth_gen, write_libsvm, write_metadata
from utils.general_utils import safe_state
from utils.system_utils import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, dumps_record, mkdir_p, run_record

logger = logging.getLogger("generate")


def metadata_path(path):
    return os.path.splitext(path)[0] + ".meta.json"


def build_parser():
    parser = CliParser(description="Write a synthetic two-class dataset in LIBSVM format")
    parser.add_argument("--m", type=int, required=True)
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", type=str, required=True)
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--configs", type=str, default="")
    return parser


def main(argv=None):
    parser = build_parser()
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
        dataset = synth_gen(args.m, args.n, args.seed)
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE

    try:
        folder = os.path.dirname(os.path.abspath(args.out))
        mkdir_p(folder)
        with open(args.out, "w") as f:
            write_libsvm(dataset, f)
        write_metadata(dataset, metadata_path(args.out))
    except OSError as exc:
        logger.error("could not write %s: %s", args.out, exc)
        return EXIT_INTERNAL

    logger.info("Wrote %s: m=%d n=%d density=%.4f", args.out, dataset.X.m, dataset.X.n, dataset.X.density)
    print(dumps_record(run_record("gen", dataset=dataset.name, path=args.out, m=dataset.X.m, n=dataset.X.n,
                                  nnz=dataset.X.nnz, density=dataset.X.density, seed=args.seed)))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
