import logging
import os
import sys
from dataclasses import replace

from arguments import BaselineParams, CliParser, DataParams, NewtonParams, SolverParams, load_configs, write_cfg_args
from problem import ProblemInstance, load_from_params
from solvers import BaselineConfig, BaselineError, PpdnaConfig, ppdna_solve, prox_grad_solve
from solvers.ppdna import KktReport
from utils.general_utils import safe_state
from utils.logistic_utils import lambda_max
from utils.system_utils import (EXIT_INTERNAL, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, JsonlWriter, dumps_record,
                                mkdir_p, run_record, write_results)
from utils.timer import Timer

logger = logging.getLogger("solve")


def build_parser():
    parser = CliParser(description="Solve one l1-regularized logistic regression instance")
    dp = DataParams(parser)
    sp = SolverParams(parser)
    np_ = NewtonParams(parser)
    bp = BaselineParams(parser)
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--lambda", dest="lam", type=float, default=None)
    group.add_argument("--lambda-frac", "--lambda_frac", dest="lambda_frac", type=float, default=None,
                       help="lambda as a fraction of lambda_max")
    parser.add_argument("--solver", choices=["ppdna", "proxgrad"], default="ppdna")
    parser.add_argument("--out", type=str, default="")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--configs", type=str, default="")
    return parser, (dp, sp, np_, bp)


def solving(dataset, lam, lam_max, args, groups, out_writer=None):
    _, sp, np_, bp = groups
    inst = ProblemInstance.from_dataset(dataset, lam)
    logger.info("Solving %s with %s: m=%d n=%d lambda=%.6e (lambda_max=%.6e)",
                dataset.name, args.solver, inst.m, inst.n, lam, lam_max)

    timer = Timer().start()
    if args.solver == "ppdna":
        cfg = PpdnaConfig.from_params(sp.extract(args), np_.extract(args))
        callback = (lambda rec: out_writer.write(dict(rec.as_dict(), kind="outer"))) if out_writer else None
        sol = ppdna_solve(inst, cfg=cfg, callback=callback)
        report = dict(iterations=sol.iterations, outer=sol.outer_iters, inner=sol.inner_iters_total,
                      rkkt=sol.rkkt.total, rkkt1=sol.rkkt.rkkt1, rkkt2=sol.rkkt.rkkt2, nnz=sol.nnz, v=sol.v,
                      objective=sol.objective, converged=sol.converged, backends=dict(sol.backends),
                      gap_violations=sol.gap_violations, inner_limit_hits=sol.inner_limit_hits)
    else:
        cfg = replace(BaselineConfig.from_params(bp.extract(args)), tol=args.tol)
        try:
            sol = prox_grad_solve(inst, cfg)
            rkkt, converged, w, v, objective, iters = sol.rkkt, True, sol.w, sol.v, sol.objective, sol.iterations
        except BaselineError as exc:
            logger.warning("%s", exc)
            rkkt, converged, w, v, objective, iters = KktReport(float("nan"), float("nan")), False, None, None, None, 0
        report = dict(iterations="{}".format(iters), outer=iters, inner=0, rkkt=rkkt.total, rkkt1=rkkt.rkkt1,
                      rkkt2=rkkt.rkkt2, nnz=None if w is None else int((w != 0).sum()), v=v,
                      objective=objective, converged=converged)
    report["time"] = timer.get_elapsed_time()
    return report


def main(argv=None):
    parser, groups = build_parser()
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
        dataset = load_from_params(groups[0].extract(args))
        lam_max = lambda_max(dataset.X, dataset.b)
        if args.lam is not None:
            lam = args.lam
        else:
            lam = args.lambda_frac * lam_max
        if lam < 0 or (args.solver == "ppdna" and lam == 0):
            raise ValueError("lambda must be positive for ppdna and nonnegative for proxgrad, got {}".format(lam))
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        writer = None
        if args.out:
            mkdir_p(args.out)
            write_cfg_args(args.out, args)
            writer = JsonlWriter(os.path.join(args.out, "records.jsonl"))
        report = solving(dataset, lam, lam_max, args, groups, out_writer=writer)
        record = run_record("solve", dataset=dataset.name, m=dataset.X.m, n=dataset.X.n, solver=args.solver,
                            tol=args.tol, **{"lambda": lam, "lambda_frac": args.lambda_frac, "lambda_max": lam_max},
                            **report)
        if writer is not None:
            writer.write(dict(record, kind="summary"))
            writer.close()
            write_results(args.out, {dataset.name: record})
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL

    print(dumps_record(record))
    logger.info("%s | iter %s | time %.2fs | R_kkt %.1e | nnz %s", dataset.name, report["iterations"],
                report["time"], report["rkkt"], report["nnz"])
    return EXIT_OK if report["converged"] else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
