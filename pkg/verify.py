import io
import logging
import sys
from collections import OrderedDict

import numpy as np
from scipy import sparse
from tqdm import tqdm

from arguments import CliParser
from problem import ProblemInstance
from problem.dataset_readers import parse_libsvm_text, synth_gen, write_libsvm
from solvers import BaselineConfig, PathConfig, PpdnaConfig, as_path, ppdna_solve, prox_grad_solve
from solvers.ssn import (ActiveSet, NewtonError, Subproblem, hess_apply, newton_direction, psi_grad, psi_value,
                         ssn_solve)
from utils import logistic_utils, prox_utils
from utils.general_utils import safe_state
from utils.system_utils import EXIT_OK, JsonlWriter
from utils.timer import Timer

logger = logging.getLogger("verify")

SUPPORT_THRESHOLD = 1e-8
CHECKS_FAILED = 1


def _fd_grad(f, x, h=1e-6):
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


def _rel_strict(a, b):
    scale = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / scale) if scale > 0 else float(np.linalg.norm(a))


def _dual_point(rng, b, lo=0.05, hi=0.95):
    return -b * rng.uniform(lo, hi, size=b.shape[0]) / b.shape[0]


def _labels(rng, m):
    b = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    b[0], b[1] = 1.0, -1.0
    return b


def _random_instance(rng, m, n, density=0.3):
    A = sparse.random(m, n, density=density, random_state=rng, data_rvs=rng.standard_normal, format="csr")
    return A, _labels(rng, m)


def check_calculus(rng, trials):
    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(3, 20))
        b = _labels(rng, m)
        x = rng.standard_normal(m) * 2.0
        worst = max(worst, _rel(logistic_utils.logistic_loss_grad(x, b),
                                _fd_grad(lambda z: logistic_utils.logistic_loss(z, b), x)))
        u = _dual_point(rng, b)
        worst = max(worst, _rel(logistic_utils.conj_grad(u, b),
                                _fd_grad(lambda z: logistic_utils.conj_value(z, b), u, h=1e-7)))
        step = 1e-5 / (m * m)
        hd_fd = np.empty(m)
        for i in range(m):
            e = np.zeros(m)
            e[i] = step
            hd_fd[i] = (logistic_utils.conj_grad(u + e, b)[i] - logistic_utils.conj_grad(u - e, b)[i]) / (2 * step)
        worst = max(worst, _rel(logistic_utils.conj_hess_diag(u, b), hd_fd))
        t = float(rng.uniform(0.1, 2.0))
        y = rng.standard_normal(m) * 2.0
        worst = max(worst, _rel(prox_utils.moreau_env_l1_grad(y, t),
                                _fd_grad(lambda z: prox_utils.moreau_env_l1(z, t), y)))
    return worst <= 1e-5, "max rel err {:.1e}".format(worst)


def check_fenchel(rng, trials):
    worst, worst_inv = 0.0, 0.0
    for _ in range(trials):
        m = int(rng.integers(3, 50))
        b = _labels(rng, m)
        x = rng.standard_normal(m) * 3.0
        g = logistic_utils.logistic_loss_grad(x, b)
        lhs = logistic_utils.logistic_loss(x, b) + logistic_utils.conj_value(g, b)
        worst = max(worst, abs(lhs - x @ g))
        # grad h* inverts grad h
        worst_inv = max(worst_inv, float(np.abs(logistic_utils.conj_grad(g, b) - x).max()))
    ok = worst <= 1e-10 and worst_inv <= 1e-8
    return ok, "identity {:.1e}, inverse {:.1e}".format(worst, worst_inv)


def check_psi_grad(rng, trials):
    worst = 0.0
    for _ in range(trials):
        m, n = int(rng.integers(4, 20)), int(rng.integers(4, 30))
        A, b = _random_instance(rng, m, n, density=0.5)
        inst = ProblemInstance(A, b, 0.05)
        sub = Subproblem(rng.standard_normal(n), float(rng.standard_normal()), 2.0, 3.0, inst)
        u = _dual_point(rng, b)
        worst = max(worst, _rel(psi_grad(u, sub), _fd_grad(lambda z: psi_value(z, sub), u, h=1e-7)))
    return worst <= 1e-5, "max rel err {:.1e}".format(worst)


def check_newton_backends(rng, trials):
    worst_direct, worst_cg = 0.0, 0.0
    for _ in range(trials):
        m, n = int(rng.integers(20, 200)), int(rng.integers(10, 300))
        A, b = _random_instance(rng, m, n)
        inst = ProblemInstance(A, b, 0.01)
        sub = Subproblem(rng.standard_normal(n), 0.0, float(rng.uniform(0.5, 50)), float(rng.uniform(0.5, 50)), inst)
        u = _dual_point(rng, b)
        active = ActiveSet(np.sort(rng.choice(n, size=int(rng.integers(0, n)), replace=False)))
        g = psi_grad(u, sub)
        dense = newton_direction(u, active, sub, 1e-13, grad=g, backend="dense").d
        smw = newton_direction(u, active, sub, 1e-13, grad=g, backend="smw").d
        cg = newton_direction(u, active, sub, 1e-12 * np.linalg.norm(g), grad=g, backend="cg").d
        worst_direct = max(worst_direct, _rel_strict(smw, dense))
        worst_cg = max(worst_cg, _rel_strict(cg, dense))
        resid = np.linalg.norm(hess_apply(u, active, sub, dense) + g) / np.linalg.norm(g)
        worst_direct = max(worst_direct, resid)
    ok = worst_direct <= 1e-8 and worst_cg <= 1e-6
    return ok, "direct {:.1e} cg {:.1e}".format(worst_direct, worst_cg)


def check_cross_solver(rng, trials):
    worst, mismatched, violations = 0.0, 0, 0
    cfg = PpdnaConfig(tol=1e-8)
    for k in range(trials):
        m, n = int(rng.integers(20, 50)), int(rng.integers(20, 100))
        A, b = _random_instance(rng, m, n, density=0.5)
        lam = (0.5, 0.1, 0.05)[k % 3] * logistic_utils.lambda_max(A, b)
        inst = ProblemInstance(A, b, lam)
        sol = ppdna_solve(inst, cfg=cfg)
        ref = prox_grad_solve(inst, BaselineConfig(tol=1e-9))
        worst = max(worst, abs(sol.objective - ref.objective) / max(1.0, abs(ref.objective)))
        if not np.array_equal(prox_utils.support(sol.w, SUPPORT_THRESHOLD), prox_utils.support(ref.w, SUPPORT_THRESHOLD)):
            mismatched += 1
        violations += sol.gap_violations
    ok = worst <= 1e-6 and mismatched == 0 and violations == 0
    return ok, "rel obj {:.1e}, support mismatches {}, gap violations {}".format(worst, mismatched, violations)


def check_lambda_max(rng, trials):
    worst_w, worst_r = 0.0, 0.0
    for _ in range(trials):
        m, n = int(rng.integers(10, 50)), int(rng.integers(10, 100))
        A, b = _random_instance(rng, m, n)
        inst = ProblemInstance(A, b, 1.01 * logistic_utils.lambda_max(A, b))
        sol = ppdna_solve(inst)
        worst_w = max(worst_w, float(np.abs(sol.w).max()))
        worst_r = max(worst_r, sol.rkkt.total)
    return worst_w <= 1e-9 and worst_r <= 1e-6, "max |w| {:.1e}, R_kkt {:.1e}".format(worst_w, worst_r)


def check_sieving(rng, m, n):
    data = synth_gen(m, n, seed=int(rng.integers(1 << 31)))
    lam_max = logistic_utils.lambda_max(data.X, data.b)
    cfg = PathConfig(lambdas=[f * lam_max for f in (0.5, 0.1, 0.05)])
    path = as_path(data.X, data.b, cfg)
    worst, mismatched, rounds = 0.0, 0, 0
    for entry in path.entries:
        full = ppdna_solve(ProblemInstance(data.X, data.b, entry.lam), cfg=PpdnaConfig(tol=1e-8))
        worst = max(worst, abs(entry.objective - full.objective) / max(1.0, abs(full.objective)))
        if not np.array_equal(prox_utils.support(entry.w, SUPPORT_THRESHOLD),
                              prox_utils.support(full.w, SUPPORT_THRESHOLD)):
            mismatched += 1
        rounds = max(rounds, entry.sieve_rounds)
    ok = (worst <= 1e-6 and mismatched == 0 and rounds <= 5 and all(e.res <= path.eps for e in path.entries))
    return ok, "rel obj {:.1e}, support mismatches {}, max rounds {}".format(worst, mismatched, rounds)


def check_dual_domain(rng, trials):
    visited, outside, worst_y = 0, 0, 0.0
    for _ in range(trials):
        m, n = int(rng.integers(10, 60)), int(rng.integers(20, 120))
        A, b = _random_instance(rng, m, n, density=0.5)
        inst = ProblemInstance(A, b, 0.1 * logistic_utils.lambda_max(A, b))
        sub = Subproblem(rng.standard_normal(n), 0.0, float(rng.uniform(1.0, 100.0)), float(rng.uniform(1.0, 100.0)),
                         inst)
        seen = []

        def record(u, ev):
            seen.append(logistic_utils.in_domain(u, inst.b))
            return False

        try:
            ssn_solve(sub, -2e-7 * b / m, stop=record)
        except NewtonError as exc:
            if exc.u is not None:
                seen.append(logistic_utils.in_domain(exc.u, inst.b))
        visited += len(seen)
        outside += seen.count(False)

        sol = ppdna_solve(inst)
        worst_y = max(worst_y, float(np.abs(logistic_utils.logistic_loss_grad(sol.y, b) - sol.u).max()))
    ok = outside == 0 and worst_y <= 1e-10
    return ok, "{} of {} iterates outside dom h*, max |grad h(y) - u| {:.1e}".format(outside, visited, worst_y)


def check_index_growth(rng, m, n):
    data = synth_gen(m, n, seed=int(rng.integers(1 << 31)))
    lam_max = logistic_utils.lambda_max(data.X, data.b)
    path = as_path(data.X, data.b, PathConfig(lambdas=[f * lam_max for f in (0.5, 0.1, 0.05)]))
    shrunk, previous = 0, None
    for entry in path.entries:
        sizes = entry.round_sizes
        shrunk += sum(1 for a, c in zip(sizes, sizes[1:]) if c < a)
        if len(sizes) != entry.sieve_rounds or sizes[-1] != entry.index_size:
            shrunk += 1
        if previous is not None and sizes[0] != previous:
            shrunk += 1
        previous = entry.index_size
    return shrunk == 0, "{} violations, sizes {}".format(shrunk, [e.round_sizes for e in path.entries])


def check_sieving_speedup(rng, m=600, n=15000):
    data = synth_gen(m, n, seed=1)
    lam_max = logistic_utils.lambda_max(data.X, data.b)
    lambdas = [f * lam_max for f in (0.5, 0.1, 0.05)]
    # build the column cache before timing either side
    data.X.columns([0])
    path = as_path(data.X, data.b, PathConfig(lambdas=lambdas))
    full = sum(ppdna_solve(ProblemInstance(data.X, data.b, lam)).wall_time for lam in lambdas)
    ratio = path.wall_time / full
    return ratio <= 0.5, "sieving {:.2f}s, full solves {:.2f}s, ratio {:.2f}".format(path.wall_time, full, ratio)


def check_roundtrip(rng, trials):
    failures = 0
    for _ in range(trials):
        data = synth_gen(int(rng.integers(2, 30)), int(rng.integers(1, 40)), seed=int(rng.integers(1 << 31)))
        stream = io.StringIO()
        write_libsvm(data, stream)
        back = parse_libsvm_text(stream.getvalue(), n_features=data.X.n)
        diff = data.X.data - back.X.data
        if diff.count_nonzero() or not np.array_equal(back.b, data.b):
            failures += 1
    return failures == 0, "{} failures".format(failures)


def check_case1_convergence(rng):
    data = synth_gen(200, 5000, seed=1)
    lam_max = logistic_utils.lambda_max(data.X, data.b)
    worst_outer, worst_inner, worst_r = 0, 0, 0.0
    for frac in (0.5, 0.1, 0.05):
        sol = ppdna_solve(ProblemInstance(data.X, data.b, frac * lam_max))
        worst_outer = max(worst_outer, sol.outer_iters)
        worst_inner = max(worst_inner, sol.inner_iters_total)
        worst_r = max(worst_r, sol.rkkt.total)
    ok = worst_r <= 1e-6 and worst_outer <= 10 and worst_inner <= 60
    return ok, "max outer {} inner {} R_kkt {:.1e}".format(worst_outer, worst_inner, worst_r)


def build_checks(quick):
    scale = 0.2 if quick else 1.0

    def n(count):
        return max(2, int(count * scale))

    checks = OrderedDict()
    checks["calculus"] = lambda rng: check_calculus(rng, n(100))
    checks["fenchel"] = lambda rng: check_fenchel(rng, n(100))
    checks["psi_grad"] = lambda rng: check_psi_grad(rng, n(50))
    checks["newton_backends"] = lambda rng: check_newton_backends(rng, n(50))
    checks["cross_solver"] = lambda rng: check_cross_solver(rng, n(20))
    checks["lambda_max"] = lambda rng: check_lambda_max(rng, n(10))
    checks["parser_roundtrip"] = lambda rng: check_roundtrip(rng, n(20))
    checks["sieving"] = (lambda rng: check_sieving(rng, 60, 400)) if quick else (lambda rng: check_sieving(rng, 200, 5000))
    checks["dual_domain"] = lambda rng: check_dual_domain(rng, n(20))
    checks["index_growth"] = (lambda rng: check_index_growth(rng, 60, 400)) if quick else (lambda rng: check_index_growth(rng, 200, 5000))
    if not quick:
        checks["case1_convergence"] = check_case1_convergence
        checks["sieving_speedup"] = check_sieving_speedup
    return checks


def run_checks(checks, seed=0, writer=None):
    rows = []
    for name, check in tqdm(checks.items(), desc="Verification checks"):
        rng = np.random.Generator(np.random.Philox(seed))
        timer = Timer().start()
        try:
            ok, detail = check(rng)
        except Exception as exc:
            logger.exception("check %s raised", name)
            ok, detail = False, "{}: {}".format(type(exc).__name__, exc)
        row = {"check": name, "ok": bool(ok), "detail": detail, "time": timer.get_elapsed_time()}
        rows.append(row)
        if writer is not None:
            writer.write(row)
    return rows


def main(argv=None):
    parser = CliParser(description="Oracle and invariant checks")
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    safe_state(args.quiet, seed=args.seed)

    rows = run_checks(build_checks(args.quick), seed=args.seed, writer=JsonlWriter(stream=sys.stdout))
    print("{:<18} | {:<4} | {:>7} | {}".format("check", "ok", "time", "detail"))
    for row in rows:
        print("{:<18} | {:<4} | {:7.2f} | {}".format(row["check"], "PASS" if row["ok"] else "FAIL", row["time"],
                                                    row["detail"]))
    failed = [row["check"] for row in rows if not row["ok"]]
    if failed:
        logger.error("%d check(s) failed: %s", len(failed), ", ".join(failed))
        return CHECKS_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
