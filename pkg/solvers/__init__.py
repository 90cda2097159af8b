from solvers.ssn import LineSearchError, NewtonError, NewtonIterationLimit, SsnConfig, ssn_solve
from solvers.ppdna import KktReport, PpdnaConfig, Solution, kkt_residual_rel, ppdna_solve
from solvers.sieving import PathConfig, PathEntry, PathResult, SievingError, as_path
from solvers.baseline import BaselineConfig, BaselineError, BaselineSolution, prox_grad_solve

solverCallbacks = {
    "ppdna": ppdna_solve,
    "proxgrad": prox_grad_solve,
}
