DataParams = dict(
    loader = "synthetic",
    seed = 1,
)

SolverParams = dict(
    tol = 1e-6,
    max_outer = 500,
)

SieveParams = dict(
    lambda_fracs = "0.5,0.1,0.05",
)
