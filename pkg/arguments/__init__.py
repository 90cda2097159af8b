from argparse import ArgumentParser, Namespace
import os


class GroupParams:
    pass


class ParamGroup:
    def __init__(self, parser: ArgumentParser, name: str, fill_none=False):
        group = parser.add_argument_group(name)
        for key, value in vars(self).items():
            shorthand = False
            if key.startswith("_"):
                shorthand = True
                key = key[1:]
            t = type(value)
            value = value if not fill_none else None
            flags = ["--" + key]
            if "_" in key:
                # --lambda_fracs and --lambda-fracs both work
                flags.append("--" + key.replace("_", "-"))
            if shorthand:
                flags.append("-" + key[0:1])
            if t == bool:
                group.add_argument(*flags, dest=key, default=value, action="store_true")
            else:
                group.add_argument(*flags, dest=key, default=value, type=t)

    def extract(self, args):
        group = GroupParams()
        for arg in vars(args).items():
            if arg[0] in vars(self) or ("_" + arg[0]) in vars(self):
                setattr(group, arg[0], arg[1])
        return group


class DataParams(ParamGroup):
    def __init__(self, parser, sentinel=False):
        self._data = ""
        self.loader = "libsvm"
        self.n_features = 0
        self.no_standardize = False
        self.m = 200
        self.n = 5000
        self.seed = 1
        super().__init__(parser, "Data Parameters", sentinel)

    def extract(self, args):
        g = super().extract(args)
        if g.data:
            g.data = os.path.abspath(g.data)
        return g


class SolverParams(ParamGroup):
    def __init__(self, parser):
        self.tol = 1e-6
        self.max_outer = 500
        self.sigma0 = 0.0
        self.gamma0 = 0.0
        self.sigma_scale = 40.0
        self.sigma_cap = 5e4
        self.rho_growth = 1.01
        self.rho_trigger = 0.01
        self.eps_coef = 9.0
        self.eps_power = 1.01
        self.delta_coef = 9.0
        self.delta_power = 1.01
        self.delta_cap = 0.999
        self.u0_scale = 2e-7
        super().__init__(parser, "PPDNA Parameters")


class NewtonParams(ParamGroup):
    def __init__(self, parser):
        self.mu = 0.01
        self.eta = 0.6
        self.tau_bar = 0.1
        self.eta_bar = 0.005
        self.cg_abs_cap = 0.005
        self.max_newton_iters = 100
        self.max_linesearch_steps = 60
        self.smw_ratio_threshold = 0.5
        self.dense_cap = 4000
        self.grad_tol = 1e-11
        self.stall_tol = 1e-8
        self.domain_guard = 1e-14
        super().__init__(parser, "Semismooth Newton Parameters")


class SieveParams(ParamGroup):
    def __init__(self, parser):
        self.lambda_fracs = "0.5,0.1,0.05"
        self.eps = 0.0
        self.max_sieve_rounds = 50
        self.max_tighten = 30
        super().__init__(parser, "Sieving Parameters")


class BaselineParams(ParamGroup):
    def __init__(self, parser):
        self.max_iters = 200000
        self.step0 = 0.0
        self.backtrack = 0.5
        self.log_every = 1000
        super().__init__(parser, "Proximal Gradient Parameters")


def parse_lambda_fracs(text):
    text = text.strip()
    if not text:
        raise ValueError("the lambda grid is empty")
    return [float(tok) for tok in text.split(",") if tok.strip()]


def read_cfg_args(folder):
    """Namespace a run stored in <folder>/cfg_args, or None when there is none."""
    cfgfilepath = os.path.join(folder, "cfg_args")
    if not os.path.exists(cfgfilepath):
        return None
    with open(cfgfilepath) as cfg_file:
        cfgfile_string = cfg_file.read()
    return eval(cfgfile_string, {"__builtins__": {}}, {"Namespace": Namespace})


def write_cfg_args(folder, args):
    with open(os.path.join(folder, "cfg_args"), "w") as cfg_log_f:
        cfg_log_f.write(str(Namespace(**vars(args))))


class CliParser(ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage()
        self.exit(1, "{}: error: {}\n".format(self.prog, message))


def load_configs(args):
    if args.configs:
        import mmcv
        from utils.params_utils import merge_hparams
        config = mmcv.Config.fromfile(args.configs)
        args = merge_hparams(args, config)
    return args
