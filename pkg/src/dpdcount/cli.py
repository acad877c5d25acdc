"""Command-line interface: simulate, contaminate, fit, tune, mc, knot, diagnose.

Datasets travel as CSV (header ``y,x1,...,xd``); structured results are
JSON documents that echo the full configuration, defaults included, so
any run can be reproduced from its own output.  Exit status: 0 success,
1 usage error, 2 numeric failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import dataset, diagnostics, fitting, montecarlo, tuning
from . import simulator as simmod
from .dpd import DpdConfig
from .errors import DpdcountError
from .families import family_from_spec
from .meanmodel import LinearIngarchX, OneKnot, ParamBox, lambda_path


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _default_seed():
    return int(os.environ.get("DPDCOUNT_SEED", "0"))


def _add_family_args(p):
    p.add_argument("--family", default="poisson",
                   choices=["poisson", "nb", "negbinomial", "bernoulli"])
    p.add_argument("--nb-r", type=float, default=None,
                   help="negative binomial dispersion (required for nb)")
    p.add_argument("--tail-mass", type=float, default=1e-12)
    p.add_argument("--cap", type=int, default=100_000)


def _add_model_args(p):
    p.add_argument("--model", default="linear", choices=["linear", "oneknot"])
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--transforms", default="",
                   help="comma list per covariate: identity,abs,exp,negpart")
    p.add_argument("--knot", type=int, default=1, help="threshold for oneknot")


def _add_box_args(p):
    p.add_argument("--alpha-l", type=float, default=1e-4)
    p.add_argument("--alpha-u", type=float, default=None,
                   help="intercept cap; default 10*mean(y)")
    p.add_argument("--alpha-v", type=float, default=100.0)
    p.add_argument("--eps", type=float, default=1e-4)


def _add_fit_args(p):
    p.add_argument("--init-mode", default="alpha0")
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--seed", type=int, default=None)


def _family(args):
    return family_from_spec(args.family, r=args.nb_r,
                            tail_mass=args.tail_mass, cap=args.cap)


def _model(args):
    if args.model == "oneknot":
        return OneKnot(args.knot)
    transforms = tuple(t for t in args.transforms.split(",") if t)
    return LinearIngarchX(q=args.q, p=args.p, transforms=transforms)


def _box(args, y):
    if args.alpha_u is None:
        return ParamBox.for_counts(y, alpha_l=args.alpha_l,
                                   alpha_v=args.alpha_v, eps=args.eps)
    return ParamBox(alpha_l=args.alpha_l, alpha_u=args.alpha_u,
                    alpha_v=args.alpha_v, eps=args.eps)


def _init_mode(text):
    if text in ("alpha0", "empirical-mean"):
        return text
    return float(text)


def _driver(args):
    if args.driver == "none":
        return None
    params = _floats(args.driver_params)
    if args.driver == "arch1":
        if len(params) != 2:
            raise _UsageError("arch1 driver needs --driver-params omega0,omega1")
        return simmod.Arch1Driver(*params)
    return simmod.Ar1Driver(tuple(params), sd=args.driver_sd)


def _outlier_law(args):
    if args.outlier == "poisson":
        if args.outlier_mean is None:
            raise _UsageError("poisson outliers need --outlier-mean")
        return simmod.PoissonOutliers(args.outlier_mean)
    params = _floats(args.outlier_params or "")
    if len(params) != 2:
        raise _UsageError("nb outliers need --outlier-params r,p")
    return simmod.NegBinomialOutliers(*params)


def _config_echo(cfg, args, data_desc, fit_opts=None):
    model = cfg.model
    if isinstance(model, OneKnot):
        model_desc = {"form": "oneknot", "knot": int(model.knot)}
    else:
        model_desc = {"form": "linear", "q": model.q, "p": model.p,
                      "transforms": list(model.transforms)}
    fam = cfg.family
    fam_desc = {"kind": fam.name, "tail_mass": fam.tail_mass, "cap": fam.cap}
    if fam.name == "negbinomial":
        fam_desc["r"] = fam.r
    echo = {
        "alpha": float(cfg.alpha),
        "family": fam_desc,
        "model": model_desc,
        "box": {
            "alpha_l": cfg.box.alpha_l,
            "alpha_u": cfg.box.alpha_u,
            "alpha_v": cfg.box.alpha_v,
            "eps": cfg.box.eps,
        },
        "init_mode": cfg.lam_init if isinstance(cfg.lam_init, str) else float(cfg.lam_init),
        "data": data_desc,
    }
    if fit_opts is not None:
        echo["optimizer"] = fit_opts
    return echo


def _dump(payload, out):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def fit_payload(cfg, args, data, result, fit_opts):
    """JSON document for a fit; shared by the CLI and the test suite."""
    data_desc = {"path": getattr(args, "data", None), "n": data.n, "d_x": data.d_x}
    return {
        "schema": "dpdcount.fit/1",
        "config": _config_echo(cfg, args, data_desc, fit_opts),
        "result": result.to_dict(),
    }


def _cmd_simulate(args):
    model = _model(args)
    spec = simmod.SimSpec(
        model=model,
        family=_family(args),
        theta=np.array(_floats(args.theta)),
        driver=_driver(args),
        n=args.n,
        burn_in=args.burn_in,
        seed=args.seed if args.seed is not None else _default_seed(),
    )
    data = simmod.simulate(spec)
    dataset.write_csv(data, args.out)
    return 0


def _cmd_contaminate(args):
    data = dataset.read_csv(args.data)
    spec = simmod.ContamSpec(
        p=args.p, law=_outlier_law(args),
        seed=args.seed if args.seed is not None else _default_seed(),
    )
    out = simmod.contaminate(data, spec)
    dataset.write_csv(out, args.out)
    return 0


def _cmd_fit(args):
    data = dataset.read_csv(args.data)
    cfg = DpdConfig(alpha=args.alpha, family=_family(args), model=_model(args),
                    box=_box(args, data.y), lam_init=_init_mode(args.init_mode))
    seed = args.seed if args.seed is not None else _default_seed()
    result = fitting.fit(cfg, data, starts=args.starts, seed=seed,
                         max_iter=args.max_iter)
    fit_opts = {"starts": args.starts, "seed": seed, "max_iter": args.max_iter}
    _dump(fit_payload(cfg, args, data, result, fit_opts), args.out)
    return 0


def _cmd_tune(args):
    data = dataset.read_csv(args.data)
    cfg = DpdConfig(alpha=1.0, family=_family(args), model=_model(args),
                    box=_box(args, data.y), lam_init=_init_mode(args.init_mode))
    seed = args.seed if args.seed is not None else _default_seed()
    grid = _floats(args.grid) if args.grid else list(tuning.DEFAULT_GRID)
    report = tuning.tune(cfg, data, grid=grid, starts=args.starts, seed=seed,
                         max_iter=args.max_iter)
    payload = {
        "schema": "dpdcount.tune/1",
        "config": _config_echo(cfg, args,
                               {"path": args.data, "n": data.n, "d_x": data.d_x},
                               {"starts": args.starts, "seed": seed,
                                "max_iter": args.max_iter, "grid": grid}),
        "result": report.to_dict(),
    }
    _dump(payload, args.out)
    return 0


def _cmd_mc(args):
    model = _model(args)
    seed = args.seed if args.seed is not None else _default_seed()
    spec = simmod.SimSpec(
        model=model, family=_family(args), theta=np.array(_floats(args.theta)),
        driver=_driver(args), n=args.n, burn_in=args.burn_in, seed=seed,
    )
    contam = None
    if args.contam_p > 0:
        contam = simmod.ContamSpec(p=args.contam_p, law=_outlier_law(args))
    report = montecarlo.run_mc(spec, _floats(args.alphas), args.reps, seed,
                               contam=contam, starts=args.starts,
                               max_iter=args.max_iter)
    report.write_csv(args.out + ".csv")
    with open(args.out + ".txt", "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    sys.stdout.write(report.to_text())
    return 0


def _cmd_knot(args):
    data = dataset.read_csv(args.data)
    cfg = DpdConfig(alpha=args.alpha, family=_family(args), model=OneKnot(1),
                    box=_box(args, data.y), lam_init=_init_mode(args.init_mode))
    seed = args.seed if args.seed is not None else _default_seed()
    kf = fitting.fit_knot(cfg, data, starts=args.starts, seed=seed,
                          max_iter=args.max_iter)
    payload = {
        "schema": "dpdcount.knot/1",
        "config": _config_echo(cfg, args,
                               {"path": args.data, "n": data.n, "d_x": data.d_x},
                               {"starts": args.starts, "seed": seed,
                                "max_iter": args.max_iter}),
        "result": kf.to_dict(),
    }
    _dump(payload, args.out)
    return 0


def _cmd_diagnose(args):
    data = dataset.read_csv(args.data)
    with open(args.fit, encoding="utf-8") as fh:
        doc = json.load(fh)
    conf = doc["config"]
    fam_desc = conf["family"]
    fam = family_from_spec(fam_desc["kind"], r=fam_desc.get("r"),
                           tail_mass=fam_desc["tail_mass"], cap=fam_desc["cap"])
    mdesc = conf["model"]
    if mdesc["form"] == "oneknot":
        model = OneKnot(mdesc["knot"])
    else:
        model = LinearIngarchX(q=mdesc["q"], p=mdesc["p"],
                               transforms=tuple(mdesc["transforms"]))
    box = ParamBox(**conf["box"])
    theta = np.array(doc["result"]["theta_hat"])
    init = conf["init_mode"]
    lam = lambda_path(model, box, theta, data, init)
    rep = diagnostics.diagnose(fam, lam, data.y, n_params=len(theta),
                               level=args.level)
    rep.write_csv(args.out, data.y, lam)
    sys.stdout.write(
        f"residual_mse={rep.mse:.6g} coverage={rep.coverage:.4f} "
        f"level={rep.level:g} rule={rep.interval_rule}\n"
    )
    return 0


def build_parser():
    parser = _Parser(prog="dpdcount",
                     description="Robust divergence-based estimation for "
                                 "count time series with covariates.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_sim = sub.add_parser("simulate", help="generate a dataset CSV")
    _add_model_args(p_sim)
    _add_family_args(p_sim)
    p_sim.add_argument("--theta", required=True, help="comma list")
    p_sim.add_argument("--driver", default="none", choices=["arch1", "ar1", "none"])
    p_sim.add_argument("--driver-params", default="", help="comma list")
    p_sim.add_argument("--driver-sd", type=float, default=1.0)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--burn-in", type=int, default=500)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_con = sub.add_parser("contaminate", help="add outliers to a dataset CSV")
    p_con.add_argument("--data", required=True)
    p_con.add_argument("--p", type=float, required=True)
    p_con.add_argument("--outlier", default="poisson", choices=["poisson", "nb"])
    p_con.add_argument("--outlier-mean", type=float, default=None)
    p_con.add_argument("--outlier-params", default=None)
    p_con.add_argument("--seed", type=int, default=None)
    p_con.add_argument("--out", required=True)
    p_con.set_defaults(func=_cmd_contaminate)

    p_fit = sub.add_parser("fit", help="estimate parameters from a CSV")
    p_fit.add_argument("--data", required=True)
    _add_model_args(p_fit)
    _add_family_args(p_fit)
    _add_box_args(p_fit)
    _add_fit_args(p_fit)
    p_fit.add_argument("--alpha", type=float, required=True)
    p_fit.add_argument("--out", default="-")
    p_fit.set_defaults(func=_cmd_fit)

    p_tune = sub.add_parser("tune", help="select the tuning parameter")
    p_tune.add_argument("--data", required=True)
    _add_model_args(p_tune)
    _add_family_args(p_tune)
    _add_box_args(p_tune)
    _add_fit_args(p_tune)
    p_tune.add_argument("--grid", default="", help="comma list incl. 1")
    p_tune.add_argument("--out", default="-")
    p_tune.set_defaults(func=_cmd_tune)

    p_mc = sub.add_parser("mc", help="Monte Carlo scenario table")
    _add_model_args(p_mc)
    _add_family_args(p_mc)
    _add_fit_args(p_mc)
    p_mc.add_argument("--theta", required=True)
    p_mc.add_argument("--driver", default="none", choices=["arch1", "ar1", "none"])
    p_mc.add_argument("--driver-params", default="")
    p_mc.add_argument("--driver-sd", type=float, default=1.0)
    p_mc.add_argument("--n", type=int, required=True)
    p_mc.add_argument("--burn-in", type=int, default=500)
    p_mc.add_argument("--alphas", required=True, help="comma list")
    p_mc.add_argument("--reps", type=int, required=True)
    p_mc.add_argument("--contam-p", type=float, default=0.0)
    p_mc.add_argument("--outlier", default="poisson", choices=["poisson", "nb"])
    p_mc.add_argument("--outlier-mean", type=float, default=None)
    p_mc.add_argument("--outlier-params", default=None)
    p_mc.add_argument("--out", required=True, help="output path prefix")
    p_mc.set_defaults(func=_cmd_mc)

    p_knot = sub.add_parser("knot", help="profile the threshold location")
    p_knot.add_argument("--data", required=True)
    _add_family_args(p_knot)
    _add_box_args(p_knot)
    _add_fit_args(p_knot)
    p_knot.add_argument("--alpha", type=float, required=True)
    p_knot.add_argument("--out", default="-")
    p_knot.set_defaults(func=_cmd_knot)

    p_diag = sub.add_parser("diagnose", help="residual report from a fit JSON")
    p_diag.add_argument("--data", required=True)
    p_diag.add_argument("--fit", required=True)
    p_diag.add_argument("--level", type=float, default=0.95)
    p_diag.add_argument("--out", required=True)
    p_diag.set_defaults(func=_cmd_diagnose)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return 1
    except DpdcountError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
