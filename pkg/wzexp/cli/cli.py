import argparse
import json
import math
import os
import sys
from typing import IO, List

import numpy as np

from wzexp.shared import WzGuardError, WzRuntimeError, WzValidationError
from wzexp.prob import SourceModel, load_source
from wzexp.simplex import OptimizerConfig
from wzexp.region import default_mu_grid, envelope, hyperplane_curve
from wzexp.exponent import ExponentSearch, OmegaSurface, exponent_F, kappa_n, rho_estimate
from wzexp.coding import CodeSearch, codebook_size, g_n_random_binning
from .suite import VerifySuite

VERSION = "0.1"
OUTDIR_ENV = "WZEXP_OUTDIR"
LN2 = math.log(2.0)


common = argparse.ArgumentParser(add_help=False)
common.add_argument(
    "-v",
    "--verbose",
    action="store_true",
    help="print progress of the optimizers and searches to stderr",
)
common.add_argument("--seed", type=int, default=0, help="seed for every random choice")
common.add_argument("--jobs", type=int, default=1, help="worker threads for multi-start optimization")
common.add_argument("--bits", action="store_true", help="print rates in bits instead of nats")
common.add_argument(
    "-o",
    "--output",
    help="output file; defaults to $%s/<command>.<ext> or stdout" % OUTDIR_ENV,
)

budget = argparse.ArgumentParser(add_help=False)
budget.add_argument("--starts", type=int, default=16, help="optimizer starts")
budget.add_argument("--iters", type=int, default=2000, help="optimizer iterations per start")

aparser = argparse.ArgumentParser(
    prog="wzexp",
    description="Wyner-Ziv region, correct-decoding exponent and strong-converse tools",
    epilog="""
All quantities are in nats unless --bits is given; rates on the command line
are always read in nats.
""",
)
commands = aparser.add_subparsers(dest="command", metavar="command")
commands.required = True

rd = commands.add_parser("rd-curve", parents=[common, budget], help="hyperplane values and region boundary")
rd.add_argument("-s", "--source", required=True, help="source JSON file")
rd.add_argument("--points", type=int, default=41, help="number of mu grid points")
rd.add_argument("--deltas", type=int, default=21, help="number of boundary samples")

ex = commands.add_parser("exponent", parents=[common, budget], help="estimate F(R, Delta)")
ex.add_argument("-s", "--source", required=True, help="source JSON file")
ex.add_argument("-R", "--rate", type=float, required=True, help="rate in nats")
ex.add_argument("-D", "--delta", type=float, required=True, help="distortion level")
ex.add_argument("--alpha-points", type=int, default=20)
ex.add_argument("--mu-points", type=int, default=21)
ex.add_argument("--lambda-points", type=int, default=25)
ex.add_argument("--refine-rounds", type=int, default=3)
ex.add_argument("--table", action="store_true", help="emit the (alpha, mu, lambda) sweep as CSV")

ka = commands.add_parser("kappa", parents=[common, budget], help="strong-converse deviation kappa_n")
ka.add_argument("--rho", type=float, help="rho(p_XY); estimated from --source when absent")
ka.add_argument("-s", "--source", help="source JSON file for the rho estimate")
ka.add_argument("--eps", type=float, default=0.5, help="error probability bound epsilon")
ka.add_argument("--delta", type=float, default=1.0, help="exponent slack delta")
ka.add_argument("-n", "--n", type=int, required=True, help="blocklength")

sim = commands.add_parser("simulate", parents=[common], help="best correct-decoding exponent at blocklength n")
sim.add_argument("-s", "--source", required=True, help="source JSON file")
sim.add_argument("-n", "--n", type=int, nargs="+", required=True, help="blocklengths")
sim.add_argument("-R", "--rate", type=float, required=True, help="rate in nats")
sim.add_argument("-D", "--delta", type=float, required=True, help="distortion level")
sim.add_argument("--f-hat", type=float, help="exponent estimate to compare P_c against")
mode = sim.add_mutually_exclusive_group()
mode.add_argument("--exhaustive", action="store_true", help="search every encoder (default)")
mode.add_argument("--trials", type=int, help="random binning with this many encoders")
sim.add_argument("--samples", type=int, default=10000, help="Monte-Carlo samples per random encoder")

ver = commands.add_parser("verify", parents=[common], help="run the property suite")
ver.add_argument("-s", "--source", required=True, help="source JSON file")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return "%d" % value
    return "%.12g" % value


class Emitter:
    """Result writer; every stream opens with a provenance record."""

    def __init__(self, args, src: SourceModel = None) -> None:
        self.args = args
        self.source = src.fingerprint() if src is not None else "none"
        self.scale = 1.0 / LN2 if args.bits else 1.0

    def rate(self, value: float) -> float:
        return value * self.scale

    def provenance(self) -> dict:
        return {
            "tool": "wzexp %s" % VERSION,
            "seed": self.args.seed,
            "source": self.source,
            "units": "bits" if self.args.bits else "nats",
        }

    def _open(self, ext: str) -> IO[str]:
        path = self.args.output
        if path is None and os.environ.get(OUTDIR_ENV):
            path = os.path.join(os.environ[OUTDIR_ENV], "%s.%s" % (self.args.command, ext))
        if path is None:
            return sys.stdout
        try:
            return open(path, "w", newline="\n")
        except OSError as e:
            raise WzValidationError("cannot write %s: %s" % (path, e))

    def csv(self, tables: List[tuple]) -> None:
        """tables: (header, rows) pairs written one after another."""
        out = self._open("csv")
        try:
            p = self.provenance()
            out.write("# %s seed=%d source=%s units=%s\n" % (p["tool"], p["seed"], p["source"], p["units"]))
            for header, rows in tables:
                out.write(",".join(header) + "\n")
                for row in rows:
                    out.write(",".join(fmt(v) for v in row) + "\n")
        finally:
            if out is not sys.stdout:
                out.close()

    def json(self, obj: dict) -> None:
        out = self._open("json")
        try:
            obj = dict(obj)
            obj["provenance"] = self.provenance()
            out.write(json.dumps(obj, sort_keys=True) + "\n")
        finally:
            if out is not sys.stdout:
                out.close()


def optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(
        starts=args.starts,
        max_iters=args.iters,
        seed=args.seed,
        jobs=args.jobs,
        debug=args.verbose,
    )


def rd_curve(args) -> int:
    src = load_source(args.source)
    if args.points < 2 or args.deltas < 1:
        raise WzValidationError("need at least 2 mu points and 1 boundary sample")
    curve = hyperplane_curve(src, default_mu_grid(args.points), optimizer_config(args))
    out = Emitter(args, src)
    deltas = np.linspace(0.0, src.d_max, args.deltas)
    boundary = envelope(curve, [float(d) for d in deltas])
    out.csv(
        [
            (("mu", "r_mu"), [(mu, out.rate(r)) for mu, r in curve]),
            (("R", "Delta"), [(out.rate(R), Delta) for R, Delta in boundary]),
        ]
    )
    return 0


def exponent(args) -> int:
    src = load_source(args.source)
    search = ExponentSearch(
        alpha_points=args.alpha_points,
        mu_points=args.mu_points,
        lambda_points=args.lambda_points,
        refine_rounds=args.refine_rounds,
        debug=args.verbose,
    )
    surface = OmegaSurface(src, search, optimizer_config(args))
    out = Emitter(args, src)
    if args.table:
        f = surface.f_table(args.rate, args.delta)
        rows = [row + (float(fv),) for row, fv in zip(surface.rows(), f.reshape(-1))]
        out.csv([(("alpha", "mu", "lambda", "omega", "f"), rows)])
        return 0
    result = exponent_F(src, args.rate, args.delta, surface=surface)
    obj = result.serialize()
    obj["R"] = out.rate(args.rate)
    obj["Delta"] = args.delta
    out.json(obj)
    return 0


def kappa(args) -> int:
    src = None
    estimated = False
    rho = args.rho
    if rho is None:
        if args.source is None:
            raise WzValidationError("kappa needs --rho or --source")
        src = load_source(args.source)
        rho = rho_estimate(src, optimizer_config(args))
        estimated = True
    value = kappa_n(rho, args.eps, args.delta, args.n)
    out = Emitter(args, src)
    out.csv(
        [
            (
                ("n", "rho", "epsilon", "delta", "kappa", "rho_estimated"),
                [(args.n, rho, args.eps, args.delta, value, int(estimated))],
            )
        ]
    )
    return 0


def simulate(args) -> int:
    src = load_source(args.source)
    out = Emitter(args, src)
    search = CodeSearch(src, debug=args.verbose)
    rows = []
    for n in args.n:
        if args.trials is None:
            report = search.exhaustive(n, args.rate, args.delta).report
            m, p_c, g_n = report.m, report.p_c, report.g_n
        else:
            estimate = g_n_random_binning(
                src, n, args.rate, args.delta, args.trials, args.seed, samples=args.samples
            )
            m = min(codebook_size(n, args.rate), src.x_size ** n)
            p_c, g_n = estimate.p_c, estimate.g_n
        margin = None
        if args.f_hat is not None:
            margin = 5.0 * math.exp(-n * args.f_hat) + 1e-9 - p_c
        rows.append((n, m, out.rate(args.rate), args.delta, p_c, g_n, args.f_hat, margin))
    out.csv([(("n", "m", "R", "Delta", "p_c", "g_n", "f_hat", "margin"), rows)])
    return 0


def verify(args) -> int:
    src = load_source(args.source)
    suite = VerifySuite(src, seed=args.seed, jobs=args.jobs, debug=args.verbose)
    results = suite.run()
    out = Emitter(args, src)
    rows = [(c.name, c.margin, "pass" if c.passed else "FAIL") for c in results]
    out.csv([(("check", "margin", "result"), rows)])
    return 0 if all(c.passed for c in results) else 1


handlers = {
    "rd-curve": rd_curve,
    "exponent": exponent,
    "kappa": kappa,
    "simulate": simulate,
    "verify": verify,
}


def run(argv: List[str]) -> int:
    try:
        args = aparser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return handlers[args.command](args)
    except WzValidationError as e:
        print("%s" % e, file=sys.stderr)
        return 2
    except WzGuardError as e:
        print("%s" % e, file=sys.stderr)
        return 3
    except WzRuntimeError as e:
        print("%s" % e, file=sys.stderr)
        return 4
