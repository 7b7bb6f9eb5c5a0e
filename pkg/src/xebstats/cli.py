"""Command-line interface: ``xebstats {gen,sample,estimate,mc,gof,predict,ci}``.

Exit codes: 0 success, 2 usage, 3 data/domain/I-O error, 4 convergence failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

import numpy as np

from . import gof as gof_mod
from . import io as xio
from . import prediction as pred
from . import uncertainty as unc
from .errors import ConvergenceError, MissingInputError, XebStatsError
from .estimators import Method
from .experiment import ALL_METHODS, ExperimentConfig, default_workers, expand_methods, run_estimators, run_mc
from .noise import (
    Basic,
    GeneralP,
    ReadoutAsymmetric,
    ReadoutSymmetric,
    draw_sample,
    draw_sample_with_rejection,
    readout_noise_vector,
    sampling_probs,
)
from .probmodel import SeedSpec, gen_porter_thomas, moments

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4


class UsageError(Exception):
    pass


def _emit(args, text: str):
    if args.out:
        xio.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _floats(s: str) -> List[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from exc


def _model_from_args(args):
    if args.q is not None and (args.q1 is not None or args.q2 is not None):
        raise UsageError("--q conflicts with --q1/--q2")
    if (args.q1 is None) != (args.q2 is None):
        raise UsageError("--q1 and --q2 must be given together")
    if getattr(args, "phis", None) is not None:
        if args.q is not None or args.q1 is not None or args.phi is not None:
            raise UsageError("--phis conflicts with --phi/--q/--q1/--q2")
        return "general"
    if args.q1 is not None:
        phi_g = args.phi_g if args.phi_g is not None else args.phi
        if phi_g is None:
            raise UsageError("the asymmetric readout model needs --phi-g")
        return ReadoutAsymmetric(phi_g, args.q1, args.q2)
    if args.phi is None:
        raise UsageError("--phi is required")
    if args.q is not None:
        return ReadoutSymmetric(args.phi, args.phi_ro or 0.0, args.q)
    if args.phi_ro:
        raise UsageError("--phi-ro needs --q")
    return Basic(args.phi)


def _add_model_flags(p):
    p.add_argument("--phi", type=float, help="fidelity (probability of an error-free run)")
    p.add_argument("--phi-ro", type=float, help="probability of readout-only errors (with --q)")
    p.add_argument("--phi-g", type=float, help="total gate fidelity (asymmetric readout model)")
    p.add_argument("--q", type=float, help="symmetric per-qubit readout flip probability")
    p.add_argument("--q1", type=float, help="P(1 read as 0)")
    p.add_argument("--q2", type=float, help="P(0 read as 1)")


# ---------------------------------------------------------------------------


def cmd_gen(args):
    if not args.out:
        raise UsageError("gen needs --out")
    pv = gen_porter_thomas(args.n, SeedSpec(args.seed, args.stream))
    if args.text:
        xio.write_prob_text(args.out, pv)
    else:
        xio.write_ptpv(args.out, pv)


def cmd_sample(args):
    if not args.out:
        raise UsageError("sample needs --out")
    model = _model_from_args(args)
    seed = SeedSpec(args.seed, args.stream)
    if model == "general":
        if not args.components or len(args.components) != len(args.phis):
            raise UsageError("--phis needs one --components file per weight")
        comps = tuple(xio.read_probs(f) for f in args.components)
        model = GeneralP(tuple(args.phis), comps)
        pv = comps[0]
    else:
        if not args.probs:
            raise UsageError("sample needs --probs")
        pv = xio.read_probs(args.probs)
    pi = sampling_probs(model, pv)
    v = readout_noise_vector(pv, model.q) if isinstance(model, ReadoutSymmetric) else None
    if args.rejection_file:
        tau = xio.read_tau(args.rejection_file, pv.M)
        sample = draw_sample_with_rejection(pi, tau, args.N, seed, pv, v)
    else:
        sample = draw_sample(pi, pv, v, args.N, seed)
    if args.v_out and v is not None:
        xio.write_ptpv(args.v_out, v)
    xio.write_sample(args.out, sample)


def _estimate_records(args):
    pv = xio.read_probs(args.probs) if args.probs else None
    v = xio.read_probs(args.v) if args.v else None
    sample = xio.read_sample(args.sample, pv, v)
    methods = expand_methods(args.methods.split(","), args.q is not None or v is not None)
    results = run_estimators(methods, sample, pv, args.q, v)
    M, N = sample.M, sample.total
    mom = moments(pv) if pv is not None else None
    records = []
    for name, e in results:
        rec = e.to_record(sample.n, N, args.seed)
        rec["name"] = name
        phi = float(np.clip(np.ravel(e.value)[0], 0.0, 1.0))
        if name in ("U", "V") and mom is not None and M * mom.w2 > 1:
            # plug-in conditional variance with phi = V
            phi_v = next((float(np.clip(x.value, 0, 1)) for nm, x in results if nm == "V"), None)
            if phi_v is None:
                phi_v = float(np.clip(e.value / (M * mom.w2 - 1.0), 0.0, 1.0))
            var = (unc.var_U_conditional if name == "U" else unc.var_V_conditional)(phi_v, M, N, mom.w2, mom.w3)
            rec["variance"] = var
            if name == "V":
                rec["ci"] = unc.ci_conditional_single(e.value, math.sqrt(var)).to_dict()
        elif name == "LogU":
            rec["variance"] = unc.var_unconditional(Method.LogU, phi, M, N)
        elif name == "MLE" and e.variance is not None:
            rec["ci"] = unc.ci_conditional_single(e.value, math.sqrt(e.variance)).to_dict()
        records.append(rec)
    return records


def cmd_estimate(args):
    records = _estimate_records(args)
    if args.format == "csv":
        lines = ["name,method,component,value,variance"]
        for r in records:
            vals = r["value"] if isinstance(r["value"], list) else [r["value"]]
            var = r["variance"] if not isinstance(r["variance"], list) else None
            for k, x in enumerate(vals):
                lines.append(f"{r['name']},{r['method']},{k},{x!r},{'' if var is None else repr(var)}")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, xio.to_json(records))


def cmd_mc(args):
    model = _model_from_args(args)
    if model == "general":
        raise UsageError("mc does not support --phis")
    cfg = ExperimentConfig(
        n=args.n,
        N=args.N,
        model=model,
        estimators=tuple(expand_methods(args.methods.split(","), isinstance(model, ReadoutSymmetric))),
        L=args.L,
        reps=args.reps,
        base_seed=args.seed,
        output=args.out,
        workers=args.workers,
        pv_mode=args.pv_mode,
        allow_large=args.allow_large,
    )
    res = run_mc(cfg)
    if args.format == "csv":
        _emit(args, res.long_csv())
        if args.summary_out:
            xio.atomic_write(args.summary_out, res.summary_csv())
    else:
        _emit(args, xio.to_json(res.to_json_obj()))


def cmd_gof(args):
    pv = xio.read_probs(args.probs)
    sample = xio.read_sample(args.sample, pv)
    if args.fit_phi and args.phi is not None:
        raise UsageError("--phi conflicts with --fit-phi")
    if args.fit_phi:
        phi = gof_mod.min_chisq_phi(sample, pv, sample.total, min_expected=args.min_expected)
        params = 1
    elif args.phi is not None:
        phi, params = args.phi, 0
    else:
        raise UsageError("gof needs --phi or --fit-phi")
    pi = sampling_probs(Basic(phi), pv)
    res = gof_mod.chi_square(sample, pi, sample.total, params, args.min_expected)
    report = {"phi": phi, "fitted": bool(args.fit_phi), **res.to_dict()}
    if args.hist:
        spec = gof_mod.histogram(sample.sampled_w, gof_mod.HistogramSpec(bins=args.bins, scale=args.scale), pv.M, phi)
        xio.atomic_write(args.hist, spec.to_csv())
    if args.scatter:
        pairs = gof_mod.freq_scatter(sample, pi, sample.total)
        xio.atomic_write(args.scatter, gof_mod.scatter_csv(pairs))
    if args.format == "csv":
        keys = list(report)
        _emit(args, ",".join(keys) + "\n" + ",".join(repr(report[k]) for k in keys) + "\n")
    else:
        _emit(args, xio.to_json(report))


def cmd_predict(args):
    if args.table:
        if args.format == "csv":
            lines = ["n," + ",".join(pred.REFERENCE_COLUMNS)]
            lines += [f"{n}," + ",".join(f"{x:.4f}" for x in row) for n, row in pred.REFERENCE_TABLE.items()]
            _emit(args, "\n".join(lines) + "\n")
        else:
            obj = [{"n": n, **dict(zip(pred.REFERENCE_COLUMNS, row))} for n, row in pred.REFERENCE_TABLE.items()]
            _emit(args, xio.to_json(obj))
        return
    counts = (args.n_g1, args.n_g2, args.n_qubits)
    if args.profile is not None:
        if any(c is not None for c in counts):
            raise UsageError("--profile conflicts with --n-g1/--n-g2/--n")
        try:
            with open(args.profile) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed profile JSON in {args.profile}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("profile JSON must be an object with e_g1, e_g2, e_q lists")
        value = pred.fidelity_formula77(pred.CircuitErrorProfile.from_dict(data))
        report = {"fidelity": value, "source": "profile"}
    else:
        n_g1, n_g2, n = (c or 0 for c in counts)
        value = pred.fidelity_simple(n_g1, n_g2, n)
        report = {"fidelity": value, "n_g1": n_g1, "n_g2": n_g2, "n": n}
    if args.phi_observed is not None:
        phi_g, phi_ro = pred.total_gate_fidelity(args.phi_observed, args.n_qubits or 0)
        report.update(phi_g=phi_g, phi_ro=phi_ro)
    if args.format == "csv":
        keys = list(report)
        _emit(args, ",".join(keys) + "\n" + ",".join(str(report[k]) for k in keys) + "\n")
    else:
        _emit(args, xio.to_json(report))


def cmd_ci(args):
    if args.estimates is not None:
        if args.sigmas is None:
            raise UsageError("--estimates needs --sigmas")
        ci = unc.ci_conditional_combined(args.estimates, args.sigmas)
    else:
        if args.mean is None or args.N is None or args.n is None:
            raise UsageError("unconditional intervals need --mean, --N and --n")
        phi = args.mean if args.phi is None else args.phi
        ci = unc.ci_unconditional(args.method, args.mean, phi, args.L, args.N, 1 << args.n)
    out = {**ci.to_dict(), "lower": ci.lower, "upper": ci.upper}
    if args.format == "csv":
        keys = list(out)
        _emit(args, ",".join(keys) + "\n" + ",".join(str(out[k]) for k in keys) + "\n")
    else:
        _emit(args, xio.to_json(out))


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    common.add_argument("--workers", type=int, default=None, help="worker processes (default $XEBSTATS_WORKERS or 1)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="xebstats", description="Fidelity estimation for random circuit sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a Porter-Thomas probability vector")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--text", action="store_true", help="write the text format instead of PTPV")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sample", parents=[common], help="draw a sample under a noise model")
    p.add_argument("--probs")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    _add_model_flags(p)
    p.add_argument("--phis", type=_floats, help="mixture weights, comma separated")
    p.add_argument("--components", nargs="+", help="one probability file per mixture weight")
    p.add_argument("--rejection-file", help="acceptance probabilities, one per line")
    p.add_argument("--v-out", help="also write the readout-noise vector (PTPV)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", parents=[common], help="estimate fidelity from a sample")
    p.add_argument("--probs")
    p.add_argument("--sample", required=True)
    p.add_argument("--v", help="readout-noise vector (PTPV); computed from --q if absent")
    p.add_argument("--q", type=float)
    p.add_argument("--methods", default="all", help=f"comma list from {', '.join(ALL_METHODS)} or all")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo experiment")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--reps", type=int, default=1)
    _add_model_flags(p)
    p.add_argument("--methods", default="U,V,MLE")
    p.add_argument("--pv-mode", choices=("fresh", "fixed"), default="fresh")
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--summary-out", help="summary CSV path (with --format csv)")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("gof", parents=[common], help="chi-square goodness of fit")
    p.add_argument("--probs", required=True)
    p.add_argument("--sample", required=True)
    p.add_argument("--phi", type=float)
    p.add_argument("--fit-phi", action="store_true")
    p.add_argument("--min-expected", type=float, default=5.0)
    p.add_argument("--hist", help="histogram CSV path")
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--scale", choices=("w", "z"), default="w")
    p.add_argument("--scatter", help="expected/observed CSV path")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("predict", parents=[common], help="component-wise fidelity prediction")
    p.add_argument("--profile", help="JSON {e_g1: [...], e_g2: [...], e_q: [...]}")
    p.add_argument("--n-g1", type=int)
    p.add_argument("--n-g2", type=int)
    p.add_argument("--n", dest="n_qubits", type=int)
    p.add_argument("--phi-observed", type=float, help="also report phi_g and phi_ro for this fidelity")
    p.add_argument("--table", action="store_true", help="print the reference fidelity table")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ci", parents=[common], help="95%% confidence intervals")
    p.add_argument("--method", choices=("U", "V", "MLE"), default="V")
    p.add_argument("--mean", type=float, help="average of the L per-file estimates")
    p.add_argument("--phi", type=float, help="plug-in fidelity (default: --mean)")
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--estimates", type=_floats, help="per-file estimates for the weighted interval")
    p.add_argument("--sigmas", type=_floats, help="their standard errors")
    p.set_defaults(func=cmd_ci)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is None:
        try:
            args.workers = default_workers()
        except XebStatsError as exc:
            parser.error(str(exc))
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except MissingInputError as exc:
        print(f"xebstats: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"xebstats: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (XebStatsError, OSError, ValueError) as exc:
        print(f"xebstats: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
