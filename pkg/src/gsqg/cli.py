"""Command-line entry point: ``gsqg {simulate,certify,ladder,diagnose,decay-fit}``.

Exit codes: 0 success (including a FAIL certificate), 1 invalid input or
usage, 2 numerical failure.  Errors are also written to stderr as one JSON
line.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from . import __version__
from .errors import GsqgError, NumericalError, ParameterError

HALF = "half-threshold"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("UsageError", message, 1)
        raise SystemExit(1)


def _emit_error(kind, message, code, extra=None):
    rec = {"error": kind, "message": message, "exit_code": code}
    if extra:
        rec.update(extra)
    print(json.dumps(rec, sort_keys=True, default=str), file=sys.stderr)


def _threshold_value(text):
    if text == HALF:
        return HALF
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or '{HALF}'") from None


def _common(p):
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--output-dir", help="output directory (default $GSQG_OUTPUT_DIR or .)")
    p.add_argument("--threads", type=int, help="cap on FFT worker threads")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gsqg", description="Dissipative active-scalar solver and MOC certifier.")
    ap.add_argument("--version", action="version", version=f"gsqg {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the pseudo-spectral solver")
    _common(s)
    for flag, typ in (("--alpha", float), ("--beta", float), ("--nu", float),
                      ("--epsilon", float), ("--dt", float), ("--t-end", float),
                      ("--cfl-safety", float), ("--dealias-fraction", float),
                      ("--truncation-modes", float), ("--grad-ceiling", float)):
        s.add_argument(flag, type=typ)
    s.add_argument("--scheme", choices=["rk2", "rk4"])
    s.add_argument("--n", type=int, help="grid points per side (power of two)")
    s.add_argument("--profile", choices=["single_mode", "gaussian_bump", "random_smooth"])
    s.add_argument("--sample-every", type=int)
    s.add_argument("--holder-gamma", type=float)
    s.add_argument("--shells", action="store_true", default=None)
    s.add_argument("--t-fit", type=float, help="fit the L^inf decay envelope on t <= t_fit")
    s.add_argument("--force-cfl", action="store_true", default=None)

    c = sub.add_parser("certify", help="grid-certify a modulus of continuity")
    _common(c)
    c.add_argument("--kind", choices=["subcritical", "eventual"], default=None)
    c.add_argument("--family", default=None)
    c.add_argument("--alpha", type=float)
    c.add_argument("--beta", type=float)
    c.add_argument("--nu", type=float)
    c.add_argument("--epsilon", type=float)
    c.add_argument("--delta", type=_threshold_value)
    c.add_argument("--gamma", type=_threshold_value)
    c.add_argument("--C1", type=_threshold_value)
    c.add_argument("--C2", type=_threshold_value)
    c.add_argument("--c-alpha", type=float)
    c.add_argument("--c-beta", type=float)
    c.add_argument("--c-beta-prime", type=float)
    c.add_argument("--A", type=float)
    c.add_argument("--per-decade", type=int)
    c.add_argument("--seam-per-decade", type=int)

    ld = sub.add_parser("ladder", help="regularity exponent ladder")
    _common(ld)
    ld.add_argument("--alpha", type=float)
    ld.add_argument("--beta", type=float)
    ld.add_argument("--sigma1", type=float)
    ld.add_argument("--p", type=float)

    dg = sub.add_parser("diagnose", help="measure a checkpointed field")
    _common(dg)
    dg.add_argument("checkpoint")
    dg.add_argument("--holder-gamma", type=float, default=0.5)
    dg.add_argument("--besov-s", type=float, default=1.0)
    dg.add_argument("--moc-family")
    dg.add_argument("--moc-param", action="append", default=[], metavar="KEY=VALUE")

    df = sub.add_parser("decay-fit", help="fit the L^inf decay envelope to a series CSV")
    _common(df)
    df.add_argument("series")
    df.add_argument("--beta", type=float, required=True)
    df.add_argument("--t-fit", type=float, required=True)
    return ap


def _drop_none(d):
    return {k: v for k, v in d.items() if v is not None}


def _overrides(args) -> dict:
    o = {}
    if args.seed is not None:
        o["seed"] = args.seed
    if args.threads is not None:
        o["threads"] = args.threads
    if args.output_dir is not None:
        o["output"] = {"dir": args.output_dir}
    cmd = args.command
    if cmd == "simulate":
        o["mode"] = "simulate"
        o["solver"] = _drop_none({
            "alpha": args.alpha, "beta": args.beta, "nu": args.nu, "epsilon": args.epsilon,
            "dt": args.dt, "t_end": args.t_end, "cfl_safety": args.cfl_safety,
            "dealias_fraction": args.dealias_fraction, "truncation_modes": args.truncation_modes,
            "grad_ceiling": args.grad_ceiling, "scheme": args.scheme, "force_cfl": args.force_cfl})
        if args.n is not None:
            o["grid"] = {"n": args.n}
        if args.profile is not None:
            o["initial"] = {"profile": args.profile}
        o["diagnostics"] = _drop_none({"sample_every": args.sample_every,
                                       "holder_gamma": args.holder_gamma,
                                       "shells": args.shells, "t_fit": args.t_fit})
    elif cmd == "certify":
        o["mode"] = "certify-eventual" if args.kind == "eventual" else "certify"
        o["solver"] = _drop_none({"alpha": args.alpha, "beta": args.beta, "nu": args.nu,
                                  "epsilon": args.epsilon})
        o["constants"] = _drop_none({"c_alpha": args.c_alpha, "c_beta": args.c_beta,
                                     "c_beta_prime": args.c_beta_prime, "A": args.A})
        o["certify"] = _drop_none({"kind": args.kind, "delta": args.delta, "gamma": args.gamma,
                                   "C1": args.C1, "C2": args.C2, "per_decade": args.per_decade,
                                   "seam_per_decade": args.seam_per_decade,
                                   "family": args.family})
    elif cmd == "ladder":
        o["mode"] = "ladder"
        o["ladder"] = _drop_none({"alpha": args.alpha, "beta": args.beta,
                                  "sigma1": args.sigma1, "p": args.p})
        o["solver"] = _drop_none({"alpha": args.alpha, "beta": args.beta})
    elif cmd == "diagnose":
        o["mode"] = "diagnose"
    elif cmd == "decay-fit":
        o["mode"] = "decay-fit"
    return o


def _outdir(config) -> str:
    d = config.output.get("dir") or os.environ.get("GSQG_OUTPUT_DIR") or "."
    os.makedirs(d, exist_ok=True)
    return d


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


# ---- commands --------------------------------------------------------------------

def _cmd_simulate(config, outdir, args):
    from .checkpoint import write_checkpoint
    from .diagnostics import write_csv
    from .evolution import run

    res = run(config)
    series = os.path.join(outdir, "series.csv")
    write_csv(series, res.records, config_hash=config.hash, truncated=res.truncated)
    final = os.path.join(outdir, "final.field")
    write_checkpoint(final, res.final_state.theta,
                     meta={"config_hash": config.hash, "t": res.final_state.t,
                           "step": res.final_state.step_count})
    last = res.records[-1] if res.records else None
    summary = {"records": len(res.records), "t_final": res.final_state.t,
               "steps": res.final_state.step_count, "dt": res.dt, "truncated": res.truncated}
    if last is not None:
        summary.update(L2=last.L2, Linf=last.Linf, energy_residual=last.energy_residual)
    summary.update(res.extras)
    print(f"simulate: {len(res.records)} records, t = {res.final_state.t:.6g}"
          + (" (truncated)" if res.truncated else ""))
    return [series, final], summary, res.error


def _certify_subcritical(config, c):
    from . import moc as mocmod
    from .certify import LogGrid, certify_subcritical, subcritical_thresholds

    consts = config.criterion_constants()
    family = c.get("family", config.moc.get("family", "kisel-nv"))
    if family != "kisel-nv":
        raise ParameterError("subcritical certification supports the kisel-nv family")
    delta = c.get("delta", config.moc.get("delta", HALF))
    if delta == HALF:
        delta = 0.5 * subcritical_thresholds(consts)["delta_max"]
    gamma = c.get("gamma", config.moc.get("gamma", HALF))
    if gamma == HALF:
        gamma = 0.5 * subcritical_thresholds(consts, delta)["gamma_max"]
    m = mocmod.kisel_nv(float(delta), float(gamma), consts.beta)
    grid = LogGrid(per_decade=int(c.get("per_decade", 250)),
                   seam_per_decade=int(c.get("seam_per_decade", 400)))
    return certify_subcritical(m, consts, grid)


def _certify_eventual(config, c):
    from .certify import EventualGrid, certify_eventual, eventual_bounds

    consts = config.criterion_constants()
    gamma = c.get("gamma")
    if gamma is None or gamma == HALF:
        raise ParameterError("eventual certification needs a numeric --gamma")
    b = eventual_bounds(consts, float(gamma))
    C1 = c.get("C1", HALF)
    C2 = c.get("C2", HALF)
    C1 = 0.5 * b["C1_max"] if C1 == HALF else float(C1)
    C2 = 0.5 * b["C2_max"] if C2 == HALF else float(C2)
    return certify_eventual(consts, float(gamma), C1, C2,
                            delta=float(c.get("delta", 1.0)) if c.get("delta") != HALF else 1.0,
                            grid=EventualGrid())


def _cmd_certify(config, outdir, args):
    c = config.certify
    if config.mode == "certify-eventual":
        cert = _certify_eventual(config, c)
    else:
        cert = _certify_subcritical(config, c)
    d = cert.to_dict()
    d["config_hash"] = config.hash
    path = os.path.join(outdir, "certificate.json")
    _write_json(path, d)
    artifacts = [path]
    t = cert.table
    if "margin" in t:
        import numpy as np
        cpath = os.path.join(outdir, "margins.csv")
        cols = np.column_stack([t["xi"], t["drift"], t["dissipation"], t["margin"], t["error"]])
        np.savetxt(cpath, cols, delimiter=",", fmt="%.17g", comments="",
                   header=f"# schema_version=1\n# config_hash={config.hash}\n"
                          "xi,drift_term,dissipation_term,margin,quadrature_error")
        artifacts.append(cpath)
    w = cert.witness
    print(f"certify ({cert.kind}): {cert.verdict}  worst margin {cert.worst_margin:.6g}")
    if not cert.passed:
        print(f"  witness: {json.dumps(w, sort_keys=True, default=str)}")
    return artifacts, {"verdict": cert.verdict, "worst_margin": cert.worst_margin}, None


def _cmd_ladder(config, outdir, args):
    from .certify import regularity_ladder

    ld = config.ladder
    missing = [k for k in ("alpha", "beta", "sigma1", "p") if k not in ld]
    if missing:
        raise ParameterError(f"ladder needs {', '.join('--' + k for k in missing)}")
    res = regularity_ladder(float(ld["alpha"]), float(ld["beta"]), float(ld["sigma1"]),
                            float(ld["p"]))
    d = res.to_dict()
    d["config_hash"] = config.hash
    path = os.path.join(outdir, "ladder.json")
    _write_json(path, d)
    if res.stalled:
        print(f"ladder stalled: increment {res.increment:.6g} <= 0; need p > {res.min_p:.12g}")
    else:
        print(f"N0={res.N0}")
        for i, s in enumerate(res.sigma, start=1):
            print(f"sigma_{i}={s:.12g}")
    return [path], {"N0": res.N0, "stalled": res.stalled, "min_p": res.min_p}, None


def _parse_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def _cmd_diagnose(config, outdir, args):
    from . import moc as mocmod
    from .checkpoint import read_checkpoint
    from .diagnostics import besov_seminorm, holder_detail
    from .spectral import grad_linf

    field, header = read_checkpoint(args.checkpoint)
    hd = holder_detail(field, args.holder_gamma, seed=config.seed)
    bs = besov_seminorm(field, args.besov_s)
    out = {"schema_version": 1, "config_hash": config.hash, "checkpoint": header,
           "L2": field.l2_norm(), "Linf": field.linf(), "grad_Linf": grad_linf(field),
           "mean": field.mean(),
           "holder": {"gamma": args.holder_gamma, "value": hd.value, "witness": hd.witness,
                      "plan": hd.plan, "n_pairs": hd.n_pairs},
           "besov": {"s": args.besov_s, "shell_sum": bs.shell_sum, "direct": bs.direct}}
    desc = dict(config.moc)
    if args.moc_family:
        desc = {"family": args.moc_family}
        for kv in args.moc_param:
            if "=" not in kv:
                raise ParameterError(f"--moc-param expects KEY=VALUE, got {kv!r}")
            k, v = kv.split("=", 1)
            desc[k] = _parse_value(v)
    if desc:
        rep = mocmod.obeys(field, mocmod.from_description(desc), seed=config.seed)
        out["obedience"] = {"modulus": desc, "ratio": rep.ratio, "obeys": rep.obeys,
                            "witness": rep.witness, "n_pairs": rep.n_pairs}
    path = os.path.join(outdir, "diagnose.json")
    _write_json(path, out)
    print(f"diagnose: L2={out['L2']:.6g} Linf={out['Linf']:.6g} "
          f"holder({args.holder_gamma})={hd.value:.6g}")
    return [path], {"holder": hd.value}, None


def _cmd_decay_fit(config, outdir, args):
    from .certify import decay_bound, fit_decay_constant
    from .diagnostics import read_csv

    rows = read_csv(args.series)
    if len(rows) < 2:
        raise ParameterError("series needs at least two rows")
    t = [r["t"] for r in rows]
    li = [r["Linf"] for r in rows]
    r0 = rows[0]
    early = [i for i, x in enumerate(t) if x <= args.t_fit]
    C = fit_decay_constant([t[i] for i in early], [li[i] for i in early],
                           r0["Linf"], r0["L2"], args.beta)
    C = max(C, 0.0)
    env = decay_bound(r0["Linf"], r0["L2"], args.beta, C, t)
    ratios = [float(a / b) for a, b in zip(li, env)]
    late = [r for x, r in zip(t, ratios) if x > args.t_fit]
    out = {"schema_version": 1, "config_hash": config.hash, "C": C, "t_fit": args.t_fit,
           "beta": args.beta, "max_ratio_after_fit": max(late) if late else None,
           "ratios": ratios}
    path = os.path.join(outdir, "decay_fit.json")
    _write_json(path, out)
    print(f"decay-fit: C={C:.6g}")
    return [path], {"C": C}, None


COMMANDS = {"simulate": _cmd_simulate, "certify": _cmd_certify, "ladder": _cmd_ladder,
            "diagnose": _cmd_diagnose, "decay-fit": _cmd_decay_fit}


def main(argv=None) -> int:
    from .config import RunConfig, validate
    from .spectral import set_workers

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        _emit_error("UsageError", "a subcommand is required", 1)
        return 1
    started = time.time()
    try:
        config = RunConfig.build(args.config, _overrides(args))
        verdict = validate(config)
        if "violations" in verdict and args.command not in ("diagnose", "decay-fit"):
            raise ParameterError("; ".join(verdict["violations"]))
        set_workers(config.threads)
        outdir = _outdir(config)
        artifacts, summary, err = COMMANDS[args.command](config, outdir, args)
        manifest = {"schema_version": 1, "tool": "gsqg", "version": __version__,
                    "command": args.command, "config_hash": config.hash,
                    "config": config.canonical(), "validation": verdict,
                    "start_time": started, "end_time": time.time(),
                    "artifacts": [os.path.basename(a) for a in artifacts],
                    "summary": summary}
        if err is not None:
            manifest["error"] = {"type": type(err).__name__, "message": str(err)}
        mpath = os.path.join(outdir, "manifest.json")
        with open(mpath, "w") as fh:
            fh.write(json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
        if err is not None:
            raise err
        return 0
    except ParameterError as exc:
        _emit_error(type(exc).__name__, str(exc), 1)
        return 1
    except NumericalError as exc:
        extra = {k: getattr(exc, k) for k in ("step", "diagnostic") if hasattr(exc, k)}
        _emit_error(type(exc).__name__, str(exc), 2, extra)
        return 2
    except GsqgError as exc:
        _emit_error(type(exc).__name__, str(exc), 2)
        return 2
    except OSError as exc:
        _emit_error("OSError", str(exc), 1)
        return 1


if __name__ == "__main__":
    sys.exit(main())
