"""Command-line front end.

Subcommands: ``gen-data``, ``run``, ``predict``, ``sweep``, ``walk`` and
``compare``.  Every option can also come from an INI-style config file
(``--config``) with ``key = value`` lines under any section headers; flags
given on the command line win.  Relative output paths are resolved against
``$RRSGD_OUTPUT_DIR`` when it is set.

Exit codes: 0 success, 2 validation error, 3 divergence or numerical
failure, 4 I/O error.
"""
import argparse
import configparser
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io, theory
from .analysis import MsdCurve, WindowSpec, slope_fit, steady_state_msd
from .engine import DivergenceError, RunConfig, StepSizeRule, run_trials
from .model import (LogisticModel, NonConvergenceError, QuadraticModel, noise_stats,
                    solve_minimizer, synth_logistic_dataset, synth_quadratic_dataset)
from .sampling import KINDS
from .walk import EXHAUSTIVE_MAX_N, WalkSet, f_bruteforce, f_coefficient, f_formula

OUTPUT_DIR_ENV = "RRSGD_OUTPUT_DIR"

EXIT_OK, EXIT_VALIDATION, EXIT_DIVERGENCE, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def default_epochs(N):
    """Desk-scale default run length."""
    return 1000 if N <= 100 else 200


# ---------------------------------------------------------------- helpers

def _float_list(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _int_list(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _out_path(path):
    if path is None or path == "-":
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit_json(obj, path):
    p = _out_path(path)
    io.write_json(obj, p if p is not None else sys.stdout)


def build_model(opts):
    """Dataset and loss model from ``--data`` or the synthetic recipe."""
    if opts.data:
        data = io.read_dataset_csv(opts.data)
        if opts.kind and opts.kind != data.kind:
            raise ConfigError(f"--kind {opts.kind} but {opts.data} holds {data.kind} data")
    elif opts.kind in (None, "logistic"):
        data = synth_logistic_dataset(opts.n, opts.m, opts.data_seed)
    else:
        data = synth_quadratic_dataset(opts.n, opts.m, opts.data_seed)
    if data.kind == "logistic":
        return LogisticModel(data, opts.rho)
    return QuadraticModel(np.eye(data.dim), data)


def _window(opts):
    if opts.window_epochs is not None:
        return WindowSpec(epochs=opts.window_epochs)
    return WindowSpec(fraction=opts.window_fraction, minimum=opts.window_min)


def _w0(opts, model, w_star):
    if opts.w0 == "star":
        return w_star.copy()
    return np.zeros(model.dim)


def _step(opts):
    if opts.decay_c is not None:
        return StepSizeRule.decaying(opts.decay_c)
    if opts.mu is None:
        raise ConfigError("need --mu or --decay-c")
    return StepSizeRule.constant(opts.mu, strict=opts.strict)


def _auto_epochs(model, st, mu, d0, window):
    """Epochs long enough to shed the start-up transient and fill the window.

    Burn-in lasts until the distance from the start has decayed well below
    the predicted steady-state level under the slowest mode; the window then
    covers at least ten correlation times.
    """
    N = model.n_samples
    lam = max(st.nu_local, 1e-12)
    rate = mu * lam * N  # per-epoch log-decay of the slowest mode's amplitude
    target = max(0.5 * mu * st.K / lam * 1e-3, 1e-300)
    burn = math.ceil(math.log(max(d0 / target, 1.0)) / (2.0 * rate)) if d0 > 0 else 0
    frac = window.fraction if window.epochs is None else 0.0
    span = max(window.minimum if window.epochs is None else window.epochs,
               math.ceil(10.0 / rate))
    need = burn + span if frac == 0.0 else max(math.ceil(burn / (1.0 - frac)),
                                                 math.ceil(span / frac))
    return max(default_epochs(N), need)


def _simulate(opts, model, w_star, sampler, step, epochs):
    cfg = RunConfig(model=model, sampler=sampler, step=step, epochs=epochs, w_star=w_star,
                    granularity=opts.granularity, w0=_w0(opts, model, w_star))
    ens = run_trials(cfg, opts.trials, base_seed=opts.seed, workers=opts.workers)
    return MsdCurve.from_ensemble(ens)


def _run_epochs(opts, model, st, mu, w_star):
    if opts.epochs is not None:
        return opts.epochs
    if mu is None:
        return default_epochs(model.n_samples)
    d0 = float(np.sum((_w0(opts, model, w_star) - w_star) ** 2))
    return _auto_epochs(model, st, mu, d0, _window(opts))


def _inputs(model, w_star, mu, nu):
    return theory.TheoryInputs.from_model(model, w_star, mu, nu=nu)


def _predictions(inputs):
    """``(msd_rr_lt, msd_uniform)`` or NaNs when a precondition fails."""
    try:
        return theory.msd_rr_longterm(inputs), theory.msd_uniform(inputs)
    except ValueError:
        return float("nan"), float("nan")


# ---------------------------------------------------------------- commands

def cmd_gen_data(opts):
    if opts.n < 2:
        raise ConfigError(f"--n must be >= 2, got {opts.n}")
    if opts.kind == "logistic":
        data = synth_logistic_dataset(opts.n, opts.m, opts.seed)
    else:
        data = synth_quadratic_dataset(opts.n, opts.m, opts.seed)
    p = _out_path(opts.out)
    io.write_dataset_csv(data, p if p is not None else sys.stdout)
    summary = {"kind": data.kind, "N": data.n_samples, "M": data.dim}
    if data.kind == "logistic":
        summary["positive"] = int(np.sum(data.labels > 0))
        summary["negative"] = int(np.sum(data.labels < 0))
    print(" ".join(f"{k}={v}" for k, v in summary.items()), file=sys.stderr)
    return EXIT_OK


def _solve(model):
    return solve_minimizer(model).w_star


def cmd_run(opts):
    model = build_model(opts)
    w_star = _solve(model)
    st = noise_stats(model, w_star)
    step = _step(opts)
    step.check(model)
    epochs = _run_epochs(opts, model, st, opts.mu if opts.decay_c is None else None, w_star)
    window = _window(opts)
    curve = _simulate(opts, model, w_star, opts.sampler, step, epochs)
    p = _out_path(opts.out)
    io.write_summary_csv(curve, p if p is not None else sys.stdout)
    msd, se = steady_state_msd(curve, window)
    summary = {
        "sampler": opts.sampler, "N": model.n_samples, "M": model.dim, "kind": model.kind,
        "step": {"kind": step.kind, "mu": step.mu, "c": step.c},
        "epochs": epochs, "trials": opts.trials, "seed": opts.seed,
        "window": window.describe(), "steady_msd": msd, "steady_stderr": se,
        "steady_msd_db": 10.0 * math.log10(msd) if msd > 0 else float("-inf"),
    }
    if opts.summary:
        _emit_json(summary, opts.summary)
    elif p is not None:
        _emit_json(summary, None)
    return EXIT_OK


def cmd_predict(opts):
    model = build_model(opts)
    w_star = _solve(model)
    inputs = _inputs(model, w_star, opts.mu, opts.nu)
    out = theory.predict(inputs).as_dict()
    out.update({"mu": opts.mu, "N": model.n_samples, "M": model.dim, "kind": model.kind,
                "nu": inputs.nu, "delta": inputs.delta, "K": inputs.K})
    if model.kind == "quadratic":
        # A = I, so Tr(A^T R_x A) is the target-noise power K
        out["quadratic_closed_form"] = theory.quadratic_closed_form(
            opts.mu, model.n_samples, inputs.K)
    if opts.n_sweep:
        table = []
        for n in opts.n_sweep:
            sub = inputs.with_(N=int(n))
            lt, us = theory.msd_rr_longterm(sub), theory.msd_uniform(sub)
            table.append({"N": int(n), "msd_rr_lt": lt, "msd_uniform": us, "ratio": lt / us})
        out["n_sweep"] = table
    _emit_json(out, opts.out)
    return EXIT_OK


def cmd_sweep(opts):
    if len(set(opts.mus)) < 3:
        raise ConfigError("sweep needs at least 3 distinct step sizes")
    model = build_model(opts)
    w_star = _solve(model)
    st = noise_stats(model, w_star)
    window = _window(opts)
    rows, points, flagged = [], [], []
    for mu in opts.mus:
        step = StepSizeRule.constant(mu)
        if opts.strict and mu > step.stability_limit(model):
            flagged.append({"mu": mu, "reason": f"exceeds stability limit {step.stability_limit(model):.3e}"})
            continue
        epochs = _run_epochs(opts, model, st, mu, w_star)
        curve = _simulate(opts, model, w_star, opts.sampler, step, epochs)
        msd, se = steady_state_msd(curve, window)
        lt, us = _predictions(_inputs(model, w_star, mu, opts.nu))
        db = 10.0 * math.log10(msd) if msd > 0 else float("-inf")
        se_db = 10.0 / math.log(10.0) * se / msd if msd > 0 else float("nan")
        rows.append({"mu": mu, "msd": msd, "msd_db": db, "stderr_db": se_db,
                     "predicted_rr": lt, "predicted_us": us})
        points.append((mu, msd))
    p = _out_path(opts.out)
    io.write_sweep_csv(rows, p if p is not None else sys.stdout)
    fit = {"sampler": opts.sampler, "window": window.describe(), "flagged": flagged}
    if len(set(m for m, _ in points)) >= 3:
        fit.update(slope_fit(points).as_dict())
    else:
        fit["error"] = "fewer than 3 valid step sizes; no fit"
    if opts.fit:
        _emit_json(fit, opts.fit)
    elif p is not None:
        _emit_json(fit, None)
    return EXIT_OK


def cmd_walk(opts):
    N = opts.n
    if N < 2:
        raise ConfigError(f"--n must be >= 2, got {N}")
    if opts.verify and N > EXHAUSTIVE_MAX_N:
        raise ConfigError(f"--verify enumerates all orders and needs N <= {EXHAUSTIVE_MAX_N}")
    betas = opts.beta
    ns, vals, bcol, brute = [], [], [], []
    X = None
    if opts.verify:
        x = np.random.default_rng(opts.seed).standard_normal((N, 1))
        x -= x.mean()
        X = WalkSet(x / np.sqrt(np.mean(x ** 2)))  # Var(X) = 1
    worst = 0.0
    for b in betas:
        for n in range(1, N + 1):
            ns.append(n)
            bcol.append(b)
            if X is None:
                vals.append(f_coefficient(n, N, b))
            else:
                v, ref = f_formula(n, X, b), f_bruteforce(n, X, b)
                vals.append(v)
                brute.append(ref)
                worst = max(worst, abs(v - ref))
    p = _out_path(opts.out)
    io.write_profile_csv(p if p is not None else sys.stdout, ns, vals,
                         beta=bcol if len(betas) > 1 else None,
                         bruteforce=brute if X is not None else None)
    if X is not None:
        print(f"max |formula - bruteforce| = {worst:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(opts):
    model = build_model(opts)
    w_star = _solve(model)
    st = noise_stats(model, w_star)
    step = StepSizeRule.constant(opts.mu, strict=opts.strict)
    step.check(model)
    epochs = _run_epochs(opts, model, st, opts.mu, w_star)
    window = _window(opts)
    curve = _simulate(opts, model, w_star, "reshuffle", step, epochs)
    p = _out_path(opts.out)
    io.write_summary_csv(curve, p if p is not None else sys.stdout)
    msd, se = steady_state_msd(curve, window)
    pred = theory.predict(_inputs(model, w_star, opts.mu, opts.nu), per_iter=False).as_dict()
    pred.pop("per_iter_bound")
    lt = pred["msd_rr_lt"]
    report = {"simulated": msd, "simulated_stderr": se, "epochs": epochs, "trials": opts.trials,
              "window": window.describe(), "prediction": pred,
              "gap_db": 10.0 * math.log10(msd / lt) if msd > 0 and lt > 0 else float("nan")}
    _emit_json(report, opts.report)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--kind", choices=("logistic", "quadratic"), default=None,
                   help="default: logistic, or whatever --data holds")
    g.add_argument("--n", type=int, default=25, help="number of samples N")
    g.add_argument("--m", type=int, default=10, help="dimension M")
    g.add_argument("--rho", type=float, default=0.1)
    g.add_argument("--data-seed", type=int, default=0)
    g.add_argument("--data", help="dataset CSV written by gen-data")


def _sim_args(p, sampler=True):
    g = p.add_argument_group("simulation")
    if sampler:
        g.add_argument("--sampler", choices=KINDS, default="reshuffle")
    g.add_argument("--epochs", type=_positive_int, default=None,
                   help="default: long enough for burn-in plus the window")
    g.add_argument("--trials", type=_positive_int, default=100)
    g.add_argument("--seed", type=int, default=0, help="base seed for trial streams")
    g.add_argument("--workers", type=_positive_int, default=1)
    g.add_argument("--granularity", choices=("epoch", "iterate"), default="epoch")
    g.add_argument("--w0", choices=("zero", "star"), default="zero")
    g.add_argument("--strict", action="store_true", help="enforce mu <= nu/(3 delta^2 N)")
    g.add_argument("--window-fraction", type=float, default=0.25)
    g.add_argument("--window-min", type=int, default=50)
    g.add_argument("--window-epochs", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="rrsgd", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="INI file of key = value defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic dataset CSV")
    p.add_argument("--kind", choices=("logistic", "quadratic"), default="logistic")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--rho", type=float, default=0.1, help="recorded only; labels ignore it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("run", help="simulate an ensemble and summarize its MSD")
    _model_args(p)
    _sim_args(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--decay-c", type=float, help="use mu(i) = c / (i + 1)")
    p.add_argument("--out", help="per-(epoch, position) MSD CSV")
    p.add_argument("--summary", help="steady-state summary JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("predict", help="evaluate the closed-form predictors")
    _model_args(p)
    p.add_argument("--mu", type=float, required=False, default=1e-3)
    p.add_argument("--nu", choices=("global", "local"), default="global")
    p.add_argument("--n-sweep", type=_int_list, help="comma-separated N values")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="step-size sweep with slope fit")
    _model_args(p)
    _sim_args(p)
    p.add_argument("--mus", type=_float_list, default=[3e-4, 1e-3, 3e-3, 1e-2])
    p.add_argument("--nu", choices=("global", "local"), default="global")
    p.add_argument("--out", help="sweep CSV")
    p.add_argument("--fit", help="slope-fit JSON")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("walk", help="without-replacement partial-sum profile")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--beta", type=_float_list, default=[1.0])
    p.add_argument("--verify", action="store_true", help="add an exhaustive column (N <= 8)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("compare", help="simulated RR MSD against the predictors")
    _model_args(p)
    _sim_args(p, sampler=False)
    p.add_argument("--mu", type=float, default=1e-3)
    p.add_argument("--nu", choices=("global", "local"), default="global")
    p.add_argument("--out", help="per-(epoch, position) MSD CSV")
    p.add_argument("--report", help="comparison JSON")
    p.set_defaults(func=cmd_compare)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser, opts, argv):
    """Fill options not given on the command line from ``--config``."""
    if not opts.config:
        return opts
    cp = configparser.ConfigParser()
    try:
        with open(opts.config) as fh:
            cp.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(f"bad config file: {e}") from e
    values = {}
    for section in cp.sections():
        for key, val in cp.items(section):
            values[key.replace("-", "_")] = val
    sp = _subparser(parser, opts.command)
    given = {a.split("=")[0] for a in argv if a.startswith("--")}
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help",)}
    for key, raw in values.items():
        if key not in actions:
            raise ConfigError(f"unknown config key {key!r} for {opts.command}")
        act = actions[key]
        if any(s in given for s in act.option_strings):
            continue
        if isinstance(act, argparse._StoreTrueAction):
            val = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            val = act.type(raw) if act.type else raw
            if act.choices is not None and val not in act.choices:
                raise ConfigError(f"config {key}={raw!r} not in {list(act.choices)}")
        setattr(opts, key, val)
    return opts


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        opts = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        _apply_config(parser, opts, argv)
        return opts.func(opts)
    except DivergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except NonConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
