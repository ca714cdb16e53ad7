"""Command-line entry point: ``aoi-lab`` / ``python3 -m aoi_lab``.

Subcommands::

    analytic   closed-form or semi-numeric peak and average age
    simulate   seeded simulation of one queue
    trace      event log of the first few events, one JSON object per line
    sweep      figure3 | figure4 | figure6 | age-vs-delay | theorems as CSV
    validate   ordering checks plus analytic-vs-simulation checks

Every option can also come from ``--config FILE`` (``key = value`` lines,
``#`` comments, keys spelled like the long option without dashes); an
option given on the command line wins. Exit status is 0 on success, 1 on a
domain error or a failed check, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path as FsPath

import numpy as np

from . import experiments as ex
from .analytic import GGINF_SAMPLES, Discipline, QueueSpec, analyze
from .distributions import parse_distribution
from .errors import AoIError, ConfigError
from .simulator import SimConfig, run, trace, write_trace

SWEEPS = ("figure3", "figure4", "figure6", "age-vs-delay", "theorems")
PLOTTABLE = ("figure3", "figure4", "figure6")

# option defaults live here so that flag > config file > default can be resolved
DEFAULTS = {
    "mu": 1.0, "seed": 0, "replications": 1, "warmup": 0.1, "format": None,
    "engine": "vector", "events": 50, "samples": GGINF_SAMPLES,
    "sim_packets": None, "sim_replications": None, "sim_at": (),
}


# -- argument types ---------------------------------------------------------

def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return v


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= v < 0.5:
        raise argparse.ArgumentTypeError(f"must lie in [0, 0.5), got {text}")
    return v


def _count(text: str) -> int:
    try:
        v = float(text)  # accepts 1e6
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a count: {text!r}") from None
    if not (v >= 1 and v == int(v)):
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return int(v)


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {text}")
    return v


def _literal(text: str) -> str:
    try:
        parse_distribution(text, 1.0)
    except AoIError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text.strip().lower()


def _grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
        return ex.lambda_grid(start, stop, step)
    except (ValueError, ConfigError):
        raise argparse.ArgumentTypeError(
            f"expected START:STOP:STEP with positive values, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(_positive_float(x) for x in text.split(",") if x.strip())
    except argparse.ArgumentTypeError as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}: {exc}") from None


# -- parser -----------------------------------------------------------------

def _spec_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--discipline", choices=[d.value for d in Discipline],
                   help="fcfs, lcfsp (preemptive LCFS) or inf (infinite servers)")
    p.add_argument("--arrival", type=_literal,
                   help="inter-generation law: det, exp, pareto:A, lognorm:S, weibull:K")
    p.add_argument("--service", type=_literal, help="service law, same syntax")
    p.add_argument("--lambda", dest="lam", type=_positive_float, help="generation rate")
    p.add_argument("--mu", type=_positive_float, help="service rate (default 1)")


def _output_options(p: argparse.ArgumentParser, formats: bool = True) -> None:
    p.add_argument("--out", help="output file (default stdout)")
    if formats:
        p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--config", help="key = value file supplying defaults for any option")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoi-lab", description="Age of information for FCFS, preemptive LCFS "
                                   "and infinite-server queues.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("analytic", help="closed-form peak and average age")
    _spec_options(p)
    p.add_argument("--samples", type=_count, help=f"Monte Carlo samples for inf "
                                                  f"(default {GGINF_SAMPLES})")
    p.add_argument("--seed", type=_seed, help="Monte Carlo seed (default 0)")
    _output_options(p)

    for name, helptext in (("simulate", "simulate one queue"),
                           ("trace", "event log of a simulated path")):
        p = sub.add_parser(name, help=helptext)
        _spec_options(p)
        budget = p.add_mutually_exclusive_group()
        budget.add_argument("--horizon", type=_positive_float, help="simulated time")
        budget.add_argument("--packets", type=_count, help="number of generated packets")
        p.add_argument("--seed", type=_seed, help="base seed (default 0)")
        if name == "simulate":
            p.add_argument("--replications", type=_count, help="independent runs (default 1)")
            p.add_argument("--warmup", type=_fraction,
                           help="fraction of the run discarded (default 0.1)")
            p.add_argument("--engine", choices=("vector", "event"),
                           help="departure engine (default vector)")
            _output_options(p)
        else:
            p.add_argument("--events", type=_count, help="records to emit (default 50)")
            _output_options(p, formats=False)

    p = sub.add_parser("sweep", help="figure sweeps and tables as CSV")
    p.add_argument("sweep", choices=SWEEPS)
    p.add_argument("--lambdas", type=_grid,
                   help="START:STOP:STEP (figures: 0.5:0.99:0.01, theorems: 0.1:0.9:0.1)")
    p.add_argument("--lambda", dest="lam", type=_positive_float,
                   help="operating point for age-vs-delay (default 0.5)")
    p.add_argument("--mu", type=_positive_float, help="service rate (default 1)")
    p.add_argument("--samples", type=_count, help="Monte Carlo samples per inf point")
    p.add_argument("--seed", type=_seed, help="base seed (default 0)")
    p.add_argument("--sim-at", type=_float_list,
                   help="comma-separated lambdas that also get a simulation spot-check")
    p.add_argument("--sim-packets", type=_count, help="packets per simulated replication")
    p.add_argument("--sim-replications", type=_count, help="replications per simulated point")
    p.add_argument("--plot", nargs="?", const=True,
                   help="also render a PNG (figure sweeps; default path: --out with .png)")
    _output_options(p)

    p = sub.add_parser("validate", help="run all checks; nonzero exit on any failure")
    p.add_argument("--samples", type=_count, help="Monte Carlo samples per inf point")
    p.add_argument("--seed", type=_seed, help="base seed (default 0)")
    p.add_argument("--sim-packets", type=_count, help="packets per simulated replication")
    p.add_argument("--sim-replications", type=_count, help="replications per simulated point")
    _output_options(p)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # argparse has no public lookup
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def read_config(path: str) -> dict[str, str]:
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw.strip()!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(sub: argparse.ArgumentParser, ns: argparse.Namespace) -> None:
    """Fill options the command line left unset from ``--config``."""
    if not getattr(ns, "config", None):
        return
    actions = {}
    for a in sub._actions:
        for opt in a.option_strings:
            actions[opt.lstrip("-").replace("-", "_")] = a
    cfg = read_config(ns.config)
    budget_from_flags = getattr(ns, "horizon", None) is not None or getattr(ns, "packets", None) is not None
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            sub.error(f"unknown key {key!r} in config file {ns.config}")
        # validated even when a flag overrides it, so a bad file never passes silently
        try:
            converted = action.type(value) if action.type else value
        except argparse.ArgumentTypeError as exc:
            sub.error(f"config key {key}: {exc}")
        if action.choices is not None and converted not in action.choices:
            sub.error(f"config key {key}: {value!r} is not one of {', '.join(action.choices)}")
        if key in ("horizon", "packets") and budget_from_flags:
            continue
        if getattr(ns, action.dest) is None:
            setattr(ns, action.dest, converted)
    if getattr(ns, "horizon", None) is not None and getattr(ns, "packets", None) is not None:
        sub.error("set only one of horizon and packets")


def _finish(sub: argparse.ArgumentParser, ns: argparse.Namespace) -> None:
    for key, value in DEFAULTS.items():
        if hasattr(ns, key) and getattr(ns, key) is None:
            setattr(ns, key, value)
    if ns.command in ("analytic", "simulate", "trace"):
        missing = [flag for flag, dest in (("--discipline", "discipline"),
                                           ("--arrival", "arrival"),
                                           ("--service", "service"), ("--lambda", "lam"))
                   if getattr(ns, dest) is None]
        if missing:
            sub.error("missing required option(s): " + ", ".join(missing))
    if ns.command in ("simulate", "trace") and ns.horizon is None and ns.packets is None:
        sub.error("one of --horizon or --packets is required")
    if ns.command == "sweep" and ns.plot is not None and ns.sweep not in PLOTTABLE:
        sub.error(f"--plot is only available for {', '.join(PLOTTABLE)}")
    if ns.command == "sweep" and ns.plot is True and not ns.out:
        sub.error("--plot without a path needs --out")


# -- output -----------------------------------------------------------------

def _json_value(v):
    if isinstance(v, Discipline):
        return v.value
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _emit(records: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        payload = [{k: _json_value(v) for k, v in r.items()} for r in records]
        text = json.dumps(payload[0] if len(payload) == 1 else payload, indent=2) + "\n"
    else:
        keys = list(records[0])
        lines = [",".join(keys)] + [",".join(ex.format_cell(r[k]) for k in keys)
                                    for r in records]
        text = "\n".join(lines) + "\n"
    _write_text(text, out)


def _write_text(text: str, out) -> None:
    if out:
        FsPath(out).write_text(text)
    else:
        sys.stdout.write(text)


def _spec(ns) -> QueueSpec:
    return QueueSpec(Discipline(ns.discipline), parse_distribution(ns.arrival, ns.lam),
                     parse_distribution(ns.service, ns.mu))


def _spec_record(ns) -> dict:
    return {"discipline": ns.discipline, "arrival": ns.arrival, "service": ns.service,
            "lambda": ns.lam, "mu": ns.mu}


def _sim_config(ns, spec: QueueSpec, **extra) -> SimConfig:
    return SimConfig(spec, horizon=ns.horizon, packet_budget=ns.packets, seed=ns.seed, **extra)


# -- commands ---------------------------------------------------------------

def cmd_analytic(ns) -> int:
    spec = _spec(ns)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(ns.seed)))
    age = analyze(spec, ns.samples, rng)
    _emit([{**_spec_record(ns), **age.as_dict()}], ns.format or "json", ns.out)
    return 0


def cmd_simulate(ns) -> int:
    spec = _spec(ns)
    cfg = _sim_config(ns, spec, warmup_fraction=ns.warmup, replications=ns.replications)
    res = run(cfg, engine=ns.engine)
    _emit([{**_spec_record(ns), **res.as_dict()}], ns.format or "json", ns.out)
    return 0


def cmd_trace(ns) -> int:
    events = trace(_sim_config(ns, _spec(ns)), ns.events)
    if ns.out:
        with open(ns.out, "w") as fh:
            write_trace(events, fh)
    else:
        write_trace(events, sys.stdout)
    return 0


def _sim_kwargs(ns) -> dict:
    kw = {}
    if ns.sim_packets is not None:
        kw["sim_packets"] = ns.sim_packets
    if ns.sim_replications is not None:
        kw["sim_replications"] = ns.sim_replications
    return kw


def cmd_sweep(ns) -> int:
    kw = dict(mu=ns.mu, seed=ns.seed, **_sim_kwargs(ns))
    if ns.sweep in PLOTTABLE:
        fn = {"figure3": ex.figure3, "figure4": ex.figure4, "figure6": ex.figure6}[ns.sweep]
        if ns.sweep == "figure6":
            kw["samples"] = ns.samples
        rows = fn(lambdas=ns.lambdas, sim_at=ns.sim_at, **kw)
    elif ns.sweep == "age-vs-delay":
        rows = ex.age_vs_delay(lam=ns.lam or 0.5, samples=ns.samples, **kw)
    else:
        if ns.lambdas is not None:
            kw["lambdas"] = ns.lambdas
        rows = ex.theorem_suite(samples=ns.samples, **kw)
    _emit_rows(rows, ns)
    if ns.plot is not None:
        from .plotting import plot_sweep
        path = FsPath(ns.out).with_suffix(".png") if ns.plot is True else ns.plot
        plot_sweep(rows, path)
    if ns.sweep == "theorems":
        return _report(rows)
    return 0


def _emit_rows(rows, ns) -> None:
    if (ns.format or "csv") == "csv":
        if ns.out:
            ex.write_csv(rows, ns.out)
        else:
            ex.write_csv(rows, sys.stdout)
    else:
        _emit([ex.row_dict(r) for r in rows], "json", ns.out)


def _report(rows) -> int:
    failed = [r for r in rows if not r.passed]
    print(f"{len(rows)} checks, {len(failed)} failed", file=sys.stderr)
    for r in failed:
        print(f"FAIL {r.theorem} [{r.point}] lhs={r.lhs:.6g} rhs={r.rhs:.6g}", file=sys.stderr)
    return 1 if failed else 0


def cmd_validate(ns) -> int:
    rows = ex.theorem_suite(samples=ns.samples, seed=ns.seed, **_sim_kwargs(ns))
    sim = {}
    if ns.sim_packets is not None:
        sim["packets"] = ns.sim_packets
    if ns.sim_replications is not None:
        sim["replications"] = ns.sim_replications
    rows += ex.simulation_checks(seed=ns.seed, samples=ns.samples, **sim)
    _emit_rows(rows, ns)
    return _report(rows)


COMMANDS = {"analytic": cmd_analytic, "simulate": cmd_simulate, "trace": cmd_trace,
            "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    sub = _subparser(parser, ns.command)
    try:
        _apply_config(sub, ns)
    except ConfigError as exc:
        sub.error(str(exc))
    _finish(sub, ns)
    try:
        return COMMANDS[ns.command](ns)
    except AoIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
