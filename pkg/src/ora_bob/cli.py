"""Batch experiment front end: run, sweep, oracle, audit, gen.

Every output embeds the fully resolved configuration and a content hash of
the instance it ran on; reruns of the same (config, seed) are byte-identical.
Exit codes: 0 success, 1 audit failures present, 2 usage or validation error
(with a machine-readable error JSON on stdout).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import environments, rng, serialization, traceio
from .allocator import run as run_allocator
from .core import Instance, InstanceValidationError, ValidationError
from .dual_ogd import (
    AUDIT_SLACK,
    DRIFT_SLACK,
    OgdConfig,
    dual_drift_audit,
    dual_penalty_audit,
    interval_regret_audit,
    learning_rate,
    sample_comparator_pairs,
)
from .environments import StochasticModel, build_generator, load_instance, save_instance
from .lagrangian import penalties
from .metrics import run_summary
from .oracles import (
    SizeGuardError,
    alpha,
    opt_bruteforce,
    opt_lp_relax,
    opt_stoc_estimate,
    slater_adv,
    slater_stoc,
)
from .serialization import SchemaError
from .simplex import SimplexError

EXIT_OK = 0
EXIT_AUDIT_FAIL = 1
EXIT_USAGE = 2

_AUDIT_SEED_SALT = 0xAD17


class CliError(Exception):
    def __init__(self, message: str, **extra):
        self.extra = extra
        super().__init__(message)


def _parse_int_list(text: str) -> list[int]:
    """Comma lists ("1,2,3") and ranges ("0:30", end exclusive)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = part.split(":", 1)
            out.extend(range(int(lo), int(hi)))
        else:
            out.append(int(part))
    if not out:
        raise CliError(f"empty integer list: {text!r}")
    return out


def _parse_params(pairs) -> dict:
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise CliError(f"--param expects key=value, got {pair!r}")
        params[key.strip()] = value.strip()
    return params


def _resolve_source(args):
    if getattr(args, "instance", None):
        return {"path": str(args.instance)}, load_instance(args.instance)
    if getattr(args, "generator", None):
        params = _parse_params(getattr(args, "param", None))
        return (
            {"generator": args.generator, "params": dict(sorted(params.items()))},
            build_generator(args.generator, params),
        )
    raise CliError("either --instance or --generator is required")


def _load_source(source_desc):
    if "path" in source_desc:
        return load_instance(source_desc["path"])
    return build_generator(source_desc["generator"], source_desc["params"])


def _cell_instance(obj, T: int | None, seed: int) -> tuple[Instance, int]:
    if isinstance(obj, StochasticModel):
        horizon = T if T is not None else obj.budget.horizon
        return environments.sample_instance(obj, horizon, seed), horizon
    if T is not None and T != obj.horizon:
        raise CliError(
            f"--T {T} conflicts with the fixed instance horizon {obj.horizon}"
        )
    return obj, obj.horizon


def execute_cell(
    source_desc: dict,
    T: int | None,
    delta: float,
    eta_override: float | None,
    seed: int,
    benchmark: str,
    out_dir: str,
    name: str,
) -> str:
    """Run one (config, seed) cell and write its trace CSV and summary JSON.

    Returns the summary JSON path.  Pure function of its arguments, so cells
    can run in parallel processes and reruns are byte-identical.
    """
    obj = _load_source(source_desc)
    instance, horizon = _cell_instance(obj, T, seed)
    M = instance.num_constraints
    eta = eta_override if eta_override is not None else learning_rate(horizon, M, delta)
    trajectory = run_allocator(instance, OgdConfig(eta=eta, delta=delta))

    rho = slater_adv(instance) if M else None
    opt_val = None
    alpha_fraction = None
    if benchmark == "lp":
        opt_val = opt_lp_relax(instance).opt_value
    elif benchmark == "bruteforce":
        opt_val = opt_bruteforce(instance).opt_value
    if opt_val is not None and rho is not None and rho > 0.0:
        alpha_fraction = alpha(rho)

    summary = run_summary(
        trajectory,
        instance,
        rho=rho if rho is not None and rho > 0.0 else None,
        opt_stoc=opt_val,
        opt_adv=opt_val,
        alpha_fraction=alpha_fraction,
    )

    resolved = {
        "schema_version": traceio.SCHEMA_VERSION,
        "name": name,
        "source": source_desc,
        "T": horizon,
        "delta": delta,
        "eta": eta,
        "eta_override": eta_override is not None,
        "seed": seed,
        "benchmark": benchmark,
    }
    ihash = serialization.instance_hash(instance)
    header = {
        "schema_version": traceio.SCHEMA_VERSION,
        "T": horizon,
        "K": instance.num_actions,
        "m": instance.num_general,
        "n": instance.num_resources,
        "eta": repr(eta),
        "delta": repr(delta),
        "seed": seed,
        "rng": rng.ALGORITHM,
        "instance_hash": ihash,
        "config": serialization.canonical_json(resolved),
    }
    base = os.path.join(out_dir, f"{name}_{seed}")
    traceio.write_trace_csv(f"{base}.csv", trajectory, header)
    payload = {
        "schema_version": traceio.SCHEMA_VERSION,
        "config": resolved,
        "instance_hash": ihash,
        "rho_adv": rho,
        "benchmark_value": opt_val,
        "summary": summary.to_dict(),
    }
    traceio.write_json_atomic(f"{base}.json", payload)
    return f"{base}.json"


def _execute_cell_task(payload: dict) -> str:
    return execute_cell(**payload)


def _run_cells(payloads: list[dict], jobs: int) -> list[str]:
    if jobs <= 1 or len(payloads) <= 1:
        return [_execute_cell_task(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_execute_cell_task, payloads))


def cmd_run(args) -> int:
    if args.eta is not None and not args.eta > 0.0:
        raise CliError(f"--eta must be > 0, got {args.eta}")
    source_desc, _ = _resolve_source(args)
    seeds = _parse_int_list(args.seeds)
    os.makedirs(args.out, exist_ok=True)
    payloads = [
        dict(
            source_desc=source_desc,
            T=args.T,
            delta=args.delta,
            eta_override=args.eta,
            seed=seed,
            benchmark=args.benchmark,
            out_dir=args.out,
            name=args.name,
        )
        for seed in seeds
    ]
    written = _run_cells(payloads, args.jobs)
    print(json.dumps({"written": written}, indent=1))
    return EXIT_OK


SWEEP_COLUMNS = (
    "T",
    "seed",
    "reward",
    "violation",
    "tau",
    "max_dual_l1",
    "regret",
    "alpha_regret",
    "bound_violation",
    "bound_regret",
    "bound_dual",
    "pass_flags",
)


def _sweep_row(T: int, seed: int, payload: dict) -> dict:
    s = payload["summary"]
    bounds = s["bounds"]

    def bound_value(key):
        return bounds[key]["value"] if key in bounds else None

    flags = []
    if s["budget_feasible"] is not None:
        flags.append(f"budget={'ok' if s['budget_feasible'] else 'FAIL'}")
    for key in ("drift", "dual_norm", "violation", "regret"):
        if key in bounds and bounds[key]["satisfied"] is not None:
            flags.append(f"{key}={'ok' if bounds[key]['satisfied'] else 'FAIL'}")
    return {
        "T": T,
        "seed": seed,
        "reward": s["total_reward"],
        "violation": s["violation"],
        "tau": s["tau"],
        "max_dual_l1": s["max_dual_l1"],
        "regret": s["regret"],
        "alpha_regret": s["alpha_regret"],
        "bound_violation": bound_value("violation"),
        "bound_regret": bound_value("regret"),
        "bound_dual": bound_value("dual_norm"),
        "pass_flags": ";".join(flags),
    }


def _fit_loglog_slope(ts: list[int], means: list[float]) -> float | None:
    if any(not v > 0.0 for v in means):
        return None
    x = np.log(np.asarray(ts, dtype=np.float64))
    y = np.log(np.asarray(means, dtype=np.float64))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def aggregate_sweep(
    out_dir: str,
    name: str,
    t_values: list[int],
    seeds: list[int],
    sweep_config: dict | None = None,
) -> dict:
    """Aggregate per-cell JSONs (read back from disk) into the sweep CSV and
    log-log fits.  Refuses to aggregate while any cell file is missing."""
    rows = []
    cell_hashes = []
    for T in t_values:
        for seed in seeds:
            path = os.path.join(out_dir, f"{name}_T{T}_{seed}.json")
            if not os.path.exists(path):
                raise CliError(f"sweep incomplete: missing cell output {path}", path=path)
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
            rows.append(_sweep_row(T, seed, payload))
            cell_hashes.append(payload["instance_hash"])

    lines = [f"# schema_version={traceio.SCHEMA_VERSION}"]
    if sweep_config is not None:
        lines.append(f"# config={serialization.canonical_json(sweep_config)}")
    lines.append(
        f"# cells_hash={serialization.content_hash(cell_hashes)}"
    )
    lines.append(",".join(SWEEP_COLUMNS))
    for row in rows:
        cells = []
        for col in SWEEP_COLUMNS:
            v = row[col]
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    csv_path = os.path.join(out_dir, f"{name}_sweep.csv")
    tmp = f"{csv_path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, csv_path)

    mean_violation_pos = []
    mean_regret = []
    for T in t_values:
        vs = [max(r["violation"], 0.0) for r in rows if r["T"] == T]
        mean_violation_pos.append(float(np.mean(vs)))
        rg = [r["regret"] for r in rows if r["T"] == T and r["regret"] is not None]
        mean_regret.append(float(np.mean(rg)) if rg else None)
    fit = {
        "T": t_values,
        "mean_violation_positive_part": mean_violation_pos,
        "mean_regret": mean_regret,
        "slope_violation": _fit_loglog_slope(t_values, mean_violation_pos),
        "slope_regret": (
            _fit_loglog_slope(t_values, [v for v in mean_regret])
            if all(v is not None for v in mean_regret)
            else None
        ),
    }
    traceio.write_json_atomic(os.path.join(out_dir, f"{name}_sweep_fit.json"), fit)
    return {"csv": csv_path, "fit": fit, "cells": len(rows)}


def cmd_sweep(args) -> int:
    if args.eta is not None and not args.eta > 0.0:
        raise CliError(f"--eta must be > 0, got {args.eta}")
    source_desc, obj = _resolve_source(args)
    t_values = _parse_int_list(args.T) if args.T else None
    if not t_values:
        raise CliError("sweep requires a nonempty --T list")
    if isinstance(obj, Instance) and any(t != obj.horizon for t in t_values):
        raise CliError("sweeping T requires a stochastic model source")
    seeds = _parse_int_list(args.seeds)
    os.makedirs(args.out, exist_ok=True)
    if not args.aggregate_only:
        payloads = [
            dict(
                source_desc=source_desc,
                T=T,
                delta=args.delta,
                eta_override=args.eta,
                seed=seed,
                benchmark=args.benchmark,
                out_dir=args.out,
                name=f"{args.name}_T{T}",
            )
            for T in t_values
            for seed in seeds
        ]
        _run_cells(payloads, args.jobs)
    sweep_config = {
        "schema_version": traceio.SCHEMA_VERSION,
        "name": args.name,
        "source": source_desc,
        "T": t_values,
        "seeds": seeds,
        "delta": args.delta,
        "eta": args.eta,
        "benchmark": args.benchmark,
    }
    result = aggregate_sweep(args.out, args.name, t_values, seeds, sweep_config)
    print(json.dumps({"sweep": result["csv"], "fit": result["fit"]}, indent=1))
    return EXIT_OK


def cmd_oracle(args) -> int:
    _, obj = _resolve_source(args)
    which = args.which
    reports: dict[str, dict] = {}

    def attempt(key, fn):
        try:
            reports[key] = fn().to_dict()
        except SizeGuardError as exc:
            if which == "all":
                reports[key] = {"skipped": str(exc)}
            else:
                raise

    if isinstance(obj, Instance):
        if which in ("all", "opt_bruteforce"):
            attempt("opt_bruteforce", lambda: opt_bruteforce(obj, args.guard))
        if which in ("all", "opt_lp"):
            reports["opt_lp"] = opt_lp_relax(obj).to_dict()
        if which in ("all", "slater_adv"):
            rho = slater_adv(obj)
            reports["slater_adv"] = {"rho": rho, "alpha": alpha(max(rho, 0.0))}
    else:
        if which in ("all", "slater_stoc"):
            try:
                rho = slater_stoc(obj, args.guard)
                reports["slater_stoc"] = {"rho": rho, "alpha": alpha(max(rho, 0.0))}
            except SizeGuardError as exc:
                if which == "all":
                    reports["slater_stoc"] = {"skipped": str(exc)}
                else:
                    raise
        if which in ("all", "opt_stoc"):
            if args.T is None:
                if which != "all":
                    raise CliError("opt_stoc needs --T")
                reports["opt_stoc"] = {"skipped": "needs --T"}
            else:
                attempt(
                    "opt_stoc",
                    lambda: opt_stoc_estimate(
                        obj, args.T, args.num_samples, args.seed, args.guard
                    ),
                )
    print(json.dumps({"reports": reports}, indent=1))
    return EXIT_OK


def cmd_gen(args) -> int:
    params = _parse_params(args.param)
    obj = build_generator(args.generator, params)
    save_instance(obj, args.out)
    if isinstance(obj, Instance):
        kind, payload = "instance", serialization.instance_to_dict(obj)
    else:
        kind, payload = "model", environments.model_to_dict(obj)
    print(
        json.dumps(
            {"written": str(args.out), "kind": kind,
             "hash": serialization.content_hash(payload)},
            indent=1,
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------


def _exactness_audit(trajectory, columns) -> dict:
    expected = traceio.trace_columns(trajectory)
    mismatches = []
    for name, arr in expected.items():
        rec = columns.get(name)
        if rec is None or rec.shape != arr.shape:
            mismatches.append({"column": name, "round": None, "reason": "missing"})
            continue
        bad = np.nonzero(rec != arr)[0]
        for i in bad[:10]:
            mismatches.append({"column": name, "round": int(i) + 1, "reason": "mismatch"})
    return {"ok": not mismatches, "mismatches": mismatches}


def _deterministic_audits(trajectory, instance) -> dict:
    audits: dict[str, dict] = {}
    tau = trajectory.stopping_time
    eta = trajectory.eta
    m, n = trajectory.num_general, trajectory.num_resources
    M = trajectory.num_constraints

    if n:
        final = trajectory.cumulative_consumption[-1]
        audits["budget_exactness"] = {
            "ok": bool(np.all(final <= instance.budget.limits)),
            "final": final.tolist(),
            "limits": instance.budget.limits.tolist(),
        }
    else:
        audits["budget_exactness"] = {"ok": None, "status": "not_applicable"}

    drift = dual_drift_audit(trajectory)
    audits["dual_drift"] = {
        "ok": bool(drift <= eta * M + DRIFT_SLACK),
        "max_drift": drift,
        "bound": eta * M,
    }

    beta = instance.budget.per_round_budget
    penalty = dual_penalty_audit(trajectory, float(beta.min()) if n else None)
    audits["dual_penalty"] = {
        "ok": penalty.holds,
        "lhs": penalty.lhs,
        "rhs": penalty.rhs,
    }

    if m:
        sums = trajectory.unified_values[:tau, :m].sum(axis=0)
        caps = trajectory.duals[tau, :m] / eta
        audits["telescoped_violation"] = {
            "ok": bool(np.all(sums <= caps + AUDIT_SLACK)),
            "cumulative": sums.tolist(),
            "caps": caps.tolist(),
        }
    else:
        audits["telescoped_violation"] = {"ok": None, "status": "not_applicable"}

    bad_rounds = []
    unified = instance.unified_stack
    rewards = instance.rewards_stack
    for t in range(trajectory.horizon):
        if not trajectory.gate_open[t]:
            continue
        values = rewards[t] - penalties(unified[t], trajectory.duals[t])
        if values[trajectory.candidates[t]] < values.max():
            bad_rounds.append(t + 1)
    audits["dominance"] = {"ok": not bad_rounds, "failing_rounds": bad_rounds[:10]}

    post = slice(tau, trajectory.horizon)
    void = instance.actions.void_index
    post_void = bool(np.all(trajectory.actions[post] == void))
    post_mono = bool(
        np.all(trajectory.duals[tau + 1 :] <= trajectory.duals[tau:-1] + 0.0)
    )
    audits["post_stopping_time"] = {
        "ok": post_void and post_mono,
        "void_only": post_void,
        "duals_nonincreasing": post_mono,
    }
    return audits


def audit_trace(path, instance_override, pairs: int, audit_seed: int | None) -> dict:
    header, columns = traceio.read_trace_csv(path)
    if int(header.get("schema_version", -1)) != traceio.SCHEMA_VERSION:
        raise CliError(
            f"{path}: trace schema_version {header.get('schema_version')!r} "
            f"does not match {traceio.SCHEMA_VERSION}"
        )
    config = json.loads(header["config"])
    seed = int(header["seed"])
    T = int(header["T"])
    eta = float(header["eta"])
    delta = float(header["delta"])

    if instance_override is not None:
        obj = load_instance(instance_override)
    else:
        obj = _load_source(config["source"])
    instance, _ = _cell_instance(obj, T, seed)
    ihash = serialization.instance_hash(instance)
    if ihash != header["instance_hash"]:
        raise CliError(
            f"{path}: instance hash mismatch (trace {header['instance_hash']}, "
            f"resolved {ihash}); refusing to audit"
        )

    trajectory = run_allocator(instance, OgdConfig(eta=eta, delta=delta))
    audits = _deterministic_audits(trajectory, instance)
    exactness = _exactness_audit(trajectory, columns)

    pair_seed = audit_seed if audit_seed is not None else rng.derive_seed(seed, _AUDIT_SEED_SALT)
    records = []
    failures = 0
    for mu, t1, t2 in sample_comparator_pairs(trajectory, pairs, pair_seed):
        res = interval_regret_audit(trajectory, mu, t1, t2)
        records.append(
            {"t1": res.t1, "t2": res.t2, "mu": mu.tolist(),
             "lhs": res.lhs, "rhs": res.rhs, "holds": res.holds}
        )
        failures += 0 if res.holds else 1

    checks = [exactness["ok"]] + [
        a["ok"] for a in audits.values() if a["ok"] is not None
    ]
    ok = all(checks) and failures == 0
    passed = sum(1 for c in checks if c) + (pairs - failures)
    failed = sum(1 for c in checks if not c) + failures
    return {
        "trace": str(path),
        "ok": ok,
        "passed": passed,
        "failed": failed,
        "exactness": exactness,
        "audits": audits,
        "interval_regret": {"pairs": records, "failures": failures},
    }


def cmd_audit(args) -> int:
    results = []
    for path in args.traces:
        results.append(audit_trace(path, args.instance, args.pairs, args.audit_seed))
    payload = {
        "schema_version": traceio.SCHEMA_VERSION,
        "traces": results,
        "ok": all(r["ok"] for r in results),
    }
    text = json.dumps(payload, indent=1)
    if args.out:
        tmp = f"{args.out}.tmp{os.getpid()}"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
        os.replace(tmp, args.out)
        print(json.dumps({"written": str(args.out), "ok": payload["ok"]}, indent=1))
    else:
        print(text)
    return EXIT_OK if payload["ok"] else EXIT_AUDIT_FAIL


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_source_args(p):
    p.add_argument("--instance", help="instance or model JSON file")
    p.add_argument("--generator", help="named generator")
    p.add_argument("--param", action="append", help="generator parameter key=value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ora-bob",
        description="Online resource allocation engine: runs, sweeps, oracles, audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the allocator, one trajectory per seed")
    _add_source_args(p)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=None, help="override the schedule")
    p.add_argument("--seeds", default="0")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="run")
    p.add_argument("--benchmark", choices=("none", "lp", "bruteforce"), default="none")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="cross product of --T and --seeds")
    _add_source_args(p)
    p.add_argument("--T", default=None, help="comma list of horizons")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--seeds", default="0")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="sweep")
    p.add_argument("--benchmark", choices=("none", "lp", "bruteforce"), default="none")
    p.add_argument("--aggregate-only", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="offline oracle reports as JSON")
    _add_source_args(p)
    p.add_argument(
        "--which",
        choices=("all", "opt_bruteforce", "opt_lp", "slater_adv", "slater_stoc", "opt_stoc"),
        default="all",
    )
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--num-samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--guard", type=int, default=10_000_000)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("audit", help="re-run and audit recorded traces")
    p.add_argument("traces", nargs="+")
    p.add_argument("--instance", default=None, help="override instance resolution")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--audit-seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("gen", help="write a generator's instance/model to a file")
    p.add_argument("--generator", required=True)
    p.add_argument("--param", action="append")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (
        CliError,
        ValidationError,
        InstanceValidationError,
        SchemaError,
        SizeGuardError,
        SimplexError,
        OSError,
        ValueError,
    ) as exc:
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, CliError):
            payload["error"].update(exc.extra)
        filename = getattr(exc, "filename", None)
        if filename:
            payload["error"]["path"] = filename
        print(json.dumps(payload, indent=1))
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
