"""Batch experiment runner: ``qumode-gibbs <experiment> [--config FILE] [--out DIR] [--workers N] [key=value...]``.

Each run writes ``<experiment>.csv`` (data, config and timestamp in a ``#``
header) and ``<experiment>.json`` (summary metrics). Exit codes: 0 ok,
2 configuration error, 3 numerical failure, 4 failed equivalence check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import EXPERIMENTS, OUT_ENV, ExperimentConfig, load_config
from .errors import CapacityError, ConfigError, DomainError, NumericalError
from .evolution import circuit_deviation, compile_pauli_p_evolution, pauli_label
from .hilbert import trace_distance
from .models import ModelSpec
from .observables import susceptibility_tqs_curve
from .oracle import crossover_temperature, dense_gibbs, susceptibility_and_crossover
from .tqs import TqsConfig, loglog_slope, run_tqs

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


def run_pool(fn, tasks: list, workers: int) -> list:
    """Evaluate ``fn(*task)`` for every task; results come back in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    results = {}
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = {pool.submit(fn, *t): i for i, t in enumerate(tasks)}
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
    return [results[i] for i in sorted(results)]


def _num(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- single-qubit

def _single_series(model: str, mode: str, beta: float, beta0: float | None, s_grid, n_c, cutoff):
    H = ModelSpec.parse(model).hamiltonian()
    exact, _ = dense_gibbs(H, beta)
    rows = []
    for s in s_grid:
        res = run_tqs(H, TqsConfig(beta, beta0, s, n_c, cutoff=cutoff))
        rows.append((mode, beta, s, trace_distance(res.rho, exact), res.success_probability))
    return rows


def cmd_single_qubit(cfg: ExperimentConfig):
    tasks = []
    for mode, beta0 in (("direct", None), ("adaptive", cfg["adaptive_beta_resource"])):
        for beta in cfg["betas"]:
            tasks.append((cfg["model"], mode, beta, beta0, cfg["s_grid"], cfg["n_c"], cfg["cutoff"]))
    series = run_pool(_single_series, tasks, cfg.workers)
    rows = [r for chunk in series for r in chunk]
    summary = {"series": []}
    by_key = {}
    for chunk in series:
        mode, beta = chunk[0][0], chunk[0][1]
        d = np.array([r[3] for r in chunk])
        p = np.array([r[4] for r in chunk])
        by_key[(mode, beta)] = d
        summary["series"].append(
            {
                "mode": mode,
                "beta": beta,
                "trace_distance_nonincreasing": bool(np.all(np.diff(d) <= 1e-12)),
                "success_decreasing": bool(np.all(np.diff(p) < 0)),
                "trace_distance_at_max_s": float(d[-1]),
            }
        )
    summary["adaptive_not_worse"] = {
        str(beta): bool(np.all(by_key[("adaptive", beta)] <= by_key[("direct", beta)] + 1e-12))
        for beta in cfg["betas"]
    }
    header = ["mode", "beta", "s", "trace_distance", "success_probability"]
    body = [[m, _num(b), _num(s), _num(d), _num(p)] for m, b, s, d, p in rows]
    return header, body, summary, EXIT_OK


# --------------------------------------------------------------- phase-diagram

def _oracle_curve(family: str, L, temps, lambdas, J, delta_h):
    return susceptibility_and_crossover(family, L, temps, lambdas, J, delta_h)


def _interior_minimum(curve) -> bool:
    v = curve.values
    i = int(np.argmin(v))
    if i in (0, v.size - 1):
        return False
    # unique: strictly decreasing before the minimum and increasing after it
    return bool(np.all(np.diff(v[: i + 1]) < 0) and np.all(np.diff(v[i:]) > 0))


def _window_deviation(curve, ref, lo=0.7, hi=1.3) -> float:
    lam = curve.axis
    mask = (lam >= lo - 1e-9) & (lam <= hi + 1e-9) & ~curve.flags & ~ref.flags
    if not np.any(mask):
        return float("nan")
    return float(np.max(np.abs(curve.values[mask] - ref.values[mask]) / ref.values[mask]))


def cmd_phase_diagram(cfg: ExperimentConfig):
    keys = [("ising", L) for L in cfg["ising_L"]] + [("kitaev", L) for L in cfg["kitaev_L"]]
    if cfg["include_limit"]:
        keys.append(("kitaev", None))
    tasks = [(f, L, cfg["temps"], cfg["lambdas"], cfg["J"], cfg["delta_h"]) for f, L in keys]
    curves = run_pool(_oracle_curve, tasks, cfg.workers)
    body = []
    for (family, L), curve in zip(keys, curves):
        for lam, t, flag in zip(curve.axis, curve.values, curve.flags):
            body.append([family, "limit" if L is None else str(L), _num(lam), _num(t), str(int(flag))])
    summary = {"curves": []}
    ref = curves[-1] if cfg["include_limit"] else None
    for (family, L), curve in zip(keys, curves):
        entry = {
            "model": family,
            "L": "limit" if L is None else L,
            "unique_interior_minimum": _interior_minimum(curve),
            "lambda_at_minimum": float(curve.axis[int(np.argmin(curve.values))]),
            "boundary_maxima": int(curve.flags.sum()),
            "max_richardson_gap": curve.metadata["max_richardson_gap"],
        }
        if ref is not None and L is not None:
            entry["max_rel_deviation_from_limit_0.7_1.3"] = _window_deviation(curve, ref)
        summary["curves"].append(entry)
    header = ["model", "L", "lambda", "T_star", "boundary"]
    return header, body, summary, EXIT_OK


# --------------------------------------------------------------- crossover-tqs

def _tqs_point(model: str, lam: float, temps, cfg_kwargs: dict, delta_h: float):
    spec = ModelSpec.parse(model)
    spec = ModelSpec(spec.kind, {**spec.params, "lambda": lam})
    cfg = TqsConfig(beta_target=1.0 / temps[0], **cfg_kwargs)
    chi = susceptibility_tqs_curve(spec, temps, cfg, delta_h)
    t_star, edge = crossover_temperature(temps, chi)
    return t_star, float(np.max(chi)), edge


def _oracle_point(family: str, L: int, lam: float, temps, delta_h: float):
    curve = susceptibility_and_crossover(family, L, temps, [lam], 1.0, delta_h)
    return float(curve.values[0]), float("nan"), bool(curve.flags[0])


def cmd_crossover_tqs(cfg: ExperimentConfig):
    base = ModelSpec.parse(cfg["model"])
    if base.kind == "single":
        raise ConfigError("crossover-tqs needs a chain model")
    temps = np.asarray(cfg["temps"])
    J = base.params["J"]
    if J != 1.0:
        raise ConfigError("crossover-tqs compares against the J=1 oracle; set J=1")
    # (sweep, L, n_c) combinations; the L sweep uses the fixed n_c
    combos = [("n_c", base.params["L"], n) for n in cfg["n_c_sweep"]]
    combos += [("L", L, cfg["n_c"]) for L in cfg["L_sweep"]]
    combos = list(dict.fromkeys(combos))
    tasks, index = [], []
    for sweep, L, n_c in combos:
        model = str(ModelSpec(base.kind, {**base.params, "L": L}))
        kwargs = {
            "beta_resource": cfg["beta_resource"],
            "squeeze_s": cfg["s"],
            "n_c": n_c,
            "cutoff": cfg["cutoff"],
        }
        for lam in cfg["lambdas"]:
            tasks.append((_tqs_point, (model, lam, temps, kwargs, cfg["delta_h"])))
            index.append((sweep, L, lam, "tqs", n_c))
    for L in sorted({L for _, L, _ in combos}):
        for lam in cfg["lambdas"]:
            tasks.append((_oracle_point, (base.kind, L, lam, temps, cfg["delta_h"])))
            index.append(("oracle", L, lam, "oracle", 0))
    results = run_pool(_dispatch, tasks, cfg.workers)

    header = ["sweep", "model", "L", "lambda", "T", "observable", "value", "method", "s", "n_c", "boundary"]
    body = []
    curves: dict = {}
    for (sweep, L, lam, method, n_c), (t_star, chi_peak, edge) in zip(index, results):
        body.append(
            [sweep, base.kind, str(L), _num(lam), _num(t_star), "chi_peak", _num(chi_peak),
             method, _num(cfg["s"]) if method == "tqs" else "", str(n_c) if method == "tqs" else "",
             str(int(edge))]
        )
        curves.setdefault((sweep, L, n_c), []).append((t_star, edge))

    def arr(key):
        return np.array([c[0] for c in curves[key]]), np.array([c[1] for c in curves[key]])

    summary: dict = {"n_c_sweep": [], "L_sweep": {}}
    for sweep, L, n_c in combos:
        if sweep != "n_c":
            continue
        t, e = arr((sweep, L, n_c))
        to, eo = arr(("oracle", L, 0))
        mask = ~(e | eo)
        summary["n_c_sweep"].append(
            {"n_c": n_c, "L": L, "sup_distance_to_oracle": float(np.max(np.abs(t[mask] - to[mask]))) if mask.any() else None}
        )
    dists = [d["sup_distance_to_oracle"] for d in summary["n_c_sweep"]]
    summary["n_c_sweep_nonincreasing"] = bool(
        None not in dists and all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    )
    Ls = [L for sweep, L, _ in combos if sweep == "L"]
    if Ls:
        stack = [arr(("L", L, cfg["n_c"])) for L in Ls]
        t = np.array([s[0] for s in stack])
        mask = ~np.any(np.array([s[1] for s in stack]), axis=0)
        spread = (t[:, mask].max(axis=0) - t[:, mask].min(axis=0)) / t[:, mask].min(axis=0)
        summary["L_sweep"] = {
            "L": Ls,
            "points_compared": int(mask.sum()),
            "max_relative_spread": float(spread.max()) if spread.size else None,
        }
    return header, body, summary, EXIT_OK


def _dispatch(fn, args):
    return fn(*args)


# ----------------------------------------------------------------- free-energy

def _free_energy_row(model: str, sweep: str, s: float, T: float, lam: float, cfg_kwargs: dict):
    spec = ModelSpec.parse(model)
    spec = ModelSpec(spec.kind, {**spec.params, "lambda": lam}) if spec.kind != "single" else spec
    H = spec.hamiltonian()
    shift = H.shift - spec.hamiltonian(shifted=False).shift
    beta = 1.0 / T
    res = run_tqs(H, TqsConfig(beta, squeeze_s=s, **cfg_kwargs))
    _, Z = dense_gibbs(H, beta)
    f_tqs = res.f_estimate - shift
    f_exact = -T * np.log(Z) - shift
    return (sweep, s, T, lam, f_tqs, f_exact, bool(f_tqs >= f_exact - 1e-12 * abs(f_exact)))


def cmd_free_energy(cfg: ExperimentConfig):
    kwargs = {"beta_resource": cfg["beta_resource"], "n_c": cfg["n_c"], "cutoff": cfg["cutoff"]}
    tasks = [
        (cfg["model"], "lambda", cfg["s"], cfg["T_fixed"], lam, kwargs) for lam in cfg["lambdas"]
    ]
    tasks += [
        (cfg["model"], "temperature", s, T, cfg["lambda_fixed"], kwargs)
        for s in cfg["s_grid"]
        for T in cfg["temps"]
    ]
    rows = run_pool(_free_energy_row, tasks, cfg.workers)
    header = ["sweep", "s", "T", "lambda", "F_tqs", "F_exact", "bound_ok"]
    body = [[sw, _num(s), _num(T), _num(lam), _num(a), _num(b), str(int(ok))] for sw, s, T, lam, a, b, ok in rows]
    rel = [abs(a - b) / abs(b) for *_, a, b, _ in rows if b != 0]
    summary = {
        "rows": len(rows),
        "upper_bound_holds_everywhere": all(r[-1] for r in rows),
        "max_relative_deviation": max(rel) if rel else 0.0,
    }
    return header, body, summary, EXIT_OK


# --------------------------------------------------------------- error-scaling

def _error_series(model: str, mode: str, beta: float, beta0, s_grid, n_c, cutoff, offset):
    H = ModelSpec.parse(model).hamiltonian()
    _, z_exact = dense_gibbs(H, beta)
    rows = []
    for s in s_grid:
        cfg = TqsConfig(beta, beta0, s, n_c, cutoff=cutoff, energy_offset=offset)
        z = run_tqs(H, cfg).z_estimate
        signed = (z - z_exact) / z_exact
        rows.append((mode, beta, s, cfg.beta0, z, z_exact, abs(signed), signed))
    return rows


def cmd_error_scaling(cfg: ExperimentConfig):
    tasks = []
    for mode, beta0 in (("direct", None), ("adaptive", cfg["adaptive_beta_resource"])):
        for beta in cfg["betas"]:
            tasks.append(
                (cfg["model"], mode, beta, beta0, cfg["s_grid"], cfg["n_c"], cfg["cutoff"], cfg["energy_offset"])
            )
    series = run_pool(_error_series, tasks, cfg.workers)
    rows = [r for chunk in series for r in chunk]
    err = {(r[0], r[1], r[2]): r[6] for r in rows}
    ss = cfg["s_grid"]
    slopes = []
    for chunk in series:
        mode, beta = chunk[0][0], chunk[0][1]
        slope = loglog_slope(ss, [r[6] for r in chunk]) if len(ss) > 1 else float("nan")
        slopes.append(
            {
                "mode": mode,
                "beta": beta,
                "slope": slope,
                "within_tolerance": bool(abs(slope - cfg["slope_target"]) <= cfg["slope_tol"]),
            }
        )
    summary: dict = {"slopes": slopes}
    betas = cfg["betas"]
    if 1.0 in betas and 2.0 in betas:
        summary["direct_ratio_e2_over_e1"] = {
            repr(s): err[("direct", 2.0, s)] / err[("direct", 1.0, s)] for s in ss
        }
    summary["adaptive_relative_spread"] = {}
    for s in ss:
        e = np.array([err[("adaptive", b, s)] for b in betas])
        summary["adaptive_relative_spread"][repr(s)] = float((e.max() - e.min()) / e.min())
    summary["lower_bound_holds"] = bool(all(r[7] <= 1e-12 for r in rows))
    header = ["mode", "beta", "s", "beta0", "z_estimate", "z_exact", "rel_error", "signed_error"]
    body = [[r[0]] + [_num(x) for x in r[1:]] for r in rows]
    return header, body, summary, EXIT_OK


# -------------------------------------------------------------- check-circuits

def _circuit_models(cfg: ExperimentConfig) -> list[ModelSpec]:
    models = [ModelSpec("kitaev", {"L": L}) for L in cfg["kitaev_L"]]
    models += [ModelSpec("ising", {"L": L}) for L in cfg["ising_L"]]
    if cfg["include_single"]:
        models.append(ModelSpec("single", {}))
    return models


def _check_term(model: str, coeff: float, label: str, n: int, theta: float, cutoff: int):
    term = (coeff, label)
    circ = compile_pauli_p_evolution(term, theta, n)
    dev = circuit_deviation(term, theta, n, cutoff)
    return model, label, circ.count("CNOT"), circ.count("HX"), dev


def cmd_check_circuits(cfg: ExperimentConfig):
    tasks = []
    for spec in _circuit_models(cfg):
        H = spec.hamiltonian(shifted=False)
        for c, p in H.terms:
            tasks.append((str(spec), c, pauli_label(p), H.n_qubits, cfg["theta"], cfg["fock_cutoff"]))
    if not tasks:
        raise ConfigError("no circuits selected")
    rows = run_pool(_check_term, tasks, cfg.workers)
    tol = cfg["tolerance"]
    header = ["model", "term", "cnot_count", "hybrid_x_count", "max_deviation", "pass"]
    body = [[m, t, str(nc), str(nh), _num(d), str(int(d <= tol))] for m, t, nc, nh, d in rows]
    failures = [f"{m} {t}" for m, t, _, _, d in rows if not d <= tol]
    summary = {
        "circuits": len(rows),
        "max_deviation": max(r[4] for r in rows),
        "tolerance": tol,
        "failures": failures,
        "pass": not failures,
    }
    return header, body, summary, EXIT_OK if not failures else EXIT_CHECK


COMMANDS = {
    "single-qubit": cmd_single_qubit,
    "phase-diagram": cmd_phase_diagram,
    "crossover-tqs": cmd_crossover_tqs,
    "free-energy": cmd_free_energy,
    "error-scaling": cmd_error_scaling,
    "check-circuits": cmd_check_circuits,
}
assert tuple(COMMANDS) == EXPERIMENTS


def render_csv(cfg: ExperimentConfig, header: list, body: list, timestamp: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# qumode-gibbs {__version__}\n")
    if timestamp is not None:
        buf.write(f"# generated: {timestamp}\n")
    for line in cfg.header_lines():
        buf.write(f"# config: {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(body)
    return buf.getvalue()


def csv_body(text: str) -> str:
    """Data part of an emitted CSV (everything after the comment header)."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def run_experiment(cfg: ExperimentConfig) -> tuple[int, dict, str, str]:
    """Run, write both files, return ``(exit_code, summary, csv_path, json_path)``."""
    header, body, summary, code = COMMANDS[cfg.experiment](cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    csv_path = os.path.join(cfg.out_dir, f"{cfg.experiment}.csv")
    json_path = os.path.join(cfg.out_dir, f"{cfg.experiment}.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(cfg, header, body, stamp))
    payload = {
        "experiment": cfg.experiment,
        "version": __version__,
        "config": cfg.as_dict(),
        "summary": summary,
        "exit_code": code,
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return code, summary, csv_path, json_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qumode-gibbs",
        description="Thermal-state preparation experiments with a qumode-assisted filter.",
        epilog=f"Default output directory: ${OUT_ENV} or ./results.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", metavar="FILE", help="INI file with [run] and per-experiment sections")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--workers", type=int, metavar="N", help="worker processes (default: available CPUs)")
    parser.add_argument("overrides", nargs="*", metavar="key=value", help="override a config key")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_intermixed_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        cfg = load_config(args.experiment, args.config, args.overrides, args.out, args.workers)
        code, summary, csv_path, json_path = run_experiment(cfg)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, CapacityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    if code == EXIT_CHECK:
        print("check failed: " + ", ".join(summary.get("failures", [])), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
