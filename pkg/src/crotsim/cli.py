"""Command-line runner: ``crotsim <command> [--config FILE] [options]``.

Commands
--------
rb               randomized benchmarking (one or two qubits)
irb              interleaved benchmarking of one primitive
sweep-fr         primitive infidelity versus Rabi frequency (J = sqrt(15) f_R)
tomo             state tomography of a prepared state
algo             Deutsch-Jozsa / Grover with stage-by-stage fidelities
coherence        Ramsey, Hahn echo and Rabi simulations with fits
estimate         Bayesian tracking of a synthetic noise trace
clifford-table   build the Clifford decomposition table

Every command writes JSON results, plot-ready CSV files and a
``manifest.json`` to the output directory and exits with 0.  On failure a
machine-readable error object is printed to stderr (and written to
``error.json`` when possible) and the exit code is 2 for configuration errors,
1 otherwise.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .io import ConfigError, ExperimentConfig, parse_config, load_config, write_csv, \
    write_json, write_manifest

log = logging.getLogger("crotsim")

COMMANDS = ("rb", "irb", "sweep-fr", "tomo", "algo", "coherence", "estimate", "clifford-table")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crotsim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"crotsim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration file")
    common.add_argument("--seed", type=int, help="root seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--fr", type=float, help="Rabi frequency f_R in MHz")
    common.add_argument("--j", type=float, help="exchange coupling J in MHz")
    common.add_argument("--k", type=int, help="synchronisation integer k")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rb", parents=[common], help="randomized benchmarking")
    p.add_argument("--qubits", type=int, choices=(1, 2))
    p.add_argument("--mode", choices=("standard", "differenced"), help="RB protocol")
    p = sub.add_parser("irb", parents=[common], help="interleaved benchmarking")
    p.add_argument("--gate", help="interleaved primitive label (default CNOT1)")
    p.add_argument("--mode", choices=("standard", "differenced"), help="RB protocol")
    p = sub.add_parser("sweep-fr", parents=[common], help="infidelity versus f_R")
    p.add_argument("--mode", choices=("dephasing-only", "with-idle", "standard"),
                   help="'with-idle' adds the idle (2 - sqrt(15)/2)/J to each primitive")
    p.add_argument("--grid", help="comma-separated f_R values (MHz)")
    p = sub.add_parser("tomo", parents=[common], help="state tomography")
    p.add_argument("--state", choices=("dd", "bell", "uu", "mixed"))
    p = sub.add_parser("algo", parents=[common], help="Deutsch-Jozsa / Grover")
    p.add_argument("--algorithm", choices=("deutsch-jozsa", "dj", "grover"))
    p.add_argument("--oracle", help="f0..f3 (DJ) or 00..11 (Grover)")
    p.add_argument("--mode", choices=("noiseless", "noisy"), default="noisy")
    p = sub.add_parser("coherence", parents=[common], help="Ramsey / echo / Rabi")
    p.add_argument("--transition", help="e.g. 1d, 1u, 2d, 2u")
    sub.add_parser("estimate", parents=[common], help="Bayesian frequency tracking")
    p = sub.add_parser("clifford-table", parents=[common], help="Clifford decompositions")
    p.add_argument("--qubits", type=int, choices=(1, 2), default=2)
    return ap


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    if args.seed is not None:
        cfg.set("run", "seed", args.seed)
    if args.out is not None:
        cfg.set("run", "out", args.out)
    if args.threads is not None:
        cfg.set("run", "threads", args.threads)
    if args.fr is not None:
        cfg.set("gates", "f_R", str(args.fr))
    if args.j is not None:
        cfg.set("device", "J", args.j)
    if args.k is not None:
        cfg.set("gates", "k", args.k)
    return cfg


def _gateset(cfg: ExperimentConfig, p=None, **kw):
    from .evolution import TrotterConfig
    from .gates import GateSet
    g = cfg["gates"]
    return GateSet(p or cfg.device_params(), f_R=cfg.f_R(), k=g["k"],
                   cfg=TrotterConfig(g["trotter_N"]), mode=g["mode"], **kw)


def _readout(cfg: ExperimentConfig, p, shots: int):
    from .readout import ReadoutModel
    spam = cfg.spam()
    if spam == type(spam)():
        return None
    return ReadoutModel.from_spam(spam, p, shots)


def _rb_config(cfg: ExperimentConfig, qubits: int, protocol: str, interleaved=None):
    from .benchmark import RBConfig, default_lengths
    r = cfg["rb"]
    n_max = r["n_max"] if qubits == 2 or "n_max" in cfg.explicit.get("rb", set()) else None
    lengths = r["lengths"] or default_lengths(qubits, n_max, r["points"])
    p = cfg.device_params()
    repeats = None if r["noise_repeats"] is None else int(r["noise_repeats"])
    return RBConfig(lengths=lengths, num_sequences=r["num_sequences"], shots_per_sequence=r["shots"],
                    protocol=protocol, interleaved=interleaved,
                    noise=cfg.noise_model(), noise_repeats=repeats,
                    readout=_readout(cfg, p, r["shots"]), init_error=cfg["spam"]["init_error"],
                    error_model=r["error_model"], depolarizing=r["depolarizing"],
                    num_qubits=qubits, qubit=r["qubit"], spectator=r["spectator"],
                    single_tone=r["single_tone"], seed=cfg["run"]["seed"],
                    threads=cfg["run"]["threads"])


def _curve_rows(curves):
    return [(int(n), float(m), float(s)) for n, m, s in
            zip(curves.lengths, curves.mean_curve(), curves.stderr_curve())]


def cmd_rb(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .benchmark import fit_decay, mc_uncertainty, run_rb
    qubits = args.qubits or cfg["rb"]["num_qubits"]
    protocol = args.mode or cfg["rb"]["protocol"]
    rb = _rb_config(cfg, qubits, protocol)
    p = cfg.device_params()
    gates = None
    if rb.error_model != "ideal":
        gates = _gateset(cfg, p, single_tone=rb.spectator if rb.single_tone else None)
    curves = run_rb(rb, p=p, gates=gates)
    fit = fit_decay(curves)
    mc = mc_uncertainty(curves, fit, cfg["rb"]["mc_resamples"], seed=cfg["run"]["seed"])
    write_csv(out / "rb_curve.csv", ["n", "mean", "stderr"], _curve_rows(curves))
    res = {"num_qubits": qubits, "protocol": protocol, "p": fit.p, "amplitude": fit.amp,
           "offset": fit.offset, "F_C": fit.fidelities["F_C"], "F_p": fit.fidelities["F_p"],
           "avg_primitives": curves.avg_primitives, "mc_std": mc, "converged": fit.converged,
           "lengths": curves.lengths, "mean": curves.mean_curve(), "meta": curves.meta}
    write_json(out / "rb.json", res)
    return res


def cmd_irb(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .benchmark import fit_decay, interleaved_fidelity, mc_interleaved, run_rb
    gate = args.gate or cfg["rb"]["interleaved"]
    protocol = args.mode or cfg["rb"]["protocol"]
    p = cfg.device_params()
    gates = _gateset(cfg, p)
    ref_c = run_rb(_rb_config(cfg, 2, protocol), p=p, gates=gates)
    int_c = run_rb(_rb_config(cfg, 2, protocol, interleaved=gate), p=p, gates=gates)
    ref, itl = fit_decay(ref_c), fit_decay(int_c)
    f_gate = interleaved_fidelity(itl.p, ref.p)
    std = mc_interleaved(int_c, ref_c, cfg["rb"]["mc_resamples"], seed=cfg["run"]["seed"])
    write_csv(out / "irb_reference.csv", ["n", "mean", "stderr"], _curve_rows(ref_c))
    write_csv(out / "irb_interleaved.csv", ["n", "mean", "stderr"], _curve_rows(int_c))
    res = {"gate": gate, "p_ref": ref.p, "p_int": itl.p, "F_gate": f_gate, "mc_std": std,
           "F_C_ref": ref.fidelities["F_C"], "F_p_ref": ref.fidelities["F_p"]}
    write_json(out / "irb.json", res)
    return res


def cmd_sweep(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .benchmark import sweep_fr
    from .evolution import TrotterConfig
    s = cfg["sweep"]
    mode = args.mode or s["mode"]
    mode = "dephasing-only" if mode == "standard" else mode
    grid = [float(x) for x in args.grid.split(",")] if args.grid else s["fr_grid"]
    res = sweep_fr(cfg.device_params(), grid, mode, t2star=cfg["noise"]["t2star"],
                   sigma_J=cfg["noise"]["sigma_J"], num_sequences=s["num_sequences"],
                   noise_repeats=s["noise_repeats"], error_model=s["error_model"],
                   seed=cfg["run"]["seed"], cfg=TrotterConfig(cfg["gates"]["trotter_N"]),
                   threads=cfg["run"]["threads"])
    write_csv(out / f"sweep_{mode}.csv", ["f_R", "infidelity"],
              [(f, v["infidelity"]) for f, v in res.items()])
    payload = {"mode": mode, "points": [{"f_R": f, **v} for f, v in res.items()]}
    write_json(out / f"sweep_{mode}.json", payload)
    return payload


def _tomo_state(name: str) -> np.ndarray:
    from .gates import ideal_unitary
    dd = np.zeros(4, dtype=complex)
    dd[3] = 1
    if name == "dd":
        return dd
    if name == "uu":
        return np.eye(4)[0].astype(complex)
    if name == "bell":
        return ideal_unitary("CNOT2") @ ideal_unitary("Y1/2") @ dd
    if name == "mixed":
        return np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
    raise ConfigError(f"unknown tomography state {name!r}")


def _rho_csv(path: Path, rho: np.ndarray) -> None:
    labels = ["uu", "ud", "du", "dd"]
    write_csv(path, ["row"] + labels, [[labels[i]] + [float(x) for x in np.real(rho[i])]
                                       for i in range(4)])


def cmd_tomo(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .readout import ReadoutModel, calibrate_C, initial_state
    from .tomography import mc_state_uncertainty, mle_reconstruct, simulate_record
    t = cfg["tomo"]
    name = args.state or t["state"]
    p = cfg.device_params()
    spam = cfg.spam()
    target = _tomo_state(name)
    if name == "dd":
        rho = initial_state(spam)
    else:
        rho = target if target.ndim == 2 else np.outer(target, np.conj(target))
    seed = cfg["run"]["seed"]
    truth = ReadoutModel.from_spam(spam, p, t["shots"])
    C = calibrate_C(spam, cfg["spam"]["calibration_shots"], seed, p)
    rec = simulate_record(rho, truth, t["shots"], seed, key=(name,))
    res = mle_reconstruct(rec, C, target)
    std = mc_state_uncertainty(rec, C, target, t["mc_resamples"], seed=seed,
                               threads=cfg["run"]["threads"])
    (out / "tomo_record.json").parent.mkdir(parents=True, exist_ok=True)
    (out / "tomo_record.json").write_text(rec.to_json() + "\n")
    _rho_csv(out / "tomo_rho_real.csv", res.rho)
    payload = {"state": name, "fidelity": res.fidelity, "mc_std": std, "rho": res.rho,
               "cost": res.cost, "converged": res.converged, "C": C.C,
               "C_condition_number": float(np.linalg.cond(C.C))}
    write_json(out / "tomo.json", payload)
    return payload


def cmd_algo(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .algorithms import TomoOptions, run_dj, run_grover
    a = cfg["algo"]
    alg = args.algorithm or a["algorithm"]
    alg = "deutsch-jozsa" if alg == "dj" else alg
    idx = args.oracle or a["oracle"]
    if alg == "grover" and not str(idx).startswith("f"):
        idx = f"f{idx}"
    if alg == "grover" and idx == "f2":
        idx = "f11"
    run = run_dj if alg == "deutsch-jozsa" else run_grover
    seed = cfg["run"]["seed"]
    if args.mode == "noiseless":
        res = run(idx)
    else:
        spam = cfg.spam()
        tomo = TomoOptions(cfg["tomo"]["shots"], cfg["spam"]["calibration_shots"]) \
            if a["tomography"] else None
        res = run(idx, cfg.noise_model(), tomo, gates=_gateset(cfg), spam=spam,
                  samples=a["samples"], seed=seed)
    stages = []
    for s in res.stages:
        _rho_csv(out / f"algo_{res.index}_{s.stage}.csv", s.rho)
        stages.append({"stage": s.stage, "fidelity": s.fidelity, "max_imag": s.max_imag,
                       "rho": s.rho})
    payload = {"algorithm": alg, "oracle": res.index, "outcome": res.outcome,
               "probability": res.probability, "stages": stages, "meta": res.meta}
    write_json(out / "algo.json", payload)
    return payload


def cmd_coherence(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .device import parse_transition
    from .estimation import (fit_decay_curve, rabi_decay_metric, simulate_echo,
                             simulate_ramsey, simulate_rabi)
    from .noise import NoiseModel
    c = cfg["coherence"]
    tr = parse_transition(args.transition or c["transition"])
    p = cfg.device_params()
    f_R = cfg.f_R()
    noise = cfg.noise_model()
    ram = simulate_ramsey(p, tr, noise, samples=c["samples"], detuning=c["detuning"], f_R=f_R)
    echo = simulate_echo(p, tr, noise, samples=min(c["samples"], 1000), f_R=f_R)
    tau_c = cfg["noise"]["tau_c"] if math.isfinite(cfg["noise"]["tau_c"]) else 5.0
    ou = NoiseModel.ornstein_uhlenbeck(noise.sigma_f1, tau_c, seed=cfg["run"]["seed"])
    echo_ou = simulate_echo(p, tr, ou, samples=min(c["samples"], 500), f_R=f_R)
    rabi = simulate_rabi(p, tr, noise, samples=min(c["samples"], 500), f_R=f_R)
    fits = {"ramsey": fit_decay_curve(ram), "echo_ou": fit_decay_curve(echo_ou),
            "rabi": fit_decay_curve(rabi, t2star=p.T2star[tr], scale=math.pi)}
    for name, cur in (("ramsey", ram), ("echo", echo), ("echo_ou", echo_ou), ("rabi", rabi)):
        write_csv(out / f"coherence_{name}.csv", ["t_us", "probability"],
                  [(float(t), float(v)) for t, v in zip(cur.times, cur.prob)])
    f_eff = rabi.meta["f_R"]
    metric = rabi_decay_metric(f_R=f_eff, t2star=p.T2star[tr], t2rabi=p.T2rabi[tr])
    payload = {"transition": f"{tr[0]}{tr[1][0]}", "fits": fits,
               "echo_min_amplitude_quasi_static": float(np.min(echo.prob)),
               "rabi_decay": {"D": metric.D, "R": metric.R, "t_hp": metric.t_hp}}
    write_json(out / "coherence.json", payload)
    return payload


def cmd_estimate(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .estimation import CYCLE_SECONDS, track_trace
    from .noise import NoiseModel, load_trace, ou_trace
    e = cfg["estimate"]
    seed = cfg["run"]["seed"]
    if cfg["noise"]["trace_file"]:
        trace = load_trace(cfg["noise"]["trace_file"])
    else:
        model = NoiseModel("ornstein-uhlenbeck", e["sigma"], e["sigma"], e["sigma"] / 3,
                           e["tau_c"], seed=seed)
        dt = CYCLE_SECONDS * 1e6
        trace = ou_trace(model, e["records"] * dt, dt)
    res = track_trace(trace, e["f0"], shots=e["shots"], window=e["window"],
                      resolution=e["resolution"], seed=seed)
    rows = [(float(t), float(a), float(b), float(c), float(x), float(y), float(z))
            for t, a, b, c, x, y, z in zip(res["times"], res["df1"], res["df2"], res["djhalf"],
                                           trace.df1, trace.df2, trace.djhalf)]
    write_csv(out / "estimate_trace.csv",
              ["t_s", "df1", "df2", "djhalf", "true_df1", "true_df2", "true_djhalf"], rows)
    err = {k: float(np.sqrt(np.mean((res[k] - getattr(trace, k)) ** 2)))
           for k in ("df1", "df2", "djhalf")}
    payload = {"records": len(trace), "rms_error": err,
               "mean_posterior_std": {f"{k[0]}{k[1][0]}": float(np.mean(v))
                                      for k, v in res["errors"].items()}}
    write_json(out / "estimate.json", payload)
    return payload


def cmd_clifford(args, cfg: ExperimentConfig, out: Path) -> dict:
    from .clifford import build_clifford_table, save_table
    tab = build_clifford_table(args.qubits)
    save_table(tab, out / f"clifford{args.qubits}q.npz")
    write_csv(out / f"clifford{args.qubits}q.csv", ["index", "primitives", "decomposition"],
              [(i, int(c), " ".join(w)) for i, (c, w) in enumerate(zip(tab.counts, tab.decomp))])
    payload = {"num_qubits": args.qubits, "elements": len(tab), "avg_primitives": tab.avg_primitives,
               "count_histogram": {int(k): int(v) for k, v in
                                   zip(*np.unique(tab.counts, return_counts=True))}}
    write_json(out / f"clifford{args.qubits}q.json", payload)
    return payload


_HANDLERS = {"rb": cmd_rb, "irb": cmd_irb, "sweep-fr": cmd_sweep, "tomo": cmd_tomo,
             "algo": cmd_algo, "coherence": cmd_coherence, "estimate": cmd_estimate,
             "clifford-table": cmd_clifford}


def _error(exc: BaseException, out: Path | None, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["line"] = exc.line
    print(json.dumps(payload), file=sys.stderr)
    if out is not None:
        try:
            write_json(out / "error.json", payload)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = None
    try:
        cfg = _config(args)
        out = Path(cfg["run"]["out"])
        out.mkdir(parents=True, exist_ok=True)
        result = _HANDLERS[args.command](args, cfg, out)
        files = [p.name for p in out.iterdir() if p.name != "manifest.json"]
        write_manifest(out, args.command, cfg, argv, {"root": cfg["run"]["seed"]}, files)
        summary = {k: v for k, v in result.items()
                   if isinstance(v, (int, float, str)) and not isinstance(v, bool)}
        print(json.dumps({"command": args.command, "out": str(out), **summary}, default=str))
        return 0
    except ConfigError as exc:
        return _error(exc, out, 2)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        return _error(exc, out, 1)


if __name__ == "__main__":
    sys.exit(main())
