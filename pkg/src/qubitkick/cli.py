"""Command-line entry point.

Subcommands: table1, simulate, ensemble, verify {bch,influence,noise,oracle},
reconstruct, bloch-map.  Outputs are written atomically (temp file + rename)
and CSV carries full double precision so reruns diff byte-identically.
Exit codes: 0 success, 1 validation failure, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile

import numpy as np

from . import core, dynamics, forces, influence, noise, quantum, reconstruct

SCHEMA = "qubit-kick/1"

_DEFAULT_CONFIG = {
    "omega_o_hz": "0.5",
    "omega_q_hz": "1.0",
    "g_override": "0.05",
    "p": "0.5",
    "phi": "0.0",
    "T": "30.0",
    "dt": "0.01",
    "n_traj": "1000",
    "seed": "12345",
    "n_fock": "40",
    "n_qubits": "1",
}


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: list[str], columns: list[np.ndarray]) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _envelope(command: str, config_echo: dict, data) -> str:
    doc = {"schema": SCHEMA, "command": command, "config_echo": _jsonable(config_echo),
           "data": _jsonable(data)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(args, command: str, config_echo: dict, csv_text: str | None, data) -> None:
    """Write csv or a json envelope to --out, or print to stdout."""
    if args.format == "json" or csv_text is None:
        payload = _envelope(command, config_echo, data)
    else:
        payload = csv_text
    if args.out:
        _write_atomic(args.out, payload)
    else:
        sys.stdout.write(payload)


def _load_setup(args) -> core.RunSetup:
    if args.config:
        if not os.path.exists(args.config):
            raise UsageError(f"config file not found: {args.config}")
        setup = core.load_config(args.config)
    else:
        setup = core.realize_config(dict(_DEFAULT_CONFIG))
    if args.seed is not None:
        setup = core.RunSetup(
            physical=setup.physical,
            dimensionless=setup.dimensionless,
            state=setup.state,
            sim=dataclasses.replace(setup.sim, seed=args.seed),
            raw={**setup.raw, "seed": str(args.seed)},
        )
    return setup


# --- subcommand implementations -------------------------------------------

def _cmd_table1(args) -> int:
    rows = forces.table_comparison()
    width = 14
    print(f"{'platform':<12} {'quantity':<8} {'computed [N]':>{width}} {'printed [N]':>{width}} {'rel err':>9}")
    failed = False
    for row in rows:
        if row["degenerate"]:
            comp = "-" if row["computed"] is None else f"{row['computed']:.3e}"
            print(f"{row['platform']:<12} {row['quantity']:<8} {comp:>{width}} {'-':>{width}} {'(degen)':>9}")
            continue
        ok = row["rel_error"] <= 0.05
        failed |= not ok
        print(f"{row['platform']:<12} {row['quantity']:<8} {row['computed']:>{width}.3e} "
              f"{row['printed']:>{width}.3e} {row['rel_error']:>8.2%}{'' if ok else '  <-- FAIL'}")
    if args.out:
        lines = ["platform,quantity,computed,printed,rel_error"]
        for row in rows:
            vals = [row["platform"], row["quantity"]] + [
                "" if row[k] is None else _fmt(row[k]) for k in ("computed", "printed", "rel_error")
            ]
            lines.append(",".join(vals))
        _emit(args, "table1", {}, "\n".join(lines) + "\n", rows)
    return 1 if failed else 0


def _cmd_simulate(args) -> int:
    setup = _load_setup(args)
    draw = noise.sample_noise(setup.state, noise.trajectory_rng(setup.sim.seed, 0))
    if args.solver == "rk4":
        traj = dynamics.integrate_rk4(setup.dimensionless, setup.state, draw, setup.sim,
                                      eom_sign=args.eom_sign, index=0)
    else:
        traj = dynamics.solve_trajectory_closed_form(setup.dimensionless, setup.state, draw,
                                                     setup.sim, eom_sign=args.eom_sign, index=0)
    csv_text = _csv(["tau", "q", "p"], [traj.tau, traj.q, traj.p])
    _emit(args, "simulate", setup.raw, csv_text,
          {"rows": [dict(tau=t, q=q, p=p) for t, q, p in zip(traj.tau, traj.q, traj.p)]})
    return 0


def _cmd_ensemble(args) -> int:
    setup = _load_setup(args)
    stats = dynamics.run_ensemble(setup.dimensionless, setup.state, setup.sim,
                                  eom_sign=args.eom_sign, n_threads=args.threads)
    csv_text = _csv(["tau", "mean_q", "mean_p", "var_q"],
                    [stats.tau, stats.mean_q, stats.mean_p, stats.var_q])
    summary = {
        "n_traj": stats.n_traj, "seed": stats.seed, "eom_sign": stats.eom_sign,
        "solver": stats.solver, "coarse_tau": stats.coarse_tau,
        "cov_qq": stats.cov_qq, "max_var_q": float(stats.var_q.max()),
    }
    if args.format == "json":
        _emit(args, "ensemble", setup.raw, None, {"summary": summary, "stats_csv": csv_text})
    else:
        _emit(args, "ensemble", setup.raw, csv_text, None)
        if args.out:
            _write_atomic(args.out + ".summary.json", _envelope("ensemble", setup.raw, summary))
    if args.psd_out and stats.psd is not None:
        _write_atomic(args.psd_out, _csv(["freq", "psd"], [stats.psd_freq, stats.psd]))
    return 0


def _random_path_pair(seed: int, n_grid: int = 4001, T: float = 2.0 * np.pi) -> influence.PathPair:
    rng = np.random.default_rng(seed)
    tau = np.linspace(0.0, T, n_grid)

    def trig(rng):
        c = rng.normal(scale=0.5, size=5)
        return c[0] + c[1] * np.cos(tau) + c[2] * np.sin(tau) + c[3] * np.cos(2 * tau) + c[4] * np.sin(2 * tau)

    return influence.PathPair(tau=tau, q=trig(rng), p=trig(rng), q_b=trig(rng), p_b=trig(rng))


def _cmd_verify(args) -> int:
    setup = _load_setup(args)
    g_values = (0.1, 0.05, 0.025, 0.0125)
    if args.check == "bch":
        pair = _random_path_pair(setup.sim.seed)
        report = influence.verify_bch(pair, setup.state, g_values)
    elif args.check == "influence":
        pair = _random_path_pair(setup.sim.seed)
        report = influence.verify_influence_expansion(pair, setup.state, g_values)
    elif args.check == "noise":
        zetas = noise.sample_zetas(setup.state, setup.sim.seed, range(args.draws))
        grid = np.linspace(0.0, 4.0 * np.pi, 33)
        emp = noise.empirical_covariance_from_zetas(zetas, grid)
        kern = noise.kernel_block_matrix(grid, setup.state)
        rank_info = noise.kernel_rank_check(np.linspace(0.0, 4.0 * np.pi, 64), setup.state)
        report = {
            "state": {"p": setup.state.p, "phi": setup.state.phi},
            "max_cov_error": float(np.max(np.abs(emp - kern))),
            "rank": rank_info["rank"],
            "min_eigenvalue": rank_info["min_eigenvalue"],
            "n_draws": args.draws,
        }
    elif args.check == "oracle":
        report = quantum.compare_classical_quantum(setup.dimensionless, setup.state, setup.sim)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown verify check {args.check!r}")
    _emit(args, f"verify {args.check}", setup.raw, None, report)
    return 0


def _cmd_reconstruct(args) -> int:
    setup = _load_setup(args)
    dp = setup.dimensionless
    if args.ensemble_csv:
        if not os.path.exists(args.ensemble_csv):
            raise UsageError(f"ensemble csv not found: {args.ensemble_csv}")
        data = np.genfromtxt(args.ensemble_csv, delimiter=",", names=True)
        fit = reconstruct.fit_mean(data["tau"], data["mean_q"], dp)
        result = reconstruct.recover_state(fit, dp, eom_sign=args.eom_sign)
    else:
        stats = dynamics.run_ensemble(dp, setup.state, setup.sim, eom_sign=args.eom_sign,
                                      n_threads=args.threads, compute_psd=False)
        result = reconstruct.reconstruct_from_stats(stats, dp)
    _emit(args, "reconstruct", setup.raw, None, result)
    return 0


def _cmd_bloch_map(args) -> int:
    bmap = forces.bloch_map(args.resolution)
    csv_text = _csv(
        ["theta", "phi", "eta_f", "eta_st"],
        [bmap.theta.ravel(), bmap.phi.ravel(), bmap.eta_f.ravel(), bmap.eta_st.ravel()],
    )
    _emit(args, "bloch-map", {"resolution": args.resolution}, csv_text, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qubitkick",
        description="Qubit-induced forces on a classical oscillator: simulation, "
                    "verification, and state reconstruction.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value run configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for ensembles (results are thread-count independent)")
    common.add_argument("--out", help="output path (written atomically)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--eom-sign", dest="eom_sign", choices=dynamics.EOM_CONVENTIONS,
                        default=dynamics.DEFAULT_EOM, help="equation-of-motion sign convention")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("table1", parents=[common], help="platform force budget vs published values")
    sp = sub.add_parser("simulate", parents=[common], help="solve a single trajectory")
    sp.add_argument("--solver", choices=("closed_form", "rk4"), default="closed_form")
    se = sub.add_parser("ensemble", parents=[common], help="Monte Carlo ensemble statistics")
    se.add_argument("--psd-out", dest="psd_out", help="also write the Welch PSD as CSV")
    sv = sub.add_parser("verify", parents=[common], help="consistency and convergence reports")
    sv.add_argument("check", choices=("bch", "influence", "noise", "oracle"))
    sv.add_argument("--draws", type=int, default=100_000, help="sampler draws for the noise check")
    sr = sub.add_parser("reconstruct", parents=[common], help="infer the qubit state from an ensemble")
    sr.add_argument("--ensemble-csv", dest="ensemble_csv", help="existing ensemble CSV (tau,mean_q,...)")
    sb = sub.add_parser("bloch-map", parents=[common], help="state-dependence maps over the Bloch sphere")
    sb.add_argument("--resolution", type=int, default=64)
    return parser


_HANDLERS = {
    "table1": _cmd_table1,
    "simulate": _cmd_simulate,
    "ensemble": _cmd_ensemble,
    "verify": _cmd_verify,
    "reconstruct": _cmd_reconstruct,
    "bloch-map": _cmd_bloch_map,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (core.InvalidParameterError, reconstruct.DegenerateBasisError,
            reconstruct.UndersampledError, dynamics.ResonanceError,
            quantum.TruncationError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
