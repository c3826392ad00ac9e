"""Command-line interface: generate, edmd, cca, timescales.

Every run embeds its fully resolved configuration in the output for
reproducibility. Exit codes: 0 success, 2 validation error, 3 numerical
degeneracy, 4 I/O error. The environment variable TTK_THREADS caps BLAS
parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import trajio
from .amuset import (
    TrajectoryPair,
    amuset_cca,
    amuset_edmd,
    implied_timescales,
)
from .basis import BasisSpec
from .dynamics import FlowConfig, SdeConfig, generate_abc_dataset, simulate_double_well
from .errors import NumericsError, SchemaError, TtkdError, ValidationError
from .hocur import HocurConfig

__all__ = ["main"]


def _apply_thread_cap():
    cap = os.environ.get("TTK_THREADS")
    if not cap:
        return
    try:
        limit = int(cap)
    except ValueError:
        raise ValidationError(f"TTK_THREADS must be an integer, got {cap!r}")
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limit)
    except ImportError:  # pragma: no cover - fallback without threadpoolctl
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(limit)


def _load_config_overrides(args, parser_defaults: dict) -> dict:
    """Layer: parser defaults < --config file < explicit CLI values."""
    resolved = dict(parser_defaults)
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ValidationError(f"config file {args.config} does not exist")
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config file is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise SchemaError("config file must contain a JSON object")
        for key, value in doc.items():
            if key not in parser_defaults:
                raise ValidationError(f"unknown config key {key!r}")
            resolved[key] = value
    for key in parser_defaults:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
    return resolved


def _require(cfg: dict, key: str):
    if cfg.get(key) is None:
        raise ValidationError(f"missing required option --{key.replace('_', '-')}")
    return cfg[key]


def _check_input_exists(path):
    if not os.path.exists(path):
        raise ValidationError(f"input file {path} does not exist")
    return path


GENERATE_DEFAULTS = {
    "system": None,
    "out": None,
    "n_per_dim": 25,
    "tau": 5.0,
    "a": float(np.sqrt(3.0)),
    "b": float(np.sqrt(2.0)),
    "c": 1.0,
    "atol": 1e-8,
    "rtol": 1e-8,
    "mode": "grid",
    "beta": 3.0,
    "dt": 1e-3,
    "steps": 100_000,
    "x0": 1.0,
    "stride": 1,
    "seed": 0,
}


def cmd_generate(args) -> int:
    cfg = _load_config_overrides(args, GENERATE_DEFAULTS)
    system = _require(cfg, "system")
    out = _require(cfg, "out")
    if system == "abc":
        flow = FlowConfig(
            a=cfg["a"], b=cfg["b"], c=cfg["c"], tau=cfg["tau"],
            atol=cfg["atol"], rtol=cfg["rtol"],
        )
        x, y = generate_abc_dataset(
            int(cfg["n_per_dim"]), flow, mode=cfg["mode"], seed=int(cfg["seed"])
        )
        m = x.shape[1]
        trajio.write_trajectory(out, np.concatenate([x, y], axis=1))
        meta = {
            "system": "abc",
            "pair_m": m,
            "d": 3,
            "tau_physical": cfg["tau"],
            "parameters": {k: cfg[k] for k in ("a", "b", "c", "n_per_dim", "mode", "atol", "rtol")},
            "seed": int(cfg["seed"]),
        }
    elif system == "double-well":
        sde = SdeConfig(
            beta=cfg["beta"], dt=cfg["dt"], n_steps=int(cfg["steps"]),
            x0=cfg["x0"], seed=int(cfg["seed"]),
        )
        traj = simulate_double_well(sde)[:, :: int(cfg["stride"])]
        trajio.write_trajectory(out, traj)
        meta = {
            "system": "double-well",
            "d": 1,
            "m": traj.shape[1],
            "frame_time": cfg["dt"] * int(cfg["stride"]),
            "parameters": {k: cfg[k] for k in ("beta", "dt", "steps", "x0", "stride")},
            "seed": int(cfg["seed"]),
        }
    else:
        raise ValidationError(f"unknown system {system!r} (expected abc or double-well)")
    trajio.write_metadata(out, meta)
    print(f"wrote {out}")
    return 0


ANALYZE_DEFAULTS = {
    "traj": None,
    "traj_x": None,
    "traj_y": None,
    "basis": None,
    "basis_y": None,
    "lag": None,
    "eps": 0.0,
    "method": "streamed",
    "q": None,
    "tau_physical": None,
    "symmetrize": False,
    "hocur_ranks": None,
    "hocur_sweeps": 2,
    "hocur_alpha": 5.0,
    "out": None,
    "phi_csv": None,
    "grid_eval": None,
}


def _hocur_config(cfg: dict) -> HocurConfig | None:
    if cfg["method"] != "hocur":
        return None
    ranks = _require(cfg, "hocur_ranks")
    if isinstance(ranks, str):
        ranks = [int(r) for r in ranks.split(",")]
    return HocurConfig(
        max_ranks=tuple(int(r) for r in ranks),
        n_iter=int(cfg["hocur_sweeps"]),
        alpha=float(cfg["hocur_alpha"]),
    )


def _load_pair(cfg: dict) -> TrajectoryPair:
    path = _check_input_exists(_require(cfg, "traj"))
    z = trajio.read_trajectory(path)
    if cfg.get("lag") is not None:
        lag = int(cfg["lag"])
        if not 0 <= lag < z.shape[1]:
            raise ValidationError(f"lag {lag} must be in 0..{z.shape[1] - 1}")
        if lag == 0:
            idx = np.arange(1, z.shape[1] + 1)
            return TrajectoryPair(z, idx, idx)
        return TrajectoryPair.from_trajectory(z, lag)
    meta = trajio.read_metadata(path)
    if meta and "pair_m" in meta:
        m = int(meta["pair_m"])
        return TrajectoryPair(z, np.arange(1, m + 1), np.arange(m + 1, 2 * m + 1))
    raise ValidationError("need --lag or a paired trajectory (pair_m metadata)")


def _result_payload(res, cfg: dict, command: str, elapsed: float, extra=None) -> dict:
    values = np.asarray(res.values)
    payload = {
        "command": command,
        "kind": res.kind,
        "eigenvalues": trajio.eigenvalues_to_json(values),
        "ranks": list(res.ranks),
        "eps": res.truncation,
        "method": res.method,
        "symmetrized": res.symmetrized,
        "wall_time_s": elapsed,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "warnings": list(res.warnings),
        "phi_complex": bool(
            np.iscomplexobj(res.eigenfunctions)
            and np.max(np.abs(np.imag(res.eigenfunctions))) > 0
        ),
    }
    if res.singular_values is not None:
        payload["singular_values"] = [float(s) for s in res.singular_values]
    tau_phys = cfg.get("tau_physical")
    if tau_phys is not None:
        payload["tau_physical"] = float(tau_phys)
        payload["timescales"] = implied_timescales(values, float(tau_phys))
    else:
        payload["tau_physical"] = None
        payload["timescales"] = None
    if extra:
        payload.update(extra)
    return payload


def cmd_edmd(args) -> int:
    cfg = _load_config_overrides(args, ANALYZE_DEFAULTS)
    out = _require(cfg, "out")
    basis_path = _check_input_exists(_require(cfg, "basis"))
    spec = BasisSpec.load(basis_path)
    pair = _load_pair(cfg)
    start = time.perf_counter()
    res = amuset_edmd(
        pair,
        spec,
        eps=float(cfg["eps"]),
        method=cfg["method"],
        q=None if cfg["q"] is None else int(cfg["q"]),
        symmetrize=bool(cfg["symmetrize"]),
        hocur_config=_hocur_config(cfg),
    )
    elapsed = time.perf_counter() - start
    payload = _result_payload(
        res, cfg, "edmd", elapsed,
        extra={"n_snapshot_pairs": pair.n_pairs, "basis_spec": json.loads(spec.to_json())},
    )
    trajio.write_results(out, payload)
    if cfg["phi_csv"]:
        trajio.write_phi_csv(cfg["phi_csv"], res.eigenfunctions)
    print(f"wrote {out}")
    return 0


def cmd_cca(args) -> int:
    cfg = _load_config_overrides(args, ANALYZE_DEFAULTS)
    out = _require(cfg, "out")
    spec_x = BasisSpec.load(_check_input_exists(_require(cfg, "basis")))
    spec_y = (
        BasisSpec.load(_check_input_exists(cfg["basis_y"])) if cfg["basis_y"] else None
    )
    if cfg["traj_x"] and cfg["traj_y"]:
        x = trajio.read_trajectory(_check_input_exists(cfg["traj_x"]))
        y = trajio.read_trajectory(_check_input_exists(cfg["traj_y"]))
    else:
        pair = _load_pair(cfg)
        x, y = pair.x, pair.y
    start = time.perf_counter()
    res = amuset_cca(
        x,
        y,
        spec_x,
        spec_y,
        eps=float(cfg["eps"]),
        method=cfg["method"],
        q=None if cfg["q"] is None else int(cfg["q"]),
        hocur_config=_hocur_config(cfg),
    )
    elapsed = time.perf_counter() - start
    payload = _result_payload(
        res, cfg, "cca", elapsed,
        extra={"n_snapshots": x.shape[1], "basis_spec": json.loads(spec_x.to_json())},
    )
    trajio.write_results(out, payload)
    if cfg["phi_csv"]:
        trajio.write_phi_csv(cfg["phi_csv"], res.eigenfunctions)
    if cfg["grid_eval"]:
        trajio.write_grid_eval_csv(cfg["grid_eval"], x, res.eigenfunctions)
    print(f"wrote {out}")
    return 0


TIMESCALES_DEFAULTS = {"results": None, "tau": None, "out": None}


def cmd_timescales(args) -> int:
    cfg = _load_config_overrides(args, TIMESCALES_DEFAULTS)
    doc = trajio.read_results(_check_input_exists(_require(cfg, "results")))
    tau = float(_require(cfg, "tau"))
    values = trajio.eigenvalues_from_json(doc["eigenvalues"])
    doc["tau_physical"] = tau
    doc["timescales"] = implied_timescales(values, tau)
    out = _require(cfg, "out")
    trajio.write_results(out, doc)
    print(f"wrote {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttkd",
        description="Tensor-train Koopman/transfer-operator spectra from trajectory data",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("generate", help="generate synthetic trajectory data")
    gen.add_argument("system", nargs="?", choices=["abc", "double-well"])
    gen.add_argument("--config")
    gen.add_argument("--out")
    gen.add_argument("--n-per-dim", dest="n_per_dim", type=int)
    gen.add_argument("--tau", type=float)
    gen.add_argument("--a", type=float)
    gen.add_argument("--b", type=float)
    gen.add_argument("--c", type=float)
    gen.add_argument("--atol", type=float)
    gen.add_argument("--rtol", type=float)
    gen.add_argument("--mode", choices=["grid", "random"])
    gen.add_argument("--beta", type=float)
    gen.add_argument("--dt", type=float)
    gen.add_argument("--steps", type=int)
    gen.add_argument("--x0", type=float)
    gen.add_argument("--stride", type=int)
    gen.add_argument("--seed", type=int)
    gen.set_defaults(func=cmd_generate)

    def add_analysis_args(p, cca: bool):
        p.add_argument("--config")
        p.add_argument("--traj")
        if cca:
            p.add_argument("--traj-x", dest="traj_x")
            p.add_argument("--traj-y", dest="traj_y")
            p.add_argument("--basis-y", dest="basis_y")
        p.add_argument("--basis")
        p.add_argument("--lag", type=int)
        p.add_argument("--eps", type=float)
        p.add_argument("--method", choices=["exact", "streamed", "hocur"])
        p.add_argument("--q", type=int)
        p.add_argument("--tau-physical", dest="tau_physical", type=float)
        p.add_argument("--hocur-ranks", dest="hocur_ranks")
        p.add_argument("--hocur-sweeps", dest="hocur_sweeps", type=int)
        p.add_argument("--hocur-alpha", dest="hocur_alpha", type=float)
        p.add_argument("--out")
        p.add_argument("--phi-csv", dest="phi_csv")

    edmd = sub.add_parser("edmd", help="Koopman spectrum via tensor-train AMUSE")
    add_analysis_args(edmd, cca=False)
    edmd.add_argument("--symmetrize", action="store_const", const=True)
    edmd.set_defaults(func=cmd_edmd)

    cca = sub.add_parser("cca", help="forward-backward (coherent set) spectrum")
    add_analysis_args(cca, cca=True)
    cca.add_argument("--grid-eval", dest="grid_eval")
    cca.set_defaults(func=cmd_cca)

    ts = sub.add_parser("timescales", help="recompute implied timescales")
    ts.add_argument("--config")
    ts.add_argument("--results")
    ts.add_argument("--tau", type=float)
    ts.add_argument("--out")
    ts.set_defaults(func=cmd_timescales)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors already use code 2
        return int(exc.code or 0)
    try:
        _apply_thread_cap()
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    except TtkdError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
