"""``steerkit`` command-line interface.

Exit codes: 0 success, 1 computation failure, 2 input error. Errors are
written to stderr as a JSON object with ``error`` and ``message`` keys.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from steerkit import bounds
from steerkit.errors import SolverError, SteerkitError
from steerkit.linop import matrix_from_json
from steerkit.steering import STEERING_TOL

SWEEP_COLUMNS = (
    "d",
    "eta",
    "R_lb",
    "R_sdp",
    "xi_lb",
    "xi_witness",
    "eta_unsteerable",
    "eta_advantage",
)


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    tol: float = STEERING_TOL
    out: str | None = None
    format: str = "json"

    def validate(self):
        if not 0 < self.tol < 1:
            raise InputError(f"--tol must lie in (0, 1), got {self.tol}")
        p = self.params
        if "epsilon" in p and not p["epsilon"] > 0:
            raise InputError(f"--epsilon must be positive, got {p['epsilon']}")
        if "beta" in p and not p["beta"] > 0:
            raise InputError(f"--beta must be positive, got {p['beta']}")
        if "shots" in p and p["shots"] < 1:
            raise InputError(f"--shots must be at least 1, got {p['shots']}")
        if isinstance(p.get("eta"), float) and not 0 <= p["eta"] <= 1:
            raise InputError(f"--eta must lie in [0, 1], got {p['eta']}")
        if p.get("jobs") is not None and p["jobs"] < 1:
            raise InputError("--jobs must be at least 1")
        return self


# ---------------------------------------------------------------------------
# parsing helpers


def _int_list(text: str) -> list[int]:
    """``2,3,5`` or ``2:50`` (inclusive)."""
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":"))
            vals = list(range(lo, hi + 1))
        else:
            vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse dimension list {text!r}") from exc
    if not vals:
        raise InputError("empty dimension list")
    return vals


def _eta_list(text: str) -> list[float]:
    """``0:1:0.1`` (start:stop:step, inclusive) or ``0.2,0.5``."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            vals = bounds.eta_grid(start, stop, step)
        else:
            vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse eta grid {text!r}: {exc}") from exc
    if not vals:
        raise InputError("empty eta grid")
    if any(not 0 <= v <= 1 for v in vals):
        raise InputError("eta values must lie in [0, 1]")
    return vals


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _load_assemblage(path: str):
    from steerkit.assemblage import Assemblage

    data = _read_json(path)
    try:
        return Assemblage.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a valid assemblage: {exc}") from exc


def _load_state(path: str) -> np.ndarray:
    data = _read_json(path)
    try:
        return matrix_from_json(data["state"] if isinstance(data, dict) else data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a valid state: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_mub(cfg: RunConfig):
    from steerkit.mub import mub_family

    return mub_family(cfg.params["dim"]).to_json()


def cmd_assemblage(cfg: RunConfig):
    from steerkit.assemblage import Measurements, assemblage_from_state, isotropic_assemblage
    from steerkit.mub import mub_family

    p = cfg.params
    if p["kind"] == "isotropic":
        if p["dim"] is None or p["eta"] is None:
            raise InputError("isotropic needs --dim and --eta")
        a = isotropic_assemblage(p["dim"], p["eta"], mub_family(p["dim"]))
    else:
        if not p["state"] or not p["measurements"]:
            raise InputError("from-state needs --state and --measurements")
        rho = _load_state(p["state"])
        try:
            m = Measurements.from_json(_read_json(p["measurements"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"{p['measurements']}: not valid measurements: {exc}") from exc
        a = assemblage_from_state(rho, m)
    return a.to_json()


def cmd_robustness(cfg: RunConfig):
    from steerkit.steering import robustness_dual, robustness_primal

    a = _load_assemblage(cfg.params["assemblage"])
    fn = robustness_primal if cfg.params.get("primal") else robustness_dual
    res = fn(a, tol=cfg.tol)
    return res.to_json(include_model=cfg.params.get("model", False))


def cmd_advantage(cfg: RunConfig):
    from steerkit.cooling import certified_advantage

    a = _load_assemblage(cfg.params["assemblage"])
    rep = certified_advantage(a, cfg.params["epsilon"], cfg.params["beta"], tol=cfg.tol)
    return rep.to_json()


def _sweep_point(args):
    d, eta, with_sdp, tol = args
    t = bounds.thresholds(d)
    row = {
        "d": d,
        "eta": eta,
        "R_lb": bounds.isotropic_robustness_lb(d, eta),
        "R_sdp": None,
        "xi_lb": bounds.xi_lb_isotropic(d, eta),
        "xi_witness": None,
        "eta_unsteerable": t.unsteerable,
        "eta_advantage": t.advantage,
    }
    if with_sdp:
        from steerkit.assemblage import isotropic_assemblage
        from steerkit.cooling import certified_advantage
        from steerkit.mub import mub_family
        from steerkit.steering import robustness_dual

        a = isotropic_assemblage(d, eta, mub_family(d))
        res = robustness_dual(a, tol=tol)
        row["R_sdp"] = res.R
        row["xi_witness"] = certified_advantage(a, 1.0, 1.0, tol=tol, robustness=res).xi
    return row


def cmd_sweep(cfg: RunConfig):
    p = cfg.params
    dims, etas = p["dims"], p["eta"]
    with_sdp = p["with_sdp"]
    if with_sdp:
        from steerkit.mub import mub_family

        for d in dims:
            mub_family(d)  # fail fast on unsupported dimensions
    tasks = [(d, eta, with_sdp, cfg.tol) for d in dims for eta in etas]
    jobs = p["jobs"]
    if with_sdp and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    return rows


def cmd_simulate(cfg: RunConfig):
    from steerkit.cooling import CoolingTask, simulate_protocol, witness_hamiltonians
    from steerkit.steering import robustness_dual

    p = cfg.params
    a = _load_assemblage(p["assemblage"])
    if p.get("task"):
        try:
            task = CoolingTask.from_json(_read_json(p["task"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{p['task']}: not a valid task: {exc}") from exc
    else:
        F = robustness_dual(a, tol=cfg.tol).witnesses
        task = witness_hamiltonians(F, p["epsilon"], p["beta"])
    return simulate_protocol(a, task, p["shots"], p["seed"]).to_json()


COMMANDS = {
    "mub": cmd_mub,
    "assemblage": cmd_assemblage,
    "robustness": cmd_robustness,
    "advantage": cmd_advantage,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=STEERING_TOL, help="solver tolerance")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = _Parser(prog="steerkit", description="Steering robustness and cooling advantage tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("mub", parents=[common], help="mutually unbiased bases")
    s.add_argument("--dim", type=int, required=True)

    s = sub.add_parser("assemblage", parents=[common], help="build an assemblage")
    s.add_argument("kind", choices=("isotropic", "from-state"))
    s.add_argument("--dim", type=int)
    s.add_argument("--eta", type=float)
    s.add_argument("--state")
    s.add_argument("--measurements")

    s = sub.add_parser("robustness", parents=[common], help="steering robustness")
    s.add_argument("assemblage")
    s.add_argument("--primal", action="store_true", help="solve the LHS-model program")
    s.add_argument("--model", action="store_true", help="include the LHS model")

    for name in ("advantage", "simulate"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("assemblage")
        s.add_argument("--epsilon", type=float, default=1.0)
        s.add_argument("--beta", type=float, default=1.0)
        if name == "simulate":
            s.add_argument("--shots", type=int, default=10**6)
            s.add_argument("--seed", type=int, default=0)
            s.add_argument("--task", help="task JSON instead of witness Hamiltonians")

    s = sub.add_parser("sweep", parents=[common], help="bounds and SDP values over a (d, eta) grid")
    s.add_argument("--dims", type=_int_list, default=_int_list("2:50"))
    s.add_argument("--eta", type=_eta_list, default=_eta_list("0:1:0.02"))
    s.add_argument("--with-sdp", action="store_true")
    s.add_argument("--jobs", type=int, default=None)
    return parser


def _config(ns: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "tol", "out", "format")}
    if ns.command == "sweep" and params["jobs"] is None:
        env = os.environ.get("STEERKIT_JOBS", "1")
        try:
            params["jobs"] = int(env)
        except ValueError as exc:
            raise InputError(f"STEERKIT_JOBS must be an integer, got {env!r}") from exc
    default_fmt = "csv" if ns.command == "sweep" else "json"
    cfg = RunConfig(ns.command, params, ns.tol, ns.out, ns.format or default_fmt)
    if cfg.format == "csv" and ns.command != "sweep":
        raise InputError(f"{ns.command} only writes JSON")
    return cfg.validate()


def _render(cfg: RunConfig, result) -> str:
    if cfg.command == "sweep":
        if cfg.format == "csv":
            return bounds.rows_to_csv(result, SWEEP_COLUMNS)
        return json.dumps({"schema_version": 1, "rows": result}, indent=2) + "\n"
    return json.dumps(result, indent=2) + "\n"


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = _config(ns)
        result = COMMANDS[cfg.command](cfg)
        text = _render(cfg, result)
    except InputError as exc:
        return _fail(2, "InputError", str(exc))
    except SolverError as exc:
        return _fail(1, "SolverError", str(exc))
    except (SteerkitError, ValueError) as exc:
        return _fail(2, type(exc).__name__, str(exc))
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
