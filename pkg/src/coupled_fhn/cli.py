"""Command-line front end: ``coupled-fhn {simulate,folds,sweep,reproduce,equilibria}``.

Exit codes: 0 success, 2 configuration error, 3 integrator failure.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import analysis as an
from .integrator import IntegrationError, IntegratorConfig, integrate
from .model import FOLD_X, Params, State, as_state, phi
from .reduced import (
    NoRowMatches,
    ZeroCoupling,
    all_folded_equilibria,
    match_fold_condition,
    double_fold_jacobian,
    singular_orbit,
    same_sign_folded_node,
)
from .stability import antisynchrony_attracting, find_equilibria, synchrony_attracting, synchrony_precision

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATOR = 0, 2, 3
ANALYSES = ("canard", "mmo", "mmo_windows", "relaxation", "synchrony")
FIGURES = tuple(f"fig{n}" for n in range(3, 12))


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: Params
    initial_state: State
    integrator: IntegratorConfig
    method: str = "rodas3"
    analyses: dict[str, dict] = field(default_factory=dict)
    output_dir: Path | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        try:
            params = Params.from_dict(data["params"])
            init = data["initial_state"]
            if isinstance(init, dict):
                x1, x2 = init["lift"]
                state = State(float(x1), float(x2), phi(float(x1)), phi(float(x2)))
            else:
                state = as_state(init)
            integ = dict(data.get("integrator", {}))
            method = integ.pop("method", "rodas3")
            cfg = IntegratorConfig(**{k: float(v) if k != "max_steps" else int(v)
                                      for k, v in integ.items()})
            analyses = data.get("analyses", {})
            if isinstance(analyses, list):
                analyses = {name: {} for name in analyses}
            unknown = set(analyses) - set(ANALYSES)
            if unknown:
                raise ConfigError(f"unknown analyses: {sorted(unknown)}")
            out = data.get("output_dir")
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid run configuration: {exc}") from exc
        if not all(np.isfinite(state)):
            raise ConfigError("initial state must be finite")
        return cls(params, state, cfg, method, dict(analyses), Path(out) if out else None)


def run_analyses(traj, p: Params, analyses: dict[str, dict]) -> dict[str, Any]:
    report: dict[str, Any] = {}
    for name, opts in analyses.items():
        opts = dict(opts)
        if name == "canard":
            report["canard"] = an.detect_canard(traj, p, **opts).to_dict()
        elif name == "mmo":
            try:
                report["mmo_signature"] = an.mmo_signature(traj, **opts).to_dict()
            except an.TooShort as exc:
                report["mmo_signature"] = {"error": str(exc)}
        elif name == "mmo_windows":
            sigs = an.windowed_signatures(traj, opts.get("variable", "x1"), opts["edges"])
            report["mmo_windows"] = {
                "signatures": [s.to_dict() if s else None for s in sigs],
                "stationary": an.signatures_stationary(sigs),
            }
        elif name == "relaxation":
            ro = an.detect_relaxation_oscillation(traj, **opts)
            report["relaxation_oscillation"] = ro.to_dict() if ro else None
        elif name == "synchrony":
            t0 = opts.get("t0", traj.times[0])
            d_sync, d_anti = synchrony_precision(traj, t0)
            report["synchrony"] = {"t0": t0, "delta_sync": d_sync, "delta_anti": d_anti}
    return report


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def simulate(cfg: RunConfig, out: Path) -> dict[str, Any]:
    traj = integrate(cfg.params, cfg.initial_state, cfg.integrator, cfg.method)
    report = {
        "params": cfg.params.to_dict(),
        "initial_state": list(cfg.initial_state),
        "steps": {"accepted": traj.n_accepted, "rejected": traj.n_rejected},
        "final_state": list(traj.final_state()),
        **run_analyses(traj, cfg.params, cfg.analyses),
    }
    _write(out / "trajectory.csv", traj.to_csv())
    _write(out / "events.json", traj.events_json())
    _write(out / "analysis.json", _dump(report))
    return report


# -- folds ------------------------------------------------------------------------------

def folds_report(p: Params) -> dict[str, Any]:
    if p.k == 0:
        raise ZeroCoupling("folded-equilibrium analysis needs k != 0")
    equilibria = []
    for fe in all_folded_equilibria(p):
        row, verdict = None, None
        if fe.in_attracting_boundary:
            try:
                m = match_fold_condition(p, fe)
                row = m.row.number if m.row else None
            except NoRowMatches:
                pass
            free = fe.free_coordinate
            if p.b == 0 and fe.sigma * free > FOLD_X:
                verdict = "CanardPossible" if same_sign_folded_node(p, fe.sigma) else "Inconclusive"
        entry = fe.to_dict(row, verdict)
        entry["region"] = fe.region.value if fe.region else None
        equilibria.append(entry)
    double = []
    for same in (True, False):
        for sigma in (1, -1):
            rep = double_fold_jacobian(p, same, sigma)
            double.append({"point": list(rep.point), "same_sign": same, "sigma": sigma,
                           "det": rep.det, "trace": rep.trace, "class": rep.stability.value,
                           "canard_verdict": rep.verdict.value})
    return {"params": p.to_dict(), "folded_equilibria": equilibria, "double_folds": double}


# -- sweep ---------------------------------------------------------------------------------

def parse_axis(text: str) -> list[float]:
    """``"v"``, ``"v1,v2,..."`` or ``"start:stop:num"`` (inclusive linspace)."""
    text = str(text).strip()
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
    if not text:
        return []
    return [float(v) for v in text.split(",")]


SWEEP_COLUMNS = ("b", "c", "k", "epsilon", "synchrony_attracting", "synchrony_attracting_nonstrict",
                 "antisynchrony_attracting", "antisynchrony_regime", "folded_equilibria")


def sweep_row(p: Params, mmo_run: dict | None) -> list[str]:
    anti = antisynchrony_attracting(p)
    if p.k != 0:
        folded = ";".join(
            f"{fe.folded_variable}{'+' if fe.sigma > 0 else '-'}:{fe.region.value}:{fe.stability.value}"
            for fe in all_folded_equilibria(p) if fe.in_attracting_boundary)
    else:
        folded = "ZeroCoupling"
    row = [f"{p.b:.17g}", f"{p.c:.17g}", f"{p.k:.17g}", f"{p.epsilon:.17g}",
           str(synchrony_attracting(p)).lower(), str(synchrony_attracting(p, strict=False)).lower(),
           str(anti.attracting).lower(), anti.regime.value, folded]
    if mmo_run is not None:
        try:
            traj = integrate(p, mmo_run["initial_state"], mmo_run["integrator"])
            sig = an.mmo_signature(traj, "x1", mmo_run["t_start"], mmo_run["integrator"].t_end)
            row.append(" ".join(f"{L}^{s}" for L, s in sig.blocks))
            row.append(str(sig.stationary).lower())
        except (IntegrationError, an.TooShort) as exc:
            row += [type(exc).__name__, "false"]
    return row


def sweep(grid: dict[str, list[float]], epsilon: float, threads: int = 1,
          mmo_run: dict | None = None) -> str:
    points = [Params(b, c, k, epsilon) for b, c, k in itertools.product(grid["b"], grid["c"], grid["k"])]
    if not points:
        raise ConfigError("empty grid")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda p: sweep_row(p, mmo_run), points))
    header = list(SWEEP_COLUMNS) + (["mmo_blocks", "mmo_stationary"] if mmo_run else [])
    return "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"


# -- reproduce ------------------------------------------------------------------------------

def load_recipe(figure: str) -> dict:
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    text = resources.files("coupled_fhn").joinpath("recipes", f"{figure}.json").read_text()
    return json.loads(text)


def singular_report(recipe: dict, out: Path | None) -> dict:
    p = Params.from_dict(recipe["params"])
    orbits = []
    for n, spec in enumerate(recipe["orbits"]):
        orbit = singular_orbit(p, tuple(spec["x0"]), arcs=int(spec.get("arcs", 4)))
        final = orbit.final_state
        entry = {
            "x0": spec["x0"],
            "termination": orbit.termination,
            "n_arcs": len(orbit.arcs),
            "jumps": [{"t": j.time, "before": list(j.before), "after": list(j.after),
                       "variables": list(j.variables)} for j in orbit.jumps],
            "final_state": list(final),
            "final_sync_distance": max(abs(final.x1 - final.x2), abs(final.y1 - final.y2)),
            "final_antisync_distance": max(abs(final.x1 + final.x2), abs(final.y1 + final.y2)),
        }
        orbits.append(entry)
        if out is not None:
            _write(out / f"orbit_{n}.csv", orbit.to_csv())
    report = {"figure": recipe["figure"], "params": p.to_dict(), "orbits": orbits}
    if out is not None:
        _write(out / "analysis.json", _dump(report))
    return report


def reproduce(figure: str, out: Path) -> dict:
    recipe = load_recipe(figure)
    if recipe["kind"] == "singular":
        return singular_report(recipe, out)
    cfg = RunConfig.from_dict(recipe)
    report = simulate(cfg, out)
    report["figure"] = figure
    _write(out / "analysis.json", _dump(report))
    return report


# -- argument parsing -------------------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="JSON configuration file")
    parser.add_argument("--out", type=Path, default=default, help="output directory")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1)
    parser.add_argument("--seed", type=int, default=default, help="reserved; runs are deterministic")


def _param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--b", type=float)
    parser.add_argument("--c", type=float)
    parser.add_argument("--k", type=float)
    parser.add_argument("--epsilon", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coupled-fhn", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate a run configuration and analyse it")
    sp.add_argument("config_file", nargs="?", type=Path)
    _global_flags(sp, suppress=True)

    sp = sub.add_parser("folds", help="folded equilibria, tabulated classes and double-fold verdicts")
    _param_flags(sp)
    _global_flags(sp, suppress=True)

    sp = sub.add_parser("sweep", help="predicates and folded-equilibrium classes over a grid")
    sp.add_argument("--b", default="0", help="value, list 'a,b' or range 'start:stop:num'")
    sp.add_argument("--c", default="0")
    sp.add_argument("--k", default="1")
    sp.add_argument("--epsilon", type=float, default=0.01)
    sp.add_argument("--mmo-t-end", type=float, default=None,
                    help="also integrate each point from (-1.5, 2) on C0 and report its signature")
    _global_flags(sp, suppress=True)

    sp = sub.add_parser("reproduce", help="regenerate the data behind a figure")
    sp.add_argument("figure", help="fig3 ... fig11")
    _global_flags(sp, suppress=True)

    sp = sub.add_parser("equilibria", help="all equilibria of the full system")
    _param_flags(sp)
    _global_flags(sp, suppress=True)
    return parser


def _params_from_args(args) -> Params:
    data: dict[str, Any] = {}
    if args.config is not None:
        loaded = json.loads(Path(args.config).read_text())
        data.update(loaded.get("params", loaded))
    for name in ("b", "c", "k", "epsilon"):
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return Params.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = args.out
    try:
        if args.command == "simulate":
            path = args.config_file or args.config
            if path is None:
                raise ConfigError("simulate needs a configuration file")
            cfg = RunConfig.from_dict(json.loads(Path(path).read_text()))
            simulate(cfg, out or cfg.output_dir or Path("."))
        elif args.command == "folds":
            text = _dump(folds_report(_params_from_args(args)))
            sys.stdout.write(text)
            if out is not None:
                _write(out / "folds.json", text)
        elif args.command == "sweep":
            grid = {name: parse_axis(getattr(args, name)) for name in ("b", "c", "k")}
            mmo_run = None
            if args.mmo_t_end:
                mmo_run = {"initial_state": (-1.5, 2.0, phi(-1.5), phi(2.0)),
                           "integrator": IntegratorConfig(args.mmo_t_end),
                           "t_start": min(100.0, 0.2 * args.mmo_t_end)}
            text = sweep(grid, args.epsilon, args.threads, mmo_run)
            if out is not None:
                _write(out / "sweep.csv", text)
            else:
                sys.stdout.write(text)
        elif args.command == "reproduce":
            reproduce(args.figure, out or Path(args.figure))
        elif args.command == "equilibria":
            eqs = find_equilibria(_params_from_args(args))
            text = _dump([e.to_dict() for e in eqs])
            sys.stdout.write(text)
            if out is not None:
                _write(out / "equilibria.json", text)
    except IntegrationError as exc:
        print(f"integrator failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    except (ConfigError, ZeroCoupling, ValueError, KeyError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
