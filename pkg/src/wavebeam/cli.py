"""Command-line front end: spectrum | ingham | hum | simulate | verify-all.

Every subcommand reads an optional JSON config (unknown keys are rejected),
lets flags override it, and writes JSON reports with sorted keys so that equal
inputs give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import acceptance, forward_sim, hum, ingham
from .errors import InvalidInput, WavebeamError
from .modal import FinalData
from .spectrum import ModelParams, solve_spectrum, spectrum_csv, validate_hypotheses

PARAM_KEYS = {f.name for f in fields(ModelParams)}


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams = field(default_factory=ModelParams)
    seed: int = 0
    draws: int = 1000
    epsilon: float = 0.1
    steps: int = 20000
    modes: int | None = None
    sim_modes: int | None = None
    target_file: str | None = None
    controls_file: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise InvalidInput("config must be a JSON object")
        allowed = {f.name for f in fields(cls)}
        extra = set(doc) - allowed
        if extra:
            raise InvalidInput(f"unknown config keys: {sorted(extra)}")
        doc = dict(doc)
        pdoc = doc.pop("params", {}) or {}
        if not isinstance(pdoc, dict):
            raise InvalidInput("params must be a JSON object")
        bad = set(pdoc) - PARAM_KEYS
        if bad:
            raise InvalidInput(f"unknown params keys: {sorted(bad)}")
        try:
            params = ModelParams(**pdoc)
        except TypeError as exc:
            raise InvalidInput(str(exc)) from exc
        return cls(params=params, **doc)

    @classmethod
    def load(cls, path: str | None) -> "ExperimentConfig":
        if path is None:
            return cls()
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)


def lab_threads() -> int | None:
    raw = os.environ.get("LAB_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInput(f"LAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise InvalidInput("LAB_THREADS must be >= 1")
    return n


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _params(cfg: ExperimentConfig, args) -> ModelParams:
    p = cfg.params
    upd = {}
    if getattr(args, "T", None) is not None:
        upd["T"] = args.T
    if getattr(args, "modes", None) is not None:
        upd["N"] = args.modes
    elif cfg.modes is not None:
        upd["N"] = cfg.modes
    return replace(p, **upd) if upd else p


def cmd_spectrum(cfg, args) -> int:
    p = _params(cfg, args)
    br = solve_spectrum(p)
    out = Path(args.out)
    _write(out / "spectrum.csv", spectrum_csv(br))
    doc = {"params": p.__dict__, "hypotheses": validate_hypotheses(br, p).to_json() if len(br) >= 4 else None}
    _write(out / "spectrum.json", acceptance.dumps(acceptance._clean(doc)))
    print(f"{len(br)} modes, max residual {max(max(b.residuals) for b in br):.2e}")
    return 0


def cmd_ingham(cfg, args) -> int:
    p = _params(cfg, args)
    draws = args.draws if args.draws is not None else cfg.draws
    seed = args.seed if args.seed is not None else cfg.seed
    eps = args.epsilon if args.epsilon is not None else cfg.epsilon
    br = solve_spectrum(p)
    rep = validate_hypotheses(br, p)
    c1 = ingham.estimate_inverse_constant(br, draws, p.T, seed, p)
    c2 = ingham.estimate_direct_constant(br, draws, p.T, seed, p)
    bounds = ingham.kernel_sum_bounds(br, p.T, eps, rep.gamma_hat)
    summary = {"params": p.__dict__, "epsilon": eps, "gamma_hat": rep.gamma_hat,
               "c1": c1.to_json(), "c2": c2.to_json(), "n0_hat": bounds.n0_hat,
               "calD_constant": ingham.calD_bound_constant(br, p)}
    out = Path(args.report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["draw", "inverse_ratio", "direct_ratio"])
    for i, (a, b) in enumerate(zip(c1.ratios, c2.ratios)):
        w.writerow([i, repr(float(a)), repr(float(b))])
    _write(out / "ingham_draws.csv", buf.getvalue())
    _write(out / "ingham_summary.json", acceptance.dumps(acceptance._clean(summary)))
    print(f"c1_hat={c1.value:.6g} c2_hat={c2.value:.6g} n0_hat={bounds.n0_hat}")
    return 0


def _series_csv(ctl: hum.Controls, samples: int = 401) -> str:
    t = np.linspace(0.0, ctl.T, samples)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "g1", "g2"])
    for row in zip(t, ctl.g1(t), ctl.g2(t)):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def cmd_hum(cfg, args) -> int:
    p = _params(cfg, args)
    path = args.target_file or cfg.target_file
    if path is None:
        target = acceptance.hum_target(p.N, cfg.seed)
    else:
        target = FinalData.from_json(json.loads(Path(path).read_text()))
    ctl, system = hum.hum_controls(target, p, p.N, p.T)
    doc = {"params": p.__dict__, "target": target.truncated(p.N).to_json(), "controls": ctl.to_json(),
           "gram": system.conditioning(), "residual": system.residual}
    out = Path(args.out)
    _write(out / "controls.json", acceptance.dumps(acceptance._clean(doc)))
    _write(out / "controls.csv", _series_csv(ctl))
    print(f"gram eig_min={system.eig_min:.4g}, |g1|^2={ctl.norms()['g1_L2sq']:.4g}, "
          f"|g2|^2={ctl.norms()['g2_L2sq']:.4g}")
    return 0


def cmd_simulate(cfg, args) -> int:
    p = _params(cfg, args)
    path = args.controls_file or cfg.controls_file
    if path is None:
        raise InvalidInput("simulate needs --controls-file")
    doc = json.loads(Path(path).read_text())
    ctl = hum.Controls.from_json(doc.get("controls", doc))
    target = FinalData.from_json(doc["target"]) if "target" in doc else None
    modes = args.modes if args.modes is not None else (target.N if target is not None else p.N)
    sim_modes = args.sim_modes if args.sim_modes is not None else (cfg.sim_modes or modes)
    steps = int(round(ctl.T / args.dt)) if args.dt is not None else cfg.steps
    rec = max(1, steps // 200)
    rep = forward_sim.run_to_T(ctl.g1, ctl.g2, p, ctl.T, steps, target, modes, sim_modes, record_every=rec)
    out = Path(args.out)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"E{n}" for n in range(1, sim_modes + 1)])
    for t, y in rep.snapshots:
        w.writerow([repr(float(t))] + [repr(float(e)) for e in forward_sim.modal_energies(y)])
    _write(out / "energies.csv", buf.getvalue())
    _write(out / "final.json", acceptance.dumps(acceptance._clean(rep.to_json())))
    print(f"overall relative error {rep.overall:.3e}, spillover {rep.spillover:.3e}")
    return 0


def cmd_verify_all(cfg, args) -> int:
    verdicts = acceptance.run_all(cfg.params, cfg.seed)
    out = Path(args.out)
    doc = {"params": cfg.params.__dict__, "seed": cfg.seed,
           "criteria": [v.to_json() for v in verdicts],
           "all_passed": all(v.passed for v in verdicts)}
    _write(out / "verify.json", acceptance.dumps(acceptance._clean(doc)))
    lines = [v.line() for v in verdicts]
    _write(out / "summary.txt", "\n".join(lines) + "\n")
    for v in verdicts:
        print(f"{v.line()}  ({v.seconds:.2f}s)")
    return 0 if doc["all_passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavebeam", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, out_flag="--out", out_default="out"):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument(out_flag, default=out_default, dest=out_flag.lstrip("-").replace("-", "_"))
        return sp

    sp = common(sub.add_parser("spectrum", help="roots, CSV dump and hypothesis report"))
    sp.add_argument("--modes", type=int)
    sp.add_argument("--T", type=float)
    sp.set_defaults(fn=cmd_spectrum)

    sp = common(sub.add_parser("ingham", help="Monte-Carlo inverse/direct constants"), "--report")
    for name, typ in (("--T", float), ("--modes", int), ("--draws", int), ("--seed", int), ("--epsilon", float)):
        sp.add_argument(name, type=typ)
    sp.set_defaults(fn=cmd_ingham)

    sp = common(sub.add_parser("hum", help="controls for a target final state"))
    sp.add_argument("--target-file")
    sp.add_argument("--modes", type=int)
    sp.add_argument("--T", type=float)
    sp.set_defaults(fn=cmd_hum)

    sp = common(sub.add_parser("simulate", help="forward simulation under given controls"))
    sp.add_argument("--controls-file")
    sp.add_argument("--modes", type=int)
    sp.add_argument("--sim-modes", type=int)
    sp.add_argument("--dt", type=float)
    sp.set_defaults(fn=cmd_simulate)

    sp = common(sub.add_parser("verify-all", help="run every acceptance criterion"))
    sp.set_defaults(fn=cmd_verify_all)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        lab_threads()
        cfg = ExperimentConfig.load(args.config)
        return args.fn(cfg, args)
    except WavebeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
