"""Command-line experiment runner.

    gevrey-ns simulate --config run.cfg --out out/
    gevrey-ns picard --config run.cfg --out out/
    gevrey-ns verify --lemma all --grid 6 --samples 1000 --seed 7 --out out/
    gevrey-ns lemma4-const --a 1 --sigma 4
    gevrey-ns decay --config run.cfg --sweep-amplitude 0.1:0.9:5 --out out/ --jobs 2

Exit status: 0 success, 1 usage or configuration error, 2 a monitor failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields, replace
from datetime import datetime, timezone
from pathlib import Path

from .evolve import SimConfig, initial_field, simulate, write_outputs
from .fixedpoint import InfeasibleParameters, choose_parameters, picard_solve
from .lattice import build_lattice
from .norms import GevreyParams, lemma4_constant
from .verify import check_lemma1, check_lemma4, check_lemma23_random

log = logging.getLogger("gevrey_ns")

EXIT_OK, EXIT_USAGE, EXIT_MONITOR = 0, 1, 2
PICARD_RATIO_BOUND = 0.55


class ConfigError(ValueError):
    pass


# -- config files ----------------------------------------------------------

def _parse_value(key: str, raw: str, typ: str):
    raw = raw.strip()
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "Optional[float]":
            return None if raw.lower() == "none" else float(raw)
        if typ == "str":
            return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ}") from None
    raise ConfigError(f"{key}: unsupported field type {typ}")


def load_config(path) -> SimConfig:
    """Flat ``key = value`` file; keys are SimConfig field names, unknown keys are errors."""
    types = SimConfig.field_types()
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, types[key])
    if "snapshot" in values and values["snapshot"] and not Path(values["snapshot"]).is_absolute():
        values["snapshot"] = str(Path(path).parent / values["snapshot"])
    try:
        return SimConfig(**values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_config(cfg: SimConfig) -> str:
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif v is None:
            v = "none"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"


# -- output directories ----------------------------------------------------

class RunDir:
    """Builds a run in a scratch directory and renames it into place when done."""

    def __init__(self, target, subcommand: str, config_path=None, seed=None):
        self.target = Path(target)
        if self.target.exists() and (not self.target.is_dir() or any(self.target.iterdir())):
            raise ConfigError(f"output directory {self.target} exists and is not empty")
        parent = self.target.parent
        try:
            parent.mkdir(parents=True, exist_ok=True)
            self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=parent))
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {self.target}: {exc}") from None
        self.subcommand = subcommand
        self.config_path = str(config_path) if config_path else None
        self.seed = seed

    @property
    def path(self) -> Path:
        return self.tmp

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and self.tmp.exists():
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False

    def finish(self, extra: dict | None = None) -> Path:
        hashes = {}
        for f in sorted(self.tmp.rglob("*")):
            if f.is_file():
                hashes[str(f.relative_to(self.tmp))] = hashlib.sha256(f.read_bytes()).hexdigest()
        manifest = {
            "subcommand": self.subcommand,
            "config": self.config_path,
            "output_dir": str(self.target),
            "seed": self.seed,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "artifacts": hashes,
        }
        if extra:
            manifest.update(extra)
        (self.tmp / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        if self.target.exists():
            self.target.rmdir()
        os.rename(self.tmp, self.target)
        return self.target


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    import numpy as np

    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# -- subcommands -----------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    with RunDir(args.out, "simulate", args.config, cfg.seed) as run:
        series = simulate(cfg)
        summary = write_outputs(cfg, series, run.path)
        run.finish()
    log.info("simulate: z0=%g z_end=%g all_ok=%s", summary["z0"], summary["z_final"], summary["all_ok"])
    return EXIT_OK if summary["all_ok"] else EXIT_MONITOR


def cmd_picard(args) -> int:
    cfg = load_config(args.config)
    u0 = initial_field(cfg)
    try:
        params = choose_parameters(u0, cfg.nu, cfg.gevrey, cfg.dt)
    except InfeasibleParameters as exc:
        raise ConfigError(str(exc)) from None
    with RunDir(args.out, "picard", args.config, cfg.seed) as run:
        res = picard_solve(u0, cfg.nu, params)
        d = res.diagnostics
        ok = (d["status"] == "converged"
              and all(r <= PICARD_RATIO_BOUND for r in d["ratios"])
              and all(b["in_ball"] for b in d["ball_ledger"])
              and d["residual"] <= 10 * params.tol)
        d = dict(d, ok=ok, config=asdict(cfg))
        _write_json(run.path / "picard.json", _finite(d))
        run.finish()
    log.info("picard: %s after %d iterations, residual %.3g", d["status"], d["iterations"], d["residual"])
    return EXIT_OK if ok else EXIT_MONITOR


def cmd_verify(args) -> int:
    lat = build_lattice(args.grid)
    with RunDir(args.out, "verify", None, args.seed) as run:
        lemmas = ["1", "2", "3", "4"] if args.lemma == "all" else [args.lemma]
        reports = []
        if "1" in lemmas:
            reports.append(check_lemma1(args.samples, lat, args.seed, args.a, args.sigma))
        if "2" in lemmas or "3" in lemmas:
            r2, r3 = check_lemma23_random(args.samples, lat, args.seed, args.a, args.sigma)
            reports += [r for r, k in ((r2, "2"), (r3, "3")) if k in lemmas]
        if "4" in lemmas:
            try:
                reports.append(check_lemma4(args.samples, lat, args.a, args.sigma, args.seed))
            except (ValueError, OverflowError) as exc:
                raise ConfigError(f"lemma 4: {exc}") from None
        for rep in reports:
            _write_json(run.path / f"{rep.inequality}.json", _finite(rep.to_dict()))
            print(f"{rep.inequality}: worst ratio {rep.worst_ratio:.6g} over {rep.samples} samples "
                  f"({rep.skipped} skipped) -> {'PASS' if rep.passed else 'FAIL'}")
        run.finish({"grid": args.grid, "samples": args.samples, "a": args.a, "sigma": args.sigma})
    return EXIT_OK if all(r.passed for r in reports) else EXIT_MONITOR


def cmd_lemma4_const(args) -> int:
    try:
        c = lemma4_constant(args.a, args.sigma)
    except (ValueError, OverflowError) as exc:
        raise ConfigError(str(exc)) from None
    print(f"{c:.17g}")
    return EXIT_OK


def parse_sweep(spec: str):
    try:
        lo, hi, steps = spec.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise ConfigError(f"--sweep-amplitude expects lo:hi:steps, got {spec!r}") from None
    if steps < 1 or lo < 0 or hi < lo:
        raise ConfigError(f"bad sweep {spec!r}")
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


def _decay_entry(job):
    cfg, out_dir = job
    series = simulate(cfg)
    summary = write_outputs(cfg, series, out_dir)
    dec = summary["monitors"].get("decay", {})
    return {
        "amplitude": cfg.amplitude,
        "terminal_ratio": dec.get("terminal_ratio"),
        "fitted_rate": dec.get("fitted_rate"),
        "t_half": dec.get("t_half"),
        "all_ok": summary["all_ok"],
    }


def cmd_decay(args) -> int:
    cfg = load_config(args.config)
    amps = parse_sweep(args.sweep_amplitude)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    with RunDir(args.out, "decay", args.config, cfg.seed) as run:
        jobs = [(replace(cfg, amplitude=a), run.path / f"run_{i:03d}") for i, a in enumerate(amps)]
        if args.jobs == 1:
            rows = [_decay_entry(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                rows = list(ex.map(_decay_entry, jobs))
        with open(run.path / "decay_table.csv", "w", newline="", encoding="ascii") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["amplitude", "terminal_ratio", "fitted_rate", "t_half", "all_ok"])
            for r in rows:
                wr.writerow([repr(r["amplitude"]), repr(r["terminal_ratio"]), repr(r["fitted_rate"]),
                             "" if r["t_half"] is None else repr(r["t_half"]), int(r["all_ok"])])
        run.finish({"amplitudes": amps})
    return EXIT_OK if all(r["all_ok"] for r in rows) else EXIT_MONITOR


# -- entry point -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gevrey-ns", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="march the mild solution and record monitors")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("picard", help="run the fixed-point construction and emit diagnostics")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_picard)

    s = sub.add_parser("verify", help="margin reports for the lemma inequalities")
    s.add_argument("--lemma", choices=["1", "2", "3", "4", "all"], required=True)
    s.add_argument("--grid", type=int, default=6)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--sigma", type=float, default=2.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("lemma4-const", help="print sup_x x^2 exp(-(a/sqrt(s) - a/s) x^(1/s))")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.set_defaults(func=cmd_lemma4_const)

    s = sub.add_parser("decay", help="amplitude sweep of long-time decay runs")
    s.add_argument("--config", required=True)
    s.add_argument("--sweep-amplitude", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_decay)
    return ap


def _setup_logging():
    level = os.environ.get("GNS_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "error"
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s")


def run(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "samples", 1) < 1:
            raise ConfigError("--samples must be >= 1")
        if hasattr(args, "grid"):
            try:
                build_lattice(args.grid)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if hasattr(args, "sigma") and args.command == "verify":
            try:
                GevreyParams(-1, args.a, args.sigma)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return args.func(args)
    except ConfigError as exc:
        print(f"gevrey-ns: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
