"""Command line driver: construct codes, run sweeps, turn curves into
security reports, and pretty-print result rows.

Configuration comes from a JSON file validated against a published
schema; individual flags override config fields. Commands communicate
only through files, so construct / simulate / analyze can run as
independent processes and every artifact records the hashes needed to
check it against the configuration that claims it.

Exit codes: 0 success (including a feasible=false analysis), 1 runtime
failure, 2 usage or configuration error. BCCLAB_OUT_DIR sets the
default output directory.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import __version__
from .construct import ConstructionError, write_code
from .library import (BUILD_SEEDS, UEP_PC1_FRACTION, build_two_code_pair,
                      build_uep_code)
from .montecarlo import (SimConfig, config_hash, describe_layout,
                         merge_curve_sets, read_curves_csv, run_sweep)
from .secrecy import (TARGET_PUBLIC, TARGET_SECRET, TWO_CODES,
                      UEP_SINGLE_CODE, SecurityReport, build_security_report,
                      concatenated_bler, layout_for_two_codes,
                      layout_for_uep, validate_levels)

OUT_DIR_ENV = "BCCLAB_OUT_DIR"

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scheme"],
    "properties": {
        "scheme": {"enum": [UEP_SINGLE_CODE, TWO_CODES]},
        "n": {"type": "integer", "minimum": 8},
        "seed": {"type": "integer", "minimum": 0},
        "secret_seed": {"type": "integer", "minimum": 0},
        "public_seed": {"type": "integer", "minimum": 0},
        "pc1_fraction": {"type": "number", "exclusiveMinimum": 0,
                         "exclusiveMaximum": 1},
        "snr_db": {"type": "array", "minItems": 1,
                   "items": {"type": "number"}},
        "delta": {"type": "number", "exclusiveMinimum": 0,
                  "exclusiveMaximum": 1},
        "eta": {"type": "number", "exclusiveMinimum": 0,
                "exclusiveMaximum": 1},
        "l_max": {"type": "integer", "minimum": 1},
        "extrapolate": {"type": "boolean"},
        "master_seed": {"type": "integer", "minimum": 0},
        "max_frames": {"type": "integer", "minimum": 1},
        "min_error_events": {
            "oneOf": [
                {"type": "integer", "minimum": 0},
                {"type": "object", "additionalProperties": False,
                 "properties": {
                     "frame": {"type": "integer", "minimum": 0},
                     "public": {"type": "integer", "minimum": 0},
                     "secret": {"type": "integer", "minimum": 0},
                 }},
            ]
        },
        "max_iterations": {"type": "integer", "minimum": 0},
        "round_frames": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "channel": {"type": "object", "additionalProperties": False,
                    "properties": {"flip": {
                        "type": "number", "exclusiveMinimum": 0,
                        "exclusiveMaximum": 0.5}}},
        "out_dir": {"type": "string"},
        "label": {"type": "string"},
    },
}


class ConfigError(Exception):
    """Configuration or usage problem; exits with code 2."""


@dataclass
class ExperimentConfig:
    """Validated experiment settings with defaults applied."""
    scheme: str
    n: int
    seed: int
    secret_seed: int
    public_seed: int
    pc1_fraction: float
    snr_db: tuple
    delta: float
    eta: float
    l_max: int
    extrapolate: bool
    master_seed: int
    max_frames: int
    min_error_events: object
    max_iterations: int
    round_frames: int
    batch_size: int
    workers: int
    channel: dict
    out_dir: str
    label: str

    @classmethod
    def from_dict(cls, raw):
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(exc.message) from None
        scheme = raw["scheme"]
        n = raw.get("n", 1024 if scheme == UEP_SINGLE_CODE else 2048)
        if scheme == TWO_CODES and n % 2:
            raise ConfigError("two_codes needs an even frame length")
        half = n // 2
        return cls(
            scheme=scheme,
            n=n,
            seed=raw.get("seed", BUILD_SEEDS.get(("uep", n))),
            secret_seed=raw.get("secret_seed",
                                BUILD_SEEDS.get(("secret", half))),
            public_seed=raw.get("public_seed",
                                BUILD_SEEDS.get(("public", half))),
            pc1_fraction=raw.get("pc1_fraction", UEP_PC1_FRACTION),
            snr_db=tuple(raw.get("snr_db", ())),
            delta=raw.get("delta", 1e-4),
            eta=raw.get("eta", 0.1),
            l_max=raw.get("l_max", 10_000),
            extrapolate=raw.get("extrapolate", False),
            master_seed=raw.get("master_seed"),
            max_frames=raw.get("max_frames", 10_000_000),
            min_error_events=raw.get("min_error_events", 100),
            max_iterations=raw.get("max_iterations", 100),
            round_frames=raw.get("round_frames", 2000),
            batch_size=raw.get("batch_size", 1000),
            workers=raw.get("workers", 1),
            channel=raw.get("channel"),
            out_dir=raw.get("out_dir", os.environ.get(OUT_DIR_ENV, ".")),
            label=raw.get("label", ""))

    def build_codes(self):
        """Build the scheme's code(s) from the configured seeds."""
        if self.scheme == UEP_SINGLE_CODE:
            if self.seed is None:
                raise ConfigError(f"no build seed known for UEP n={self.n}")
            return [build_uep_code(self.n, self.seed, self.pc1_fraction)]
        if self.secret_seed is None or self.public_seed is None:
            raise ConfigError("no build seeds known for the two-code "
                              f"pair at n={self.n}")
        return list(build_two_code_pair(self.n // 2, self.secret_seed,
                                        self.public_seed))

    def build_layout(self):
        codes = self.build_codes()
        if self.scheme == UEP_SINGLE_CODE:
            return layout_for_uep(codes[0])
        return layout_for_two_codes(*codes)

    def sim_config(self):
        if not self.snr_db:
            raise ConfigError("simulate needs a non-empty snr_db grid")
        if self.master_seed is None:
            raise ConfigError("simulate needs a master_seed")
        quotas = self.min_error_events
        if isinstance(quotas, dict):
            quotas = {k: int(v) for k, v in quotas.items()}
        try:
            return SimConfig(
                gamma_db=self.snr_db,
                master_seed=self.master_seed,
                max_frames=self.max_frames,
                min_error_events=quotas,
                max_iterations=self.max_iterations,
                round_frames=self.round_frames,
                batch_size=self.batch_size,
                worker_count=self.workers,
                channel=self.channel)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def parse_snr(text):
    """Grid from 'a,b,c' or 'start:stop:step' (stop inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad SNR range {text!r}, want start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("SNR step must be positive")
        count = int(round((stop - start) / step))
        grid = [round(start + i * step, 10) for i in range(count + 1)]
        return [g for g in grid if g <= stop + 1e-9]
    return [float(p) for p in text.split(",")]


_OVERRIDES = (
    "scheme", "n", "seed", "secret_seed", "public_seed", "pc1_fraction",
    "delta", "eta", "l_max", "master_seed", "max_frames",
    "min_error_events", "max_iterations", "round_frames", "batch_size",
    "workers", "out_dir", "label", "extrapolate",
)


def load_config(args):
    """Config file merged with flag overrides, then validated."""
    raw = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config} not found") \
                from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    for key in _OVERRIDES:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    snr = getattr(args, "snr", None)
    if snr is not None:
        raw["snr_db"] = parse_snr(snr)
    return ExperimentConfig.from_dict(raw)


def _degree_histogram(code):
    def fmt(hist):
        return " ".join(f"{d}x{c}" for d, c in enumerate(hist) if c)

    deg = code.column_degrees()
    return (f"info {fmt(np.bincount(deg[:code.k]))} | "
            f"parity {fmt(np.bincount(deg[code.k:]))}")


def cmd_construct(args):
    cfg = load_config(args)
    codes = cfg.build_codes()
    if cfg.scheme == UEP_SINGLE_CODE:
        names = [f"uep_n{codes[0].n}_seed{cfg.seed}"]
    else:
        names = [f"secret_n{codes[0].n}_seed{cfg.secret_seed}",
                 f"public_n{codes[1].n}_seed{cfg.public_seed}"]
    code_dir = os.path.join(cfg.out_dir, "codes")
    os.makedirs(code_dir, exist_ok=True)
    for code, name in zip(codes, names):
        paths = write_code(code, os.path.join(code_dir, name),
                           extra={"version": __version__})
        rep = code.report
        head = f"{name}: n={code.n} k={code.k}"
        if code.class_map is not None:
            head += f" k1={code.k1} k2={code.k2}"
        print(head)
        print(f"  girth={rep.girth or 'open'} "
              f"min_span_weight={rep.min_span_weight} "
              f"attempts={rep.attempts} hash={code.content_hash()}")
        print(f"  degrees: {_degree_histogram(code)}")
        print(f"  wrote {paths[0]} and {paths[1]}")
    return 0


def cmd_simulate(args):
    cfg = load_config(args)
    layout = cfg.build_layout()
    sim = cfg.sim_config()

    def progress(point):
        e = point.errors
        tag = "quota" if point.quota_met else "budget"
        print(f"  {point.gamma_db:+.2f} dB: frames={point.frames} "
              f"errors frame/public/secret={e['frame']}/{e['public']}"
              f"/{e['secret']} ({tag})", flush=True)

    meta = {"version": __version__}
    if cfg.label:
        meta["label"] = cfg.label
    print(f"sweep {config_hash(layout, sim)}: {len(sim.gamma_db)} points, "
          f"scheme={cfg.scheme}, n={layout.n}", flush=True)
    result = run_sweep(layout, sim, cfg.out_dir, extra_metadata=meta,
                       progress=progress)
    print(f"curves: {os.path.join(result.out_dir, 'curves.csv')}")
    return 0


def cmd_analyze(args):
    cfg = load_config(args)
    validate_levels(cfg.delta, cfg.eta)
    layout = cfg.build_layout()
    expected = " ".join(describe_layout(layout)["codes"])
    curve_sets = []
    sources = []
    for path in args.curves:
        try:
            curves, meta = read_curves_csv(path)
        except FileNotFoundError:
            raise ConfigError(f"curve file {path} not found") from None
        got = meta.get("codes")
        if got != expected:
            raise ConfigError(
                f"curve file {path} was measured on codes [{got}], but "
                f"the config builds [{expected}]")
        curve_sets.append(curves)
        sources.append({"file": os.path.basename(path),
                        "config_hash": meta.get("config_hash"),
                        "master_seed": meta.get("master_seed")})
    merged = merge_curve_sets(curve_sets)
    for target in (TARGET_PUBLIC, TARGET_SECRET):
        if target not in merged:
            raise ConfigError(f"no {target} curve in the given files")
    report, estimates = build_security_report(
        merged[TARGET_PUBLIC], merged[TARGET_SECRET], cfg.scheme,
        layout.n, cfg.delta, cfg.eta, cfg.l_max, cfg.extrapolate)
    for name, est in estimates.items():
        if est.status != "interpolated":
            curve = merged[TARGET_PUBLIC if name == "beta_p"
                           else TARGET_SECRET]
            print(f"warning: {name} at level {est.level:.3g} is "
                  f"{est.status} on the grid "
                  f"[{curve.gamma_db[0]:+.2f}, {curve.gamma_db[-1]:+.2f}] "
                  "dB", file=sys.stderr)
    out_dir = args.out or os.path.join(cfg.out_dir, "analysis")
    os.makedirs(out_dir, exist_ok=True)
    payload = report.to_dict()
    payload["provenance"] = {
        "version": __version__,
        "codes": expected,
        "sources": sources,
        "l_max": cfg.l_max,
    }
    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    plot_path = os.path.join(out_dir, "plot_data.csv")
    _write_plot_data(plot_path, merged, report, sources)
    verdict = "feasible" if report.feasible else "infeasible"
    print(f"{verdict}: L={report.thresholds.L} "
          f"beta_p={report.thresholds.beta_p_db:.2f} "
          f"alpha_s={report.thresholds.alpha_s_db:.2f} "
          f"beta_s={report.thresholds.beta_s_db:.2f} "
          f"S_g={report.security_gap_db:.2f} dB")
    print(f"report: {report_path}")
    print(f"plot data: {plot_path}")
    return 0


def _write_plot_data(path, curves, report, sources):
    """Long-format (series, gamma_db, p) rows for log-scale plotting."""
    length = report.thresholds.L
    hashes = " ".join(str(s["config_hash"]) for s in sources)
    seeds = " ".join(str(s["master_seed"]) for s in sources)
    with open(path, "w", newline="") as fh:
        fh.write(f"# L = {length}\n")
        fh.write(f"# config_hash = {hashes}\n")
        fh.write(f"# master_seed = {seeds}\n")
        fh.write(f"# version = {__version__}\n")
        fh.write("series,gamma_db,p\n")
        for series, curve, blocks in (
                ("public", curves[TARGET_PUBLIC], 1),
                ("secret", curves[TARGET_SECRET], 1),
                ("secret_L", curves[TARGET_SECRET], length)):
            p = concatenated_bler(curve.p_hat, blocks)
            for g, pi in zip(curve.gamma_db, np.atleast_1d(p)):
                fh.write(f"{series},{float(g)!r},{float(pi)!r}\n")


def cmd_report(args):
    with open(args.report) as fh:
        payload = json.load(fh)
    try:
        report = SecurityReport.from_dict(payload)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{args.report}: {exc}") from None
    t = report.thresholds
    head = (f"{'scheme':<16} {'n':>5} {'L':>5} {'beta_p':>7} {'alpha_s':>8} "
            f"{'beta_s':>7} {'S_g':>6} {'feasible':>9} {'margin':>7}")
    row = (f"{report.scheme:<16} {report.n:>5} {t.L:>5} "
           f"{t.beta_p_db:>7.2f} {t.alpha_s_db:>8.2f} {t.beta_s_db:>7.2f} "
           f"{report.security_gap_db:>6.2f} "
           f"{'yes' if report.feasible else 'no':>9} "
           f"{report.margin_db:>7.2f}")
    print(head)
    print(row)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bcclab",
        description="Design and evaluate coding schemes that split a "
                    "frame into differently protected public and secret "
                    "messages.")
    parser.add_argument("--version", action="version",
                        version=f"bcclab {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--scheme", choices=[UEP_SINGLE_CODE, TWO_CODES])
        p.add_argument("--n", type=int, help="frame length in bits")
        p.add_argument("--seed", type=int, help="UEP code build seed")
        p.add_argument("--secret-seed", dest="secret_seed", type=int)
        p.add_argument("--public-seed", dest="public_seed", type=int)
        p.add_argument("--pc1-fraction", dest="pc1_fraction", type=float,
                       help="fraction of info bits in the strong class")
        p.add_argument("--out-dir", dest="out_dir",
                       help=f"output directory (default ${OUT_DIR_ENV} "
                            "or .)")

    p = sub.add_parser("construct",
                       help="build code(s) and write alist + sidecar")
    add_common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate", help="run an error-rate sweep")
    add_common(p)
    p.add_argument("--snr", help="grid as 'a,b,c' or 'start:stop:step'")
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--max-frames", dest="max_frames", type=int)
    p.add_argument("--min-errors", dest="min_error_events", type=int,
                   help="stop quota applied to every target")
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--round-frames", dest="round_frames", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze",
                       help="thresholds, feasibility, and plot data "
                            "from curve files")
    add_common(p)
    p.add_argument("--curves", nargs="+", required=True,
                   help="curve CSV files to merge")
    p.add_argument("--delta", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--l-max", dest="l_max", type=int)
    p.add_argument("--extrapolate", action="store_const", const=True,
                   default=None,
                   help="extend curves past the grid at the last "
                        "log-linear slope")
    p.add_argument("--out", help="analysis output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="pretty-print a report row")
    p.add_argument("report", help="report JSON file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
