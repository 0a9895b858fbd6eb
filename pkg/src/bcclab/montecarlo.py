"""Monte Carlo measurement of per-class block error rates.

Each frame draws fresh random information bits, encodes them per
segment, passes the modulated frame through the channel, decodes, and
counts three block error events: any secret information bit wrong, any
public information bit wrong, and their union as the frame event.

Determinism contract. Frame f of SNR point i owns a fixed span of a
counter-based stream keyed by (master_seed, i): 2n raw words per frame,
the first n feeding the channel (noise samples or flip draws) and the
next k feeding the message bits. Every frame's realization is therefore
a pure function of (config, point index, frame index). Stopping
decisions happen only at fixed round boundaries (round_frames per
round). Together these make results bit-identical across worker counts
and batch sizes; those two knobs are excluded from the config hash that
names result directories. Points checkpoint after every round and
resume exactly.
"""

import csv
import hashlib
import json
import math
import multiprocessing
import os
from dataclasses import dataclass

import numpy as np

from .channel import (bsc_llrs, frame_words, modulate_bpsk, noise_sigma2,
                      words_to_bits, words_to_normals, words_to_uniforms)
from .codec import Codec
from .secrecy import (TARGET_FRAME, TARGET_PUBLIC, TARGET_SECRET, TARGETS,
                      ErrorRateCurve)

RESULT_FORMAT = 1


@dataclass
class SimConfig:
    """Sweep definition: SNR grid, stop rules, seeds, and sizing.

    min_error_events may be a single int applied to every target or a
    dict per target ("frame", "public", "secret"); targets left out of
    the dict do not constrain stopping. A point stops at the first
    round boundary where every target met its quota, or at max_frames;
    with no quota at all (all zero) it runs the full max_frames.
    """
    gamma_db: tuple
    master_seed: int
    max_frames: int = 10_000_000
    min_error_events: object = 100
    max_iterations: int = 100
    round_frames: int = 2000
    batch_size: int = 1000
    worker_count: int = 1
    channel: dict = None

    def __post_init__(self):
        grid = tuple(float(g) for g in self.gamma_db)
        if not grid:
            raise ValueError("empty SNR grid")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        self.gamma_db = grid
        if self.max_frames < self.round_frames:
            raise ValueError("max_frames smaller than one round")
        if self.round_frames < 1 or self.batch_size < 1:
            raise ValueError("round_frames and batch_size must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.worker_count < 1:
            raise ValueError("worker_count must be positive")
        self.quotas()

    def quotas(self):
        """Stop quotas normalized to a per-target dict."""
        q = self.min_error_events
        if isinstance(q, int):
            if q < 1:
                raise ValueError("min_error_events must be at least 1")
            return {t: q for t in TARGETS}
        if not isinstance(q, dict) or not set(q) <= set(TARGETS) \
                or any(int(v) < 0 for v in q.values()):
            raise ValueError(f"bad min_error_events {q!r}")
        return {t: int(q.get(t, 0)) for t in TARGETS}


def describe_layout(layout):
    """Hash-stable description of a layout's codes and classes."""
    return {
        "scheme": layout.scheme,
        "codes": [code.content_hash() for code, _ in layout.segments],
        "n": layout.n,
        "k_s": layout.k_s,
        "k_p": layout.k_p,
    }


def config_payload(layout, config):
    """Everything that determines the numbers a sweep produces."""
    return {
        "format": RESULT_FORMAT,
        "layout": describe_layout(layout),
        "gamma_db": list(config.gamma_db),
        "master_seed": config.master_seed,
        "max_frames": config.max_frames,
        "min_error_events": config.quotas(),
        "max_iterations": config.max_iterations,
        "round_frames": config.round_frames,
        "channel": config.channel if config.channel else {"awgn": True},
    }


def config_hash(layout, config):
    blob = json.dumps(config_payload(layout, config), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class PointResult:
    """Tally for one SNR point.

    quota_met distinguishes a point that hit its error quotas from one
    that ran out of frame budget (low confidence). iterations is the
    total of decoder message-update rounds, for throughput accounting;
    it is deterministic like everything else here.
    """
    gamma_db: float
    point_index: int
    frames: int
    errors: dict
    complete: bool
    quota_met: bool = False
    iterations: int = 0

    def to_dict(self):
        return {"gamma_db": self.gamma_db, "point_index": self.point_index,
                "frames": self.frames, "errors": dict(self.errors),
                "complete": self.complete, "quota_met": self.quota_met,
                "iterations": self.iterations}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["gamma_db"]), int(d["point_index"]),
                   int(d["frames"]),
                   {t: int(d["errors"][t]) for t in TARGETS},
                   bool(d["complete"]), bool(d["quota_met"]),
                   int(d["iterations"]))


@dataclass
class SweepResult:
    """All point tallies of a sweep plus the hash that names them."""
    config_hash: str
    points: list
    out_dir: str = None

    def curves(self):
        done = [p for p in self.points if p.frames > 0]
        return {
            t: ErrorRateCurve(
                t,
                np.array([p.gamma_db for p in done]),
                np.array([p.errors[t] for p in done]),
                np.array([p.frames for p in done]))
            for t in TARGETS
        }


_WORKER = {}


def _init_worker(layout, config):
    _WORKER["layout"] = layout
    _WORKER["config"] = config
    _WORKER["codecs"] = [Codec(code) for code, _ in layout.segments]


def _simulate_slice(task):
    """Simulate frames [f0, f1) of one SNR point.

    Runs inside a worker (or the parent when single-process). Noise and
    message bits are fetched by absolute frame index, so slicing is
    invisible to the statistics. Returns (per-target error counts,
    decoder iteration total).
    """
    point_index, gamma_db, f0, f1 = task
    layout = _WORKER["layout"]
    config = _WORKER["config"]
    codecs = _WORKER["codecs"]
    n = layout.n
    k_total = sum(code.k for code, _ in layout.segments)
    counts = {t: 0 for t in TARGETS}
    iterations = 0
    for b0 in range(f0, f1, config.batch_size):
        b = min(config.batch_size, f1 - b0)
        words = frame_words(config.master_seed, point_index, b0, b, 2 * n)
        bits = words_to_bits(words[:, n:n + k_total])
        codeword = np.empty((b, n), np.uint8)
        seg_bits = []
        kpos = 0
        for codec, (code, off) in zip(codecs, layout.segments):
            sb = bits[:, kpos:kpos + code.k]
            kpos += code.k
            seg_bits.append(sb)
            codeword[:, off:off + code.n] = codec.encode_batch(sb)
        if config.channel and "flip" in config.channel:
            u = words_to_uniforms(words[:, :n])
            llr = bsc_llrs(codeword, config.channel["flip"], u)
        else:
            z = words_to_normals(words[:, :n])
            llr = np.empty((b, n), np.float64)
            for code, off in layout.segments:
                s2 = noise_sigma2(code.k / code.n, gamma_db)
                y = modulate_bpsk(codeword[:, off:off + code.n]) \
                    + math.sqrt(s2) * z[:, off:off + code.n]
                llr[:, off:off + code.n] = 2.0 * y / s2
        wrong = np.zeros((b, n), bool)
        for codec, (code, off), sb in zip(codecs, layout.segments,
                                          seg_bits):
            d, _, it = codec.decode_batch(llr[:, off:off + code.n],
                                          config.max_iterations)
            iterations += int(it.sum())
            wrong[:, off:off + code.k] = d[:, :code.k] != sb
        sec = wrong[:, layout.secret_cols].any(axis=1)
        pub = wrong[:, layout.public_cols].any(axis=1)
        counts[TARGET_SECRET] += int(sec.sum())
        counts[TARGET_PUBLIC] += int(pub.sum())
        counts[TARGET_FRAME] += int((sec | pub).sum())
    return counts, iterations


def _write_json(path, obj):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _round_tasks(point_index, gamma_db, f0, f1, workers):
    bounds = np.linspace(f0, f1, workers + 1).astype(np.int64)
    return [(point_index, gamma_db, int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_point(layout, gamma_db, config, point_index=0,
              checkpoint_path=None, pool=None):
    """Simulate one SNR point to its stop rule, checkpointing each round.

    Returns a PointResult. With a checkpoint file present, continues
    from the recorded round boundary and reproduces exactly what an
    uninterrupted run would have produced.
    """
    quotas = config.quotas()
    result = PointResult(float(gamma_db), point_index, 0,
                         {t: 0 for t in TARGETS}, False)
    if checkpoint_path and os.path.exists(checkpoint_path):
        with open(checkpoint_path) as fh:
            result = PointResult.from_dict(json.load(fh))
        if abs(result.gamma_db - gamma_db) > 1e-9 \
                or result.point_index != point_index:
            raise ValueError(f"checkpoint {checkpoint_path} belongs to a "
                             "different point")
        if result.complete:
            return result
        if result.frames % config.round_frames:
            raise ValueError(f"checkpoint {checkpoint_path} not at a "
                             "round boundary")
    if not pool:
        _init_worker(layout, config)
    workers = config.worker_count if pool else 1
    constrained = any(quotas[t] > 0 for t in TARGETS)
    while True:
        met = constrained and all(result.errors[t] >= quotas[t]
                                  for t in TARGETS)
        if met or result.frames >= config.max_frames:
            result.complete = True
            result.quota_met = met
            break
        f0 = result.frames
        f1 = min(f0 + config.round_frames, config.max_frames)
        tasks = _round_tasks(point_index, float(gamma_db), f0, f1, workers)
        if pool:
            parts = pool.map(_simulate_slice, tasks)
        else:
            parts = [_simulate_slice(t) for t in tasks]
        for counts, iterations in parts:
            for t in TARGETS:
                result.errors[t] += counts[t]
            result.iterations += iterations
        result.frames = f1
        for t in (TARGET_SECRET, TARGET_PUBLIC):
            assert result.errors[TARGET_FRAME] >= result.errors[t], \
                "frame events lost against class events"
        assert result.errors[TARGET_FRAME] <= result.frames
        if checkpoint_path:
            _write_json(checkpoint_path, result.to_dict())
    if checkpoint_path:
        _write_json(checkpoint_path, result.to_dict())
    return result


def run_sweep(layout, config, out_dir, extra_metadata=None,
              progress=None):
    """Simulate every grid point, resuming any existing checkpoints.

    Results land in out_dir/<config_hash>/ as config.json, one
    checkpoint per point, result.json with all tallies, and curves.csv.
    progress, if given, is called with each finished PointResult.
    """
    digest = config_hash(layout, config)
    run_dir = os.path.join(out_dir, digest)
    points_dir = os.path.join(run_dir, "points")
    os.makedirs(points_dir, exist_ok=True)
    payload = config_payload(layout, config)
    _write_json(os.path.join(run_dir, "config.json"), payload)
    pool = None
    if config.worker_count > 1:
        pool = multiprocessing.get_context("fork").Pool(
            config.worker_count, initializer=_init_worker,
            initargs=(layout, config))
    try:
        points = []
        for i, gamma in enumerate(config.gamma_db):
            path = os.path.join(points_dir, f"point_{i:03d}.json")
            points.append(run_point(layout, gamma, config, i, path, pool))
            if progress:
                progress(points[-1])
    finally:
        if pool:
            pool.close()
            pool.join()
    result = SweepResult(digest, points, run_dir)
    _write_json(os.path.join(run_dir, "result.json"),
                {"config": payload, "config_hash": digest,
                 "points": [p.to_dict() for p in points]})
    metadata = {
        "config_hash": digest,
        "master_seed": config.master_seed,
        "scheme": layout.scheme,
        "codes": " ".join(payload["layout"]["codes"]),
    }
    metadata.update(extra_metadata or {})
    write_curves_csv(os.path.join(run_dir, "curves.csv"), result.curves(),
                     metadata)
    return result


def write_curves_csv(path, curves, metadata=None):
    """Persist curves as rows of gamma_db, target, errors, frames, p_hat.

    Metadata key/value pairs go into '# key = value' comment lines
    ahead of the header.
    """
    rows = []
    for target in TARGETS:
        curve = curves.get(target)
        if curve is None:
            continue
        for g, e, f in zip(curve.gamma_db, curve.errors, curve.frames):
            rows.append((float(g), target, int(e), int(f)))
    rows.sort(key=lambda r: (r[0], TARGETS.index(r[1])))
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        for key in sorted(metadata or {}):
            fh.write(f"# {key} = {metadata[key]}\n")
        w = csv.writer(fh)
        w.writerow(["gamma_db", "target", "errors", "frames", "p_hat"])
        for g, target, e, f in rows:
            w.writerow([repr(g), target, e, f, repr(e / f)])
    os.replace(tmp, path)


def read_curves_csv(path):
    """Load a curves file; returns ({target: curve}, metadata dict)."""
    meta = {}
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            else:
                body.append(line)
    cols = {t: ([], [], []) for t in TARGETS}
    reader = csv.DictReader(body)
    need = {"gamma_db", "target", "errors", "frames", "p_hat"}
    if reader.fieldnames is None or not need <= set(reader.fieldnames):
        raise ValueError(f"{path} missing columns {need}")
    for row in reader:
        t = row["target"]
        if t not in cols:
            raise ValueError(f"unknown target {t!r} in {path}")
        cols[t][0].append(float(row["gamma_db"]))
        cols[t][1].append(int(row["errors"]))
        cols[t][2].append(int(row["frames"]))
    curves = {t: ErrorRateCurve(t, np.array(g), np.array(e), np.array(f))
              for t, (g, e, f) in cols.items() if g}
    return curves, meta


def merge_curve_sets(curve_sets):
    """Merge curves from several runs target by target."""
    merged = {}
    for curves in curve_sets:
        for t, curve in curves.items():
            merged[t] = curve if t not in merged else merged[t].merge(curve)
    return merged
