"""Frame layouts, error-rate curves, threshold extraction, and the
security bookkeeping that turns simulated curves into a feasibility
verdict.

Two protection schemes share one vocabulary. A frame carries k_s secret
and k_p public information bits; either both ride one codeword with
unequal protection (degree assignment decides which bits sit on
high-degree columns) or each class gets its own code and the frame is
the concatenation of the two codewords.

Thresholds come in two flavors on a per-target error curve P(gamma):

  reliability  smallest gamma with P <= delta       (decoder must work)
  security     largest gamma with P >= 1 - eta      (decoder must fail)

The security side is evaluated on blocks of L concatenated frames,
P^(L) = 1 - (1 - P)^L, which trades a longer message for a smaller
per-frame failure requirement. A scheme is feasible when the secret
message is still safe at the SNR where the public message becomes
reliable, alpha_s >= beta_p, and the security gap beta_s - alpha_s
measures how much extra SNR the legitimate receiver needs.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

UEP_SINGLE_CODE = "uep_single_code"
TWO_CODES = "two_codes"
SCHEMES = (UEP_SINGLE_CODE, TWO_CODES)

TARGET_FRAME = "frame"
TARGET_PUBLIC = "public"
TARGET_SECRET = "secret"
TARGETS = (TARGET_FRAME, TARGET_PUBLIC, TARGET_SECRET)

ZERO_ERROR_RULE = 3.0          # 95-ish percent upper bound numerator
GAMMA_MATCH_TOL = 1e-9


@dataclass(eq=False)
class FrameLayout:
    """How one transmitted frame maps onto codes and message classes.

    segments is a tuple of (code, offset) pairs giving the codeword
    spans of the frame; secret_cols and public_cols are frame column
    indices of the two information classes.
    """
    scheme: str
    segments: tuple
    secret_cols: np.ndarray
    public_cols: np.ndarray

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.secret_cols = np.asarray(self.secret_cols, dtype=np.int64)
        self.public_cols = np.asarray(self.public_cols, dtype=np.int64)
        off = 0
        for code, offset in self.segments:
            if offset != off:
                raise ValueError("segments must tile the frame in order")
            off += code.n
        if np.intersect1d(self.secret_cols, self.public_cols).size:
            raise ValueError("secret and public columns overlap")
        cols = np.concatenate([self.secret_cols, self.public_cols])
        if cols.size and (cols.min() < 0 or cols.max() >= off):
            raise ValueError("class columns outside the frame")

    @property
    def n(self):
        return sum(code.n for code, _ in self.segments)

    @property
    def k_s(self):
        return int(self.secret_cols.size)

    @property
    def k_p(self):
        return int(self.public_cols.size)

    @property
    def k(self):
        return self.k_s + self.k_p

    @property
    def overall_rate(self):
        return Fraction(self.k, self.n)

    @property
    def secrecy_rate(self):
        return Fraction(self.k_s, self.n)


def layout_for_uep(code):
    """Layout for one codeword carrying both classes via its degree map.

    The public message rides the strongly protected high-degree columns
    (PC1) so both receivers decode it early; the secret message sits on
    the weak low-degree columns (PC2) and stays undecodable until the
    SNR is well above the public threshold.
    """
    if code.class_map is None:
        raise ValueError("code has no protection-class assignment")
    return FrameLayout(
        scheme=UEP_SINGLE_CODE,
        segments=((code, 0),),
        secret_cols=code.class_columns("PC2"),
        public_cols=code.class_columns("PC1"))


def layout_for_two_codes(secret_code, public_code):
    """Layout for a secret codeword followed by a public codeword."""
    if secret_code.n != public_code.n:
        raise ValueError("the two codes must split the frame evenly")
    return FrameLayout(
        scheme=TWO_CODES,
        segments=((secret_code, 0), (public_code, secret_code.n)),
        secret_cols=np.arange(secret_code.k, dtype=np.int64),
        public_cols=secret_code.n + np.arange(public_code.k, dtype=np.int64))


@dataclass(eq=False)
class ErrorRateCurve:
    """Monte Carlo error counts for one target across an SNR grid."""
    target: str
    gamma_db: np.ndarray
    errors: np.ndarray
    frames: np.ndarray

    def __post_init__(self):
        self.gamma_db = np.asarray(self.gamma_db, dtype=np.float64)
        self.errors = np.asarray(self.errors, dtype=np.int64)
        self.frames = np.asarray(self.frames, dtype=np.int64)
        if not (self.gamma_db.shape == self.errors.shape
                == self.frames.shape) or self.gamma_db.ndim != 1:
            raise ValueError("curve arrays must be equal-length vectors")
        if (self.frames <= 0).any():
            raise ValueError("every point needs at least one frame")
        if ((self.errors < 0) | (self.errors > self.frames)).any():
            raise ValueError("error counts outside [0, frames]")
        order = np.argsort(self.gamma_db, kind="stable")
        self.gamma_db = self.gamma_db[order]
        self.errors = self.errors[order]
        self.frames = self.frames[order]
        if self.gamma_db.size > 1:
            gaps = np.diff(self.gamma_db)
            if (gaps < GAMMA_MATCH_TOL).any():
                raise ValueError("duplicate SNR points in one curve")

    @property
    def p_hat(self):
        return self.errors / self.frames

    def merge(self, other):
        """Combine two measurement sets for the same target.

        Points are independent runs, not mergeable tallies: when both
        curves measured the same SNR, the estimate backed by more
        frames wins.
        """
        if other.target != self.target:
            raise ValueError("cannot merge curves for different targets")
        g = list(self.gamma_db)
        e = list(self.errors)
        f = list(self.frames)
        for gj, ej, fj in zip(other.gamma_db, other.errors, other.frames):
            hit = [i for i, gi in enumerate(g)
                   if abs(gi - gj) < GAMMA_MATCH_TOL]
            if hit:
                i = hit[0]
                if fj > f[i]:
                    e[i], f[i] = ej, fj
            else:
                g.append(gj)
                e.append(ej)
                f.append(fj)
        return ErrorRateCurve(self.target, np.array(g), np.array(e),
                              np.array(f))


def validate_levels(delta, eta):
    """Reject level pairs that break the threshold ordering.

    The reliability level delta must sit strictly below the security
    level 1 - eta, otherwise "reliable" and "confused" overlap and no
    curve can separate them.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta {delta} outside (0, 1)")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta {eta} outside (0, 1)")
    if delta >= 1.0 - eta:
        raise ValueError("reliability level must sit below the "
                         "security level")


@dataclass(frozen=True)
class SecurityThresholds:
    """The three SNR thresholds of one scheme at levels (delta, eta, L)."""
    beta_p_db: float
    beta_s_db: float
    alpha_s_db: float
    delta: float = 1e-4
    eta: float = 0.1
    L: int = 1

    def __post_init__(self):
        validate_levels(self.delta, self.eta)
        if self.L < 1:
            raise ValueError(f"block length {self.L} below 1")


def concatenated_bler(p, length):
    """Error probability of a block of `length` independent frames.

    Computed as -expm1(length * log1p(-p)) so tiny p survive in float.
    """
    p = np.asarray(p, dtype=np.float64)
    if (p < 0).any() or (p > 1).any():
        raise ValueError("probabilities outside [0, 1]")
    if length < 1 or length != int(length):
        raise ValueError(f"block length {length} not a positive integer")
    with np.errstate(divide="ignore"):
        out = -np.expm1(length * np.log1p(-p))
    return out if out.ndim else float(out)


@dataclass
class ThresholdEstimate:
    """Interpolated SNR threshold plus how trustworthy it is."""
    gamma_db: float
    level: float
    side: str
    status: str                  # interpolated | all_below | all_above
    flags: tuple = ()


def _pool_nonincreasing(p, weights):
    """Weighted pool-adjacent-violators onto a non-increasing sequence."""
    blocks = []
    for pi, wi in zip(p, weights):
        blocks.append([pi, wi, 1])
        while len(blocks) > 1 and blocks[-2][0] < blocks[-1][0]:
            v, w, c = blocks.pop()
            v0, w0, c0 = blocks[-1]
            blocks[-1] = [(v0 * w0 + v * w) / (w0 + w), w0 + w, c0 + c]
    out = np.empty(len(p))
    i = 0
    for v, _, c in blocks:
        out[i:i + c] = v
        i += c
    return out


def cleaned_probabilities(curve):
    """Per-point estimates made monotone and zero-safe.

    Zero-error points are replaced by the 3/frames upper bound, then
    adjacent violators of monotone decay are pooled (frame-weighted).
    Returns (p, flags).
    """
    flags = []
    p = curve.p_hat.copy()
    zero = curve.errors == 0
    if zero.any():
        p[zero] = ZERO_ERROR_RULE / curve.frames[zero]
        flags.append("zero_error_bound")
    pooled = _pool_nonincreasing(p, curve.frames.astype(np.float64))
    if np.max(np.abs(pooled - p)) > 1e-12:
        flags.append("isotonic_adjusted")
    return np.minimum(pooled, 1.0), tuple(flags)


def extract_threshold(curve, level, side="reliability", block_length=1,
                      extrapolate=False):
    """SNR where the (optionally L-blocked) curve crosses `level`.

    side picks the convention: "reliability" reads the result as the
    smallest SNR with P <= level, "security" as the largest SNR with
    P >= level. Both interpolate the crossing linearly in log10(P).
    A level the curve never reaches yields the nearest grid edge with
    status "all_below"/"all_above"; extrapolate=True instead extends
    the final log-linear segment past the grid (status "extrapolated")
    for shallow runs that stop above the reliability level.
    """
    if side not in ("reliability", "security"):
        raise ValueError(f"unknown side {side!r}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level {level} outside (0, 1)")
    p, flags = cleaned_probabilities(curve)
    p = np.asarray(concatenated_bler(p, block_length), dtype=np.float64)
    g = curve.gamma_db
    if p[0] < level:
        return ThresholdEstimate(float(g[0]), level, side, "all_below",
                                 flags)
    if p[-1] > level:
        distinct = np.nonzero(p > p[-1])[0]
        if extrapolate and distinct.size:
            j = int(distinct[-1])
            slope = (g[-1] - g[j]) / (math.log10(p[-1]) - math.log10(p[j]))
            gamma = g[-1] + slope * (math.log10(level) - math.log10(p[-1]))
            return ThresholdEstimate(float(gamma), level, side,
                                     "extrapolated", flags)
        return ThresholdEstimate(float(g[-1]), level, side, "all_above",
                                 flags)
    above = p >= level
    if above.all():
        # last point sits exactly on the level
        return ThresholdEstimate(float(g[-1]), level, side,
                                 "interpolated", flags)
    # pooled curve is non-increasing, so `above` is a prefix
    j = int(np.min(np.nonzero(~above)[0]))
    i = j - 1
    if p[i] == p[j]:
        gamma = float(g[i] if side == "reliability" else g[j])
    else:
        t = (math.log10(level) - math.log10(p[i])) \
            / (math.log10(p[j]) - math.log10(p[i]))
        gamma = float(g[i] + t * (g[j] - g[i]))
    return ThresholdEstimate(gamma, level, side, "interpolated", flags)


def security_level(eta, length):
    """Per-frame failure probability required for L-block security.

    P^(L) >= 1 - eta is equivalent to P >= 1 - eta**(1/L).
    """
    return 1.0 - eta ** (1.0 / length)


def security_gap(thresholds):
    """dB distance between reliable decoding and guaranteed confusion."""
    return thresholds.beta_s_db - thresholds.alpha_s_db


def compute_thresholds(public_curve, secret_curve, delta=1e-4, eta=0.1,
                       length=1, extrapolate=False):
    """All three thresholds at block length L.

    beta_p comes from the public curve at delta; beta_s from the
    L-blocked secret curve at delta (the legitimate receiver decodes
    whole L-blocks too); alpha_s from the L-blocked secret curve at
    1 - eta, which is the same as the per-frame curve at
    1 - eta**(1/L). Returns (SecurityThresholds, estimates dict) where
    the estimates carry interpolation statuses worth surfacing.
    """
    validate_levels(delta, eta)
    beta_p = extract_threshold(public_curve, delta, "reliability",
                               extrapolate=extrapolate)
    beta_s = extract_threshold(secret_curve, delta, "reliability",
                               block_length=length,
                               extrapolate=extrapolate)
    alpha_s = extract_threshold(secret_curve, security_level(eta, length),
                                "security")
    bundle = SecurityThresholds(beta_p.gamma_db, beta_s.gamma_db,
                                alpha_s.gamma_db, delta, eta, length)
    return bundle, {"beta_p": beta_p, "beta_s": beta_s, "alpha_s": alpha_s}


def min_feasible_L(secret_curve, public_curve, delta=1e-4, eta=0.1,
                   l_max=10_000, extrapolate=False):
    """Smallest block length L making the scheme feasible.

    Feasible means alpha_s(L) >= beta_p. Growing L lowers the per-frame
    failure level the secret curve must reach, moving alpha_s right, so
    feasibility is monotone in L and binary search applies. Returns
    (L, thresholds at L); an infeasible search returns (None,
    thresholds at l_max) whose margin shows the remaining deficit.
    """
    validate_levels(delta, eta)
    beta_p = extract_threshold(public_curve, delta, "reliability",
                               extrapolate=extrapolate)

    def feasible(length):
        alpha = extract_threshold(secret_curve,
                                  security_level(eta, length), "security")
        return alpha.gamma_db >= beta_p.gamma_db - 1e-12

    found = None
    if feasible(l_max):
        lo, hi = 1, l_max
        while lo < hi:
            mid = (lo + hi) // 2
            if feasible(mid):
                hi = mid
            else:
                lo = mid + 1
        found = lo
    bundle, _ = compute_thresholds(public_curve, secret_curve, delta, eta,
                                   found if found else l_max, extrapolate)
    return found, bundle


@dataclass
class SecurityReport:
    """Feasibility verdict for one scheme instance.

    The verdict and the gap are live properties of the threshold
    bundle, so the JSON form can never drift from its inputs.
    """
    scheme: str
    n: int
    thresholds: SecurityThresholds

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def feasible(self):
        t = self.thresholds
        return bool(t.alpha_s_db >= t.beta_p_db - 1e-12)

    @property
    def security_gap_db(self):
        return security_gap(self.thresholds)

    @property
    def margin_db(self):
        return self.thresholds.alpha_s_db - self.thresholds.beta_p_db

    def to_dict(self):
        t = self.thresholds
        return {
            "scheme": self.scheme,
            "n": self.n,
            "L": t.L,
            "beta_p_db": t.beta_p_db,
            "alpha_s_db": t.alpha_s_db,
            "beta_s_db": t.beta_s_db,
            "security_gap_db": self.security_gap_db,
            "feasible": self.feasible,
            "delta": t.delta,
            "eta": t.eta,
            "margin_db": self.margin_db,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d):
        bundle = SecurityThresholds(
            beta_p_db=float(d["beta_p_db"]), beta_s_db=float(d["beta_s_db"]),
            alpha_s_db=float(d["alpha_s_db"]), delta=float(d["delta"]),
            eta=float(d["eta"]), L=int(d["L"]))
        report = cls(scheme=d["scheme"], n=int(d["n"]), thresholds=bundle)
        for key in ("security_gap_db", "margin_db"):
            if abs(d[key] - getattr(report, key)) > 1e-9:
                raise ValueError(f"report field {key} inconsistent with "
                                 "its thresholds")
        if bool(d["feasible"]) != report.feasible:
            raise ValueError("report feasibility inconsistent with its "
                             "thresholds")
        return report


def build_security_report(public_curve, secret_curve, scheme, n,
                          delta=1e-4, eta=0.1, l_max=10_000,
                          extrapolate=False):
    """Search L and assemble the report from measured curves.

    Returns (report, estimates dict). An infeasible scheme reports at
    l_max with feasible=false; the margin field carries the deficit.
    """
    found, _ = min_feasible_L(secret_curve, public_curve, delta, eta,
                              l_max, extrapolate)
    bundle, estimates = compute_thresholds(
        public_curve, secret_curve, delta, eta,
        found if found else l_max, extrapolate)
    return SecurityReport(scheme=scheme, n=n, thresholds=bundle), estimates


@dataclass(eq=False)
class Scrambler:
    """Invertible GF(2) map that spreads single-bit errors blockwide.

    Built as a product of unit-triangular factors with random
    off-diagonal fill, so it is always invertible and a one-bit input
    difference lands on roughly half the output bits.
    """
    size: int
    seed: int
    matrix: np.ndarray = field(repr=False)
    _inverse: np.ndarray = field(default=None, repr=False)

    @property
    def inverse(self):
        if self._inverse is None:
            self._inverse = _gf2_inverse(self.matrix)
        return self._inverse


def _gf2_matmul(a, b):
    prod = a.astype(np.float32) @ b.astype(np.float32)
    return (prod.astype(np.int64) & 1).astype(np.uint8)


def _gf2_inverse(matrix):
    """Gauss-Jordan inverse over GF(2)."""
    k = matrix.shape[0]
    work = np.concatenate([matrix.astype(np.uint8) & 1,
                           np.eye(k, dtype=np.uint8)], axis=1)
    for col in range(k):
        pivots = np.nonzero(work[col:, col])[0]
        if pivots.size == 0:
            raise ValueError("matrix is singular over GF(2)")
        pivot = col + int(pivots[0])
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        hits = np.nonzero(work[:, col])[0]
        hits = hits[hits != col]
        work[hits] ^= work[col]
    return work[:, k:].copy()


def build_scrambler(size, seed):
    """Random invertible GF(2) scrambler of the given block size."""
    if size < 1:
        raise ValueError("scrambler needs a positive block size")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lo = np.tril(rng.integers(0, 2, (size, size), dtype=np.uint8), -1)
    up = np.triu(rng.integers(0, 2, (size, size), dtype=np.uint8), 1)
    eye = np.eye(size, dtype=np.uint8)
    matrix = _gf2_matmul((eye + lo) & 1, (eye + up) & 1)
    return Scrambler(size=size, seed=seed, matrix=matrix)


def scramble(scrambler, bits):
    """Apply the scrambler to [..., size] bit arrays."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] != scrambler.size:
        raise ValueError(f"expected trailing dimension {scrambler.size}")
    return (bits @ scrambler.matrix.T.astype(np.int64) & 1).astype(np.uint8)


def descramble(scrambler, bits):
    """Undo the scrambler; exact inverse of scramble."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] != scrambler.size:
        raise ValueError(f"expected trailing dimension {scrambler.size}")
    return (bits @ scrambler.inverse.T.astype(np.int64) & 1).astype(np.uint8)
