"""Systematic encoding over the zigzag structure and LLR sum-product
decoding (flooding schedule, tanh-rule check update, early termination).

The decoder works on batches of frames at once: messages live in
[edges, frames] float32 planes and the per-iteration work is a handful
of sparse matmuls and elementwise passes. Converged frames leave the
batch immediately. The tanh rule is evaluated in a log-domain form that
cannot produce NaNs in float32:

    a_e   = log tanh(|m_e|/2)   computed as log1p(-2 / (exp|m_e| + 1))
    S_e   = min(sum_check a - a_e, 0)
    |out| = -log tanh(-S_e/2)

with magnitudes clipped to [1e-6, 25] (the lower bound keeps exp|m|+1
away from exactly 2 in float32, whose log1p(-1) would be -inf).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

LLR_CLIP = 25.0
MAG_FLOOR = 1e-6
DEFAULT_MAX_ITERATIONS = 100
TRACE_MAX_N = 256


@dataclass
class DecodeResult:
    decision: np.ndarray          # length-n uint8 hard decisions
    converged: bool               # zero syndrome reached
    iterations_used: int          # message-update rounds performed


class Codec:
    """Precomputed sparse operators for one code; reusable across calls.

    One Codec per worker process; the underlying code is shared
    read-only and all mutable state is per-call scratch.
    """

    def __init__(self, code):
        self.code = code
        n, r, e = code.n, code.r, code.edge_count
        ev, ec = code.edge_var, code.edge_chk
        ones = np.ones(e, np.float32)
        ar = np.arange(e, dtype=np.int64)
        self.edge_var = ev
        self.edge_chk = ec
        self.scatter_var = sp.csr_matrix((ones, (ev, ar)), shape=(n, e))
        self.scatter_chk = sp.csr_matrix((ones, (ec, ar)), shape=(r, e))
        self.h = code.h_matrix()
        info = ev < code.k
        self.a_info = sp.csr_matrix(
            (np.ones(int(info.sum()), np.float32), (ec[info], ev[info])),
            shape=(r, code.k))

    def encode_batch(self, bits):
        """Encode [B, k] info bits into [B, n] codewords.

        Parity follows the zigzag recursion p_j = s_j xor p_{j-1} where
        s is the information-part syndrome, i.e. a running XOR down the
        dual diagonal; back-substitution collapses to a cumulative sum.
        """
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != self.code.k:
            raise ValueError(f"expected [B, {self.code.k}] bits")
        s = np.asarray(self.a_info @ bits.T.astype(np.float32))
        s = s.astype(np.int64) & 1
        p = np.cumsum(s, axis=0) & 1
        cw = np.empty((bits.shape[0], self.code.n), np.uint8)
        cw[:, :self.code.k] = bits
        cw[:, self.code.k:] = p.T
        return cw

    def decode_batch(self, llrs, max_iterations=DEFAULT_MAX_ITERATIONS,
                     trace=None):
        """Decode [B, n] channel LLRs.

        Returns (decisions [B, n] uint8, converged [B] bool,
        iterations [B] int32). iterations counts message-update rounds;
        0 means the raw channel decisions already satisfied the syndrome.
        trace collects per-iteration posterior LLRs (fixture-size codes,
        single frame only).
        """
        llrs = np.asarray(llrs, dtype=np.float32)
        if llrs.ndim != 2 or llrs.shape[1] != self.code.n:
            raise ValueError(f"expected [B, {self.code.n}] LLRs")
        keep_trace = (trace is not None and llrs.shape[0] == 1
                      and self.code.n <= TRACE_MAX_N)
        b0 = llrs.shape[0]
        ev, ec = self.edge_var, self.edge_chk
        llr = np.ascontiguousarray(llrs.T)
        np.clip(llr, -LLR_CLIP, LLR_CLIP, out=llr)
        decisions = np.zeros((b0, self.code.n), np.uint8)
        converged = np.zeros(b0, bool)
        iterations = np.full(b0, max_iterations, np.int32)
        active = np.arange(b0)
        msg_cv = np.zeros((self.code.edge_count, b0), np.float32)
        it = 0
        while True:
            post = llr if it == 0 else llr + (self.scatter_var @ msg_cv)
            if keep_trace:
                trace.append(np.array(post[:, 0], dtype=np.float64))
            hard = post < 0.0
            synd = np.asarray(self.h @ hard.astype(np.float32))
            bad_frame = ((synd.astype(np.int64) & 1) != 0).any(axis=0)
            done = ~bad_frame
            if done.any():
                idx = active[done]
                decisions[idx] = hard[:, done].T
                converged[idx] = True
                iterations[idx] = it
                if not bad_frame.any():
                    return decisions, converged, iterations
                llr = np.ascontiguousarray(llr[:, bad_frame])
                msg_cv = np.ascontiguousarray(msg_cv[:, bad_frame])
                post = post[:, bad_frame]
                active = active[bad_frame]
            if it == max_iterations:
                decisions[active] = (post < 0.0).T
                return decisions, converged, iterations
            it += 1
            t = post[ev]
            if it > 1:
                t -= msg_cv
            sgn = t < 0.0
            am = np.abs(t)
            np.clip(am, MAG_FLOOR, LLR_CLIP, out=am)
            np.exp(am, out=am)
            am += 1.0
            a = np.divide(-2.0, am, out=am)
            np.log1p(a, out=a)
            tot = self.scatter_chk @ a
            cnt = self.scatter_chk @ sgn.astype(np.float32)
            cpar = cnt.astype(np.int8) & 1
            s = tot[ec]
            s -= a
            np.minimum(s, 0.0, out=s)
            s *= -0.5
            np.tanh(s, out=s)
            np.maximum(s, np.float32(1e-38), out=s)
            np.log(s, out=s)
            s *= -1.0
            np.minimum(s, LLR_CLIP, out=s)
            flip = (cpar[ec] ^ sgn).astype(np.float32)
            flip *= -2.0
            flip += 1.0
            s *= flip
            msg_cv = s

    def decode(self, llrs, max_iterations=DEFAULT_MAX_ITERATIONS,
               trace=None):
        """Single-frame decode returning a DecodeResult."""
        llrs = np.asarray(llrs, dtype=np.float32).reshape(1, -1)
        d, c, i = self.decode_batch(llrs, max_iterations, trace=trace)
        result = DecodeResult(decision=d[0], converged=bool(c[0]),
                              iterations_used=int(i[0]))
        if result.converged:
            synd = np.asarray(self.h @ result.decision.astype(np.float32))
            assert not (synd.astype(np.int64) & 1).any(), \
                "converged decode left a nonzero syndrome"
        return result


def _codec_for(code):
    codec = getattr(code, "_codec", None)
    if codec is None:
        codec = Codec(code)
        code._codec = codec
    return codec


def encode(code, info):
    """Encode one length-k info vector into a length-n codeword."""
    info = np.asarray(info, dtype=np.uint8).reshape(1, -1)
    return _codec_for(code).encode_batch(info)[0]


def encode_batch(code, bits):
    return _codec_for(code).encode_batch(bits)


def decode_llr_spa(code, channel_llrs, max_iterations=DEFAULT_MAX_ITERATIONS,
                   trace=None):
    """Flooding-schedule sum-product decode of one frame."""
    return _codec_for(code).decode(channel_llrs, max_iterations, trace=trace)


def decode_llr_spa_batch(code, llrs, max_iterations=DEFAULT_MAX_ITERATIONS):
    return _codec_for(code).decode_batch(llrs, max_iterations)


def reference_decode(code, channel_llrs,
                     max_iterations=DEFAULT_MAX_ITERATIONS):
    """Textbook float64 sum-product decoder, loop-based, for fixtures.

    Same contract as decode_llr_spa; used to cross-check the batched
    float32 kernels on small codes.
    """
    col_adj = [a.tolist() for a in code.column_adjacency()]
    row_adj = [a.tolist() for a in code.row_adjacency()]
    llr = np.clip(np.asarray(channel_llrs, dtype=np.float64),
                  -LLR_CLIP, LLR_CLIP)
    msg_cv = {}
    msg_vc = {}
    for v in range(code.n):
        for c in col_adj[v]:
            msg_cv[c, v] = 0.0
            msg_vc[v, c] = llr[v]

    def hard_ok():
        hard = np.zeros(code.n, np.uint8)
        for v in range(code.n):
            total = llr[v] + sum(msg_cv[c, v] for c in col_adj[v])
            hard[v] = 1 if total < 0.0 else 0
        for c in range(code.r):
            if sum(int(hard[v]) for v in row_adj[c]) % 2:
                return hard, False
        return hard, True

    hard, ok = hard_ok()
    if ok:
        return DecodeResult(hard, True, 0)
    for it in range(1, max_iterations + 1):
        for c in range(code.r):
            vs = row_adj[c]
            ts = [np.tanh(np.clip(msg_vc[v, c], -LLR_CLIP, LLR_CLIP) / 2.0)
                  for v in vs]
            for i, v in enumerate(vs):
                prod = 1.0
                for j, t in enumerate(ts):
                    if j != i:
                        prod *= t
                prod = min(max(prod, -0.9999999999999998),
                           0.9999999999999998)
                msg_cv[c, v] = 2.0 * np.arctanh(prod)
        for v in range(code.n):
            for c in col_adj[v]:
                total = llr[v] + sum(msg_cv[c2, v] for c2 in col_adj[v]
                                     if c2 != c)
                msg_vc[v, c] = np.clip(total, -LLR_CLIP, LLR_CLIP)
        hard, ok = hard_ok()
        if ok:
            return DecodeResult(hard, True, it)
    return DecodeResult(hard, False, max_iterations)
