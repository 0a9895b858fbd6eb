"""Parity-check matrix construction: zigzag redundancy part plus
degree-constrained progressive edge placement for the information part,
protection-class assignment, alist serialization, and girth diagnostics.

Matrix layout: columns 0..k-1 are information columns ordered by
descending target degree, columns k..n-1 are the redundancy columns.
Redundancy column j has ones in rows j and j+1 (the last one only in
row r-1), so the redundancy submatrix is unit-lower-bidiagonal: always
full rank and back-substitution-encodable.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .degrees import EnsembleSpec, parse_pairs, NODE, VARIABLE, CHECK

PC1 = "PC1"
PC2 = "PC2"
PC3 = "PC3"

RETRY_BUDGET = 32          # re-seeds after the first attempt
MIN_INFO_GIRTH = 6         # target girth among information columns
MIN_SPAN_WEIGHT = 9        # smallest tolerated chain-span codeword weight


class ConstructionError(Exception):
    """Unsatisfiable degree demands or exhausted retry budget."""


@dataclass
class BuildReport:
    attempts: int
    girth: int
    min_span_weight: int
    seed_trail: list


class LdpcCode:
    """A built code: edge list, dimensions, protection classes.

    Immutable by convention; the arrays are not to be modified after
    construction. class_map is an array of 'PC1'/'PC2'/'PC3' labels or
    None for codes parsed without a sidecar.
    """

    def __init__(self, n, r, edge_var, edge_chk, class_map=None, seed=None,
                 spec=None, report=None):
        edge_var = np.asarray(edge_var, dtype=np.int64)
        edge_chk = np.asarray(edge_chk, dtype=np.int64)
        if edge_var.shape != edge_chk.shape or edge_var.ndim != 1:
            raise ValueError("edge arrays must be 1-d and equally long")
        if edge_var.size and (edge_var.min() < 0 or edge_var.max() >= n):
            raise ValueError("column index out of range")
        if edge_chk.size and (edge_chk.min() < 0 or edge_chk.max() >= r):
            raise ValueError("row index out of range")
        order = np.lexsort((edge_chk, edge_var))
        self.n = int(n)
        self.r = int(r)
        self.k = self.n - self.r
        self.edge_var = edge_var[order]
        self.edge_chk = edge_chk[order]
        pairs = self.edge_var * r + self.edge_chk
        if np.unique(pairs).size != pairs.size:
            raise ValueError("duplicate edges")
        self.class_map = None if class_map is None else np.asarray(class_map)
        self.seed = seed
        self.spec = spec
        self.report = report
        self._h = None

    @property
    def edge_count(self):
        return self.edge_var.size

    def column_degrees(self):
        return np.bincount(self.edge_var, minlength=self.n)

    def row_degrees(self):
        return np.bincount(self.edge_chk, minlength=self.r)

    def column_adjacency(self):
        """List of sorted check-row indices per column."""
        return np.split(self.edge_chk, np.searchsorted(
            self.edge_var, np.arange(1, self.n)))

    def row_adjacency(self):
        """List of sorted column indices per check row."""
        order = np.lexsort((self.edge_var, self.edge_chk))
        return np.split(self.edge_var[order], np.searchsorted(
            self.edge_chk[order], np.arange(1, self.r)))

    def h_matrix(self):
        """Parity-check matrix as a float32 scipy CSR (cached)."""
        if self._h is None:
            import scipy.sparse as sp
            self._h = sp.csr_matrix(
                (np.ones(self.edge_count, np.float32),
                 (self.edge_chk, self.edge_var)),
                shape=(self.r, self.n))
        return self._h

    def class_columns(self, label):
        if self.class_map is None:
            raise ValueError("code has no class map")
        return np.flatnonzero(self.class_map == label)

    @property
    def k1(self):
        return int(np.count_nonzero(self.class_map == PC1))

    @property
    def k2(self):
        return int(np.count_nonzero(self.class_map == PC2))

    def content_hash(self):
        """Hex digest identifying the matrix and class map."""
        h = hashlib.sha256()
        h.update(f"{self.n},{self.r};".encode())
        h.update(self.edge_var.astype("<i8").tobytes())
        h.update(self.edge_chk.astype("<i8").tobytes())
        if self.class_map is not None:
            h.update("".join(self.class_map.tolist()).encode())
        return h.hexdigest()[:16]


def integerize_node_counts(variable_dist, n):
    """Largest-remainder apportionment of n nodes over the degree classes."""
    degs = variable_dist.degrees
    raw = np.array([variable_dist.coefficients[d] * n for d in degs])
    counts = np.floor(raw).astype(int)
    shortfall = n - int(counts.sum())
    by_frac = np.argsort(-(raw - np.floor(raw)), kind="stable")
    for i in by_frac[:shortfall]:
        counts[i] += 1
    return {d: int(c) for d, c in zip(degs, counts)}


def information_degree_targets(variable_dist, n, r):
    """Per-column target degrees for the k information columns, descending.

    The r redundancy columns consume the node budget of the lowest degree
    classes first (they are the structural degree-2/1 columns); whatever
    remains is the information-column histogram.
    """
    counts = integerize_node_counts(variable_dist, n)
    deficit = r
    for d in sorted(counts):
        take = min(counts[d], deficit)
        counts[d] -= take
        deficit -= take
        if deficit == 0:
            break
    if deficit:
        raise ConstructionError("rate too low: redundancy columns outnumber "
                                "the node budget")
    targets = []
    for d in sorted(counts, reverse=True):
        targets.extend([d] * counts[d])
    return targets


def _place_edges_random(targets, n, r, k, check_targets, rng):
    """Zigzag parity chain plus degree-constrained uniform-random
    placement of the information columns.

    check_targets lists the total degree wanted per check (chain edges
    included); the assignment of targets to rows is shuffled. Each
    information column draws its checks without replacement, weighted
    by remaining free sockets, so the realized check histogram equals
    the target histogram whenever placement completes. Returns
    (edge_var, edge_chk) arrays.
    """
    check_targets = np.asarray(check_targets, dtype=np.int64)
    if check_targets.size != r:
        raise ConstructionError("check target list does not cover r rows")
    row_target = rng.permutation(check_targets)
    chain = np.full(r, 2, dtype=np.int64)
    chain[0] = 1
    free = row_target - chain
    if free.min() < 0:
        raise ConstructionError("check degree target below chain demand")
    info_edges = int(sum(targets))
    if int(free.sum()) != info_edges:
        raise ConstructionError(
            f"check sockets {int(free.sum())} != info edges {info_edges}")

    edge_var = np.empty(info_edges + 2 * r - 1, dtype=np.int64)
    edge_chk = np.empty_like(edge_var)
    pos = 0
    for j in range(r):
        edge_var[pos], edge_chk[pos] = k + j, j
        pos += 1
        if j < r - 1:
            edge_var[pos], edge_chk[pos] = k + j, j + 1
            pos += 1
    for v in range(k):
        d = targets[v]
        avail = np.flatnonzero(free)
        if avail.size < d:
            raise ConstructionError(
                f"column {v} needs {d} distinct checks, {avail.size} open")
        weights = free[avail] / free[avail].sum()
        picks = rng.choice(avail, size=d, replace=False, p=weights)
        free[picks] -= 1
        edge_var[pos:pos + d] = v
        edge_chk[pos:pos + d] = picks
        pos += d
    return edge_var, edge_chk


def _place_edges(targets, n, r, k, max_check_degree, rng):
    """Grow the Tanner graph: zigzag parity chain, then one information
    column at a time, each edge to a check that maximizes local tree depth.
    Ties break to the lowest current check degree, then a seeded-random
    member. Returns (edge_var, edge_chk) arrays."""
    max_vd = max(targets)
    chk_nbr = np.full((r, max_check_degree), -1, dtype=np.int32)
    chk_deg = np.zeros(r, dtype=np.int32)
    var_nbr = np.full((n, max_vd + 2), -1, dtype=np.int32)
    var_deg = np.zeros(n, dtype=np.int32)

    def add_edge(v, c):
        if chk_deg[c] >= max_check_degree:
            raise ConstructionError("check socket overflow")
        var_nbr[v, var_deg[v]] = c
        var_deg[v] += 1
        chk_nbr[c, chk_deg[c]] = v
        chk_deg[c] += 1

    for j in range(r):
        add_edge(k + j, j)
        if j < r - 1:
            add_edge(k + j, j + 1)

    depth_cap = 2 * MIN_INFO_GIRTH
    vmask = np.zeros(n, dtype=bool)
    cmask = np.zeros(r, dtype=bool)
    for v in range(k):
        for _ in range(targets[v]):
            vmask[:] = False
            cmask[:] = False
            vmask[v] = True
            frontier = np.array([v], dtype=np.int32)
            deepest = None
            depth = 0
            while depth < depth_cap:
                nb = var_nbr[frontier, :]
                cs = nb[nb >= 0]
                new_c = cs[~cmask[cs]]
                if new_c.size == 0:
                    break
                new_c = np.unique(new_c)
                cmask[new_c] = True
                deepest = new_c
                nb2 = chk_nbr[new_c, :]
                vs = nb2[nb2 >= 0]
                new_v = np.unique(vs[~vmask[vs]])
                depth += 1
                if new_v.size == 0:
                    break
                vmask[new_v] = True
                frontier = new_v
            unreached = np.flatnonzero(~cmask)
            cands = unreached if unreached.size else deepest
            if cands is None or cands.size == 0:
                raise ConstructionError(f"no candidate check for column {v}")
            own = var_nbr[v, :var_deg[v]]
            cands = cands[~np.isin(cands, own)]
            if cands.size == 0:
                raise ConstructionError(
                    f"column {v} demands more distinct checks than reachable")
            dsel = chk_deg[cands]
            lo = cands[dsel == dsel.min()]
            best = lo[0] if lo.size == 1 else lo[rng.integers(lo.size)]
            add_edge(v, int(best))

    total = int(var_deg.sum())
    edge_var = np.empty(total, dtype=np.int64)
    edge_chk = np.empty(total, dtype=np.int64)
    pos = 0
    for v in range(n):
        d = var_deg[v]
        edge_var[pos:pos + d] = v
        edge_chk[pos:pos + d] = var_nbr[v, :d]
        pos += d
    return edge_var, edge_chk


def chain_span_weights(code):
    """Codeword weights implied by chain spans.

    Flipping one information column flips the parity bits on the runs
    between consecutive checks of that column, giving a codeword of weight
    1 + sum of run lengths; same for the symmetric difference of two
    degree-3 columns. Returns (per-column weights, minimum pair weight).
    Pairs above 6 toggle positions cannot go below weight 9 and are skipped.
    """
    k, r = code.k, code.r
    adj = code.column_adjacency()
    singles = np.empty(k, dtype=np.int64)
    for v in range(k):
        cs = np.sort(adj[v])
        w = 1 + int(cs[1::2][:cs.size // 2].sum() - cs[0::2][:cs.size // 2].sum())
        if cs.size % 2:
            w += r - int(cs[-1])
        singles[v] = w
    deg3 = [v for v in range(k) if adj[v].size == 3]
    best_pair = np.iinfo(np.int64).max
    if len(deg3) >= 2:
        tri = np.sort(np.stack([np.sort(adj[v]) for v in deg3]), axis=1)
        i, j = np.triu_indices(len(deg3), k=1)
        toggles = np.sort(np.concatenate([tri[i], tri[j]], axis=1), axis=1)
        gaps = toggles[:, 1::2] - toggles[:, 0::2]
        w = 2 + gaps.sum(axis=1)
        shared = (np.diff(toggles, axis=1) == 0)
        clean = ~shared.any(axis=1)
        if clean.any():
            best_pair = int(w[clean].min())
        if (~clean).any():
            # shared checks cancel; recompute those few pairs exactly
            for idx in np.flatnonzero(~clean):
                a = set(tri[i[idx]].tolist())
                b = set(tri[j[idx]].tolist())
                t = sorted(a ^ b)
                if not t:
                    best_pair = min(best_pair, 2)
                    continue
                wt = 2 + sum(t[x + 1] - t[x] for x in range(0, len(t) - 1, 2))
                if len(t) % 2:
                    wt += r - t[-1]
                best_pair = min(best_pair, wt)
    return singles, best_pair


def girth(code, roots=None):
    """Length of the shortest cycle in the Tanner graph, 0 for a forest.

    BFS with parent-edge tracking from each root column; any shortest
    cycle passes through an information column (the redundancy chain is
    a path), so rooting at the information columns is exhaustive for a
    zigzag code. Pass roots=range(n) for arbitrary matrices.
    """
    col_adj = [a.tolist() for a in code.column_adjacency()]
    row_adj = [a.tolist() for a in code.row_adjacency()]
    if roots is None:
        # for a zigzag code every cycle passes through an information
        # column (the redundancy chain is a path); for arbitrary parsed
        # matrices fall back to all columns
        roots = range(code.k) if code.class_map is not None else range(code.n)
    best = 0
    for v in roots:
        distv = {v: 0}
        distc = {}
        pv = {v: -1}
        pc = {}
        frontier = [v]
        depth = 0
        while frontier and (best == 0 or 2 * depth < best):
            nxt = []
            for x in frontier:
                for c in col_adj[x]:
                    if c == pv[x]:
                        continue
                    if c in distc:
                        cyc = distv[x] + distc[c] + 1
                        if best == 0 or cyc < best:
                            best = cyc
                    else:
                        distc[c] = distv[x] + 1
                        pc[c] = x
                        nxt.append(c)
            depth += 1
            if best and 2 * depth >= best:
                break
            frontier = []
            for c in nxt:
                for y in row_adj[c]:
                    if y == pc[c]:
                        continue
                    if y in distv:
                        cyc = distc[c] + distv[y] + 1
                        if best == 0 or cyc < best:
                            best = cyc
                    else:
                        distv[y] = distc[c] + 1
                        pv[y] = c
                        frontier.append(y)
            depth += 1
    return best


def assign_protection_classes(code, k1_fraction):
    """Label columns PC1/PC2/PC3.

    PC1 = the k1 = round(k1_fraction * k) information columns of highest
    degree, ties broken by ascending column index; PC2 = the remaining
    information columns; PC3 = the redundancy columns.
    """
    if not 0.0 < k1_fraction < 1.0:
        raise ValueError(f"k1_fraction {k1_fraction!r} outside (0, 1)")
    k = code.k
    k1 = int(round(k1_fraction * k))
    if k1 < 1 or k1 >= k:
        raise ValueError("k1_fraction leaves an empty protection class")
    deg = code.column_degrees()[:k]
    order = np.lexsort((np.arange(k), -deg))
    class_map = np.array([PC2] * k + [PC3] * code.r, dtype="<U3")
    class_map[order[:k1]] = PC1
    return class_map


def check_degree_targets(spec, info_targets):
    """Per-row degree targets realizing the concentrated check
    distribution, reconciled to the variable-side edge budget.

    The variable- and check-side integerizations need not agree on the
    edge total, so the few leftover sockets are spread one per row:
    deficits bump the smallest rows, excess sheds from the largest
    (never below the zigzag chain demand of 2).
    """
    r = spec.r
    counts = integerize_node_counts(spec.check_dist, r)
    chk_targets = np.array([d for d in sorted(counts)
                            for _ in range(counts[d])])
    need = sum(info_targets) + 2 * r - 1
    while chk_targets.sum() < need:
        m = need - int(chk_targets.sum())
        chk_targets[np.argsort(chk_targets, kind="stable")[:m]] += 1
    while chk_targets.sum() > need:
        m = int(chk_targets.sum()) - need
        order = np.argsort(-chk_targets, kind="stable")
        drop = order[chk_targets[order] > 2][:m]
        if drop.size == 0:
            raise ConstructionError("cannot shed excess check sockets")
        chk_targets[drop] -= 1
    return chk_targets


def build_zigzag_random(spec, pc1_fraction, seed, placement="random"):
    """Build an LdpcCode realizing spec with the zigzag-random construction.

    Deterministic for fixed (spec, pc1_fraction, seed, placement);
    pc1_fraction None skips the protection-class assignment. Each attempt
    uses a seed derived from the master seed. placement picks how the
    information columns connect:

    - "random": checks drawn uniformly against exact concentrated
      check-degree targets. Short cycles stay in; an attempt is accepted
      when no single- or pair-column chain-span codeword has weight
      below 9.
    - "peg": progressive edge growth (deepest local tree, min-degree
      tie-break, seeded-random final tie). Acceptance additionally wants
      information-column girth 6. This flattens the protection disparity
      between degree classes, so it suits single-protection codes, not
      schemes that rely on the weak class staying weak.

    After the retry budget the best attempt by (girth, span weight) is
    accepted, since small dense fixtures cannot meet the screens at all;
    socket exhaustion is a hard error.
    """
    if placement not in ("random", "peg"):
        raise ValueError(f"unknown placement {placement!r}")
    n, r, k = spec.n, spec.r, spec.k
    targets = information_degree_targets(spec.variable_dist, n, r)
    if len(targets) != k:
        raise ConstructionError("integerization does not fill k columns")
    if targets and targets[0] > r:
        raise ConstructionError(f"degree {targets[0]} exceeds {r} checks")
    if placement == "random":
        chk_targets = check_degree_targets(spec, targets)
    else:
        max_cd = int(np.ceil(spec.check_dist.mean_degree())) + 10
    need_girth = MIN_INFO_GIRTH if placement == "peg" else 0

    best = None
    trail = []
    for attempt in range(1 + RETRY_BUDGET):
        attempt_seed = np.random.SeedSequence(seed, spawn_key=(attempt,))
        trail.append(attempt)
        rng = np.random.default_rng(attempt_seed)
        try:
            if placement == "random":
                ev, ec = _place_edges_random(targets, n, r, k,
                                             chk_targets, rng)
            else:
                ev, ec = _place_edges(targets, n, r, k, max_cd, rng)
        except ConstructionError:
            continue
        code = LdpcCode(n, r, ev, ec, seed=seed, spec=spec)
        g = girth(code)
        singles, pair_w = chain_span_weights(code)
        span = int(min(singles.min(), pair_w))
        score = (min(g if g else 10 ** 9, need_girth),
                 min(span, MIN_SPAN_WEIGHT))
        if best is None or score > best[0]:
            best = (score, code, g, span)
        if (g == 0 or g >= need_girth) and span >= MIN_SPAN_WEIGHT:
            break
    if best is None:
        raise ConstructionError(f"placement failed for all seeds {trail}")
    _, code, g, span = best
    if pc1_fraction is not None:
        code.class_map = assign_protection_classes(code, pc1_fraction)
    code.report = BuildReport(attempts=len(trail), girth=g,
                              min_span_weight=span, seed_trail=trail)
    return code


def serialize_alist(code):
    """Standard alist text: dimensions, max degrees, per-node degree
    lists, then 1-indexed adjacency lists padded with zeros."""
    cd = code.column_degrees()
    rd = code.row_degrees()
    lines = [f"{code.n} {code.r}",
             f"{int(cd.max())} {int(rd.max())}",
             " ".join(str(int(d)) for d in cd),
             " ".join(str(int(d)) for d in rd)]
    mc, mr = int(cd.max()), int(rd.max())
    for col in code.column_adjacency():
        ones = [str(int(c) + 1) for c in np.sort(col)]
        lines.append(" ".join(ones + ["0"] * (mc - len(ones))))
    for row in code.row_adjacency():
        ones = [str(int(v) + 1) for v in np.sort(row)]
        lines.append(" ".join(ones + ["0"] * (mr - len(ones))))
    return "\n".join(lines) + "\n"


def parse_alist(text):
    """Parse alist text into an LdpcCode without protection classes."""
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    if len(rows) < 4:
        raise ValueError("alist too short")
    try:
        n, r = int(rows[0][0]), int(rows[0][1])
        col_deg = [int(x) for x in rows[2]]
        row_deg = [int(x) for x in rows[3]]
    except (IndexError, ValueError) as e:
        raise ValueError(f"malformed alist header: {e}") from None
    if len(col_deg) != n or len(row_deg) != r:
        raise ValueError("degree list lengths disagree with dimensions")
    if len(rows) < 4 + n + r:
        raise ValueError("alist truncated")
    ev, ec = [], []
    for v in range(n):
        entries = [int(x) for x in rows[4 + v] if int(x) != 0]
        if len(entries) != col_deg[v]:
            raise ValueError(f"column {v} lists {len(entries)} entries, "
                             f"declared degree {col_deg[v]}")
        for c in entries:
            if not 1 <= c <= r:
                raise ValueError(f"row index {c} out of range 1..{r}")
            ev.append(v)
            ec.append(c - 1)
    for c in range(r):
        entries = [int(x) for x in rows[4 + n + c] if int(x) != 0]
        if len(entries) != row_deg[c]:
            raise ValueError(f"row {c} lists {len(entries)} entries, "
                             f"declared degree {row_deg[c]}")
        for v in entries:
            if not 1 <= v <= n:
                raise ValueError(f"column index {v} out of range 1..{n}")
    return LdpcCode(n, r, ev, ec)


def write_code(code, path_prefix, extra=None):
    """Write <prefix>.alist plus a <prefix>.json sidecar with the class
    map, seed, and ensemble spec. extra entries are merged into the
    sidecar (provenance fields and the like). Returns the two paths."""
    alist_path = f"{path_prefix}.alist"
    sidecar_path = f"{path_prefix}.json"
    with open(alist_path, "w") as f:
        f.write(serialize_alist(code))
    sidecar = {
        "class_map": None if code.class_map is None
        else code.class_map.tolist(),
        "seed": code.seed,
        "spec": None if code.spec is None else {
            "n": code.spec.n,
            "rate": code.spec.rate,
            "variable_dist": code.spec.variable_dist.as_pairs(),
            "check_dist": code.spec.check_dist.as_pairs(),
        },
        "code_hash": code.content_hash(),
    }
    sidecar.update(extra or {})
    with open(sidecar_path, "w") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)
        f.write("\n")
    return alist_path, sidecar_path


def read_code(path_prefix):
    """Read a code written by write_code, restoring classes and spec."""
    with open(f"{path_prefix}.alist") as f:
        code = parse_alist(f.read())
    try:
        with open(f"{path_prefix}.json") as f:
            sidecar = json.load(f)
    except FileNotFoundError:
        return code
    if sidecar.get("class_map") is not None:
        cm = np.array(sidecar["class_map"], dtype="<U3")
        if cm.size != code.n:
            raise ValueError("class map length disagrees with code length")
        code.class_map = cm
    code.seed = sidecar.get("seed")
    if sidecar.get("spec"):
        s = sidecar["spec"]
        vd, _ = parse_pairs(s["variable_dist"], NODE, VARIABLE)
        cd, _ = parse_pairs(s["check_dist"], NODE, CHECK)
        code.spec = EnsembleSpec(s["n"], s["rate"], vd, cd)
    return code
