"""Degree-distribution algebra for irregular LDPC ensembles.

Distributions live in one of two perspectives:

* edge perspective: coefficient at degree d is the fraction of *edges*
  incident to a node of degree d (the classic lambda/rho polynomials),
* node perspective: coefficient at degree d is the fraction of *nodes*
  of degree d (nu for variable nodes, c for check nodes).

Internally everything is indexed by degree, never by polynomial exponent.
Text in the literature writes edge polynomials with exponent = degree - 1;
the string parser takes an explicit convention flag so the transcription
can't silently go wrong.
"""

import math
import re
from dataclasses import dataclass, field

EDGE = "edge"
NODE = "node"
VARIABLE = "variable"
CHECK = "check"

NORM_TOL = 1e-9        # normalization required of a constructed polynomial
PARSE_TOL = 1e-3       # sloppiest sum accepted by parsers before rejecting


@dataclass(frozen=True)
class DegreePolynomial:
    """A degree distribution: map degree -> fraction, summing to 1.

    perspective is "edge" or "node"; node_kind is "variable" or "check".
    Zero coefficients are not stored; every degree is a positive integer.
    """

    perspective: str
    node_kind: str
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.perspective not in (EDGE, NODE):
            raise ValueError(f"unknown perspective {self.perspective!r}")
        if self.node_kind not in (VARIABLE, CHECK):
            raise ValueError(f"unknown node_kind {self.node_kind!r}")
        if not self.coefficients:
            raise ValueError("empty degree distribution")
        clean = {}
        for d, f in self.coefficients.items():
            if d != int(d) or int(d) < 1:
                raise ValueError(f"degree {d!r} is not a positive integer")
            if f < 0.0 or f > 1.0:
                raise ValueError(f"coefficient {f!r} at degree {d} "
                                 "outside [0, 1]")
            if f == 0.0:
                raise ValueError(f"zero coefficient at degree {d}; "
                                 "drop it instead")
            clean[int(d)] = float(f)
        total = math.fsum(clean.values())
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"coefficients sum to {total!r}, not 1 "
                             f"(tolerance {NORM_TOL})")
        object.__setattr__(self, "coefficients", clean)

    @property
    def degrees(self):
        return sorted(self.coefficients)

    @property
    def max_degree(self):
        return max(self.coefficients)

    @property
    def min_degree(self):
        return min(self.coefficients)

    def mean_degree(self):
        """Coefficient-weighted mean degree (sum of d * f_d)."""
        return math.fsum(d * f for d, f in self.coefficients.items())

    def inverse_moment(self):
        """Sum of f_d / d, the quantity both conversions pivot on."""
        return math.fsum(f / d for d, f in self.coefficients.items())

    def as_pairs(self):
        """(degree, coefficient) pairs sorted by degree, JSON-friendly."""
        return [[d, self.coefficients[d]] for d in self.degrees]


def edge_to_node(dist):
    """Convert an edge-perspective distribution to node perspective.

    nu_i = (lambda_i / i) / sum_j(lambda_j / j). Input must already be
    normalized; a non-normalized polynomial cannot be constructed, so
    there is nothing to renormalize silently here.
    """
    if dist.perspective != EDGE:
        raise ValueError("edge_to_node needs an edge-perspective input")
    z = dist.inverse_moment()
    coeffs = {d: (f / d) / z for d, f in dist.coefficients.items()}
    return DegreePolynomial(NODE, dist.node_kind, coeffs)


def node_to_edge(dist):
    """Convert a node-perspective distribution to edge perspective.

    lambda_i = nu_i * i / sum_j(nu_j * j).
    """
    if dist.perspective != NODE:
        raise ValueError("node_to_edge needs a node-perspective input")
    z = dist.mean_degree()
    coeffs = {d: f * d / z for d, f in dist.coefficients.items()}
    return DegreePolynomial(EDGE, dist.node_kind, coeffs)


def concentrated_check_distribution(variable_dist, rate):
    """Check-node distribution concentrated on one or two adjacent degrees.

    Given a node-perspective variable distribution and a design rate,
    the mean check degree is c_m = sum_j(nu_j * j) / (1 - rate) and the
    distribution splits it over floor(c_m) and ceil(c_m) with weights
    a = ceil(c_m) - c_m and b = c_m - floor(c_m). An integer c_m gives a
    single degree with coefficient 1 (the continuity limit of a, b -> 0).
    """
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate {rate!r} outside (0, 1)")
    if variable_dist.perspective != NODE:
        raise ValueError("concentrated_check_distribution needs a "
                         "node-perspective variable distribution")
    cm = variable_dist.mean_degree() / (1.0 - rate)
    lo = math.floor(cm)
    hi = math.ceil(cm)
    if lo == hi or hi - cm > 1.0 - NORM_TOL:
        return DegreePolynomial(NODE, CHECK, {lo: 1.0})
    if cm - lo > 1.0 - NORM_TOL:
        return DegreePolynomial(NODE, CHECK, {hi: 1.0})
    return DegreePolynomial(NODE, CHECK, {lo: hi - cm, hi: cm - lo})


def design_rate(variable_edge, check_edge):
    """Design rate R = 1 - (sum_j rho_j/j) / (sum_i lambda_i/i)."""
    if variable_edge.perspective != EDGE or check_edge.perspective != EDGE:
        raise ValueError("design_rate takes edge-perspective distributions")
    r = 1.0 - check_edge.inverse_moment() / variable_edge.inverse_moment()
    if not 0.0 < r < 1.0:
        raise ValueError(f"distributions imply design rate {r!r}, "
                         "outside (0, 1)")
    return r


def parse_pairs(pairs, perspective, node_kind):
    """Build a polynomial from (degree, coefficient) pairs, e.g. from JSON.

    Coefficients transcribed from printed tables carry rounding; sums
    within 1e-3 of 1 are renormalized explicitly. Returns
    (polynomial, adjustment) where adjustment is the raw sum minus 1.
    Zero coefficients are dropped; duplicate degrees are rejected.
    """
    coeffs = {}
    for d, f in pairs:
        if int(d) in coeffs:
            raise ValueError(f"duplicate degree {d}")
        if f != 0.0:
            coeffs[int(d)] = float(f)
    if not coeffs:
        raise ValueError("empty degree distribution")
    total = math.fsum(coeffs.values())
    adjustment = total - 1.0
    if abs(adjustment) > PARSE_TOL:
        raise ValueError(f"coefficients sum to {total!r}; "
                         f"off by more than {PARSE_TOL}")
    if abs(adjustment) > NORM_TOL:
        coeffs = {d: f / total for d, f in coeffs.items()}
    return DegreePolynomial(perspective, node_kind, coeffs), adjustment


_TERM_RE = re.compile(
    r"^\s*(?P<coeff>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)?\s*\*?\s*"
    r"(?:x(?:\s*(?:\^|\*\*)\s*(?P<exp>\d+))?)?\s*$")

EDGE_EXPONENT = "edge-exponent"   # degree = exponent + 1
DEGREE = "degree"                 # degree = exponent


def parse_polynomial(text, convention, perspective, node_kind):
    """Parse a polynomial string like "0.8815 x^2 + 0.1185 x".

    convention says how exponents map to degrees: "edge-exponent" means
    degree = exponent + 1 (the usual way edge polynomials are printed),
    "degree" means the exponent is the degree itself. Returns
    (polynomial, adjustment) like parse_pairs.
    """
    if convention not in (EDGE_EXPONENT, DEGREE):
        raise ValueError(f"unknown convention {convention!r}")
    pairs = []
    for term in text.split("+"):
        m = _TERM_RE.match(term)
        if not m or (m.group("coeff") is None and "x" not in term):
            raise ValueError(f"malformed term {term!r}")
        coeff = float(m.group("coeff")) if m.group("coeff") else 1.0
        if "x" in term:
            exp = int(m.group("exp")) if m.group("exp") else 1
        else:
            exp = 0
        degree = exp + 1 if convention == EDGE_EXPONENT else exp
        pairs.append([degree, coeff])
    merged = {}
    for d, f in pairs:
        merged[d] = merged.get(d, 0.0) + f
    return parse_pairs(sorted(merged.items()), perspective, node_kind)


@dataclass(frozen=True)
class EnsembleSpec:
    """A code ensemble: length, design rate, and node-perspective
    variable/check distributions.

    The variable distribution must keep every degree >= 2 (degree-1
    information columns cannot be protected by the construction). The
    edge-count consistency n * mean_v = r * mean_c must hold within the
    rounding slack integerization can introduce.
    """

    n: int
    rate: float
    variable_dist: DegreePolynomial
    check_dist: DegreePolynomial

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("code length too small")
        if not 0.0 < self.rate < 1.0:
            raise ValueError(f"rate {self.rate!r} outside (0, 1)")
        vd, cd = self.variable_dist, self.check_dist
        if vd.perspective != NODE or vd.node_kind != VARIABLE:
            raise ValueError("variable_dist must be node-perspective "
                             "variable distribution")
        if cd.perspective != NODE or cd.node_kind != CHECK:
            raise ValueError("check_dist must be node-perspective "
                             "check distribution")
        if vd.min_degree < 2:
            raise ValueError("variable degrees below 2 are not constructible")
        slack = self.n + self.r
        if abs(self.edge_count_mismatch()) > slack:
            raise ValueError(
                f"edge counts disagree: n*mean_v = {self.n * vd.mean_degree():.1f}, "
                f"r*mean_c = {self.r * cd.mean_degree():.1f}")

    @property
    def k(self):
        return int(round(self.n * self.rate))

    @property
    def r(self):
        return self.n - self.k

    @property
    def edge_count(self):
        """Nominal total edge count, before integerization."""
        return self.n * self.variable_dist.mean_degree()

    def edge_count_mismatch(self):
        return (self.n * self.variable_dist.mean_degree()
                - self.r * self.check_dist.mean_degree())
