"""Bundled ensembles and builders for the two protection schemes.

One family serves the unequal-protection design: a rate-1/2 irregular
variable distribution whose high-degree columns become the strongly
protected class, instantiated at block lengths 1024, 2048, and 4096
with a concentrated check distribution derived from it.

The split design uses two dedicated codes per frame: a rate-0.8 code
for the secret bits (weak on purpose: its failure region is the
security margin) and a rate-0.2 code for the public bits, both of
length 1024, described by their edge-perspective distribution pairs.

Build seeds are fixed so every artifact derived from these codes is
reproducible; the construction retries internally if a seed draws a
poor graph, and the alist sidecar records what was built.
"""

from .construct import build_zigzag_random
from .degrees import (CHECK, EDGE, NODE, VARIABLE, EnsembleSpec,
                      concentrated_check_distribution, edge_to_node,
                      parse_pairs)
from .secrecy import layout_for_two_codes, layout_for_uep

UEP_LENGTHS = (1024, 2048, 4096)
UEP_RATE = 0.5
UEP_PC1_FRACTION = 0.2
TWO_CODE_LENGTH = 1024
SECRET_RATE = 0.8
PUBLIC_RATE = 0.2

BUILD_SEEDS = {
    ("uep", 1024): 1101,
    ("uep", 2048): 1102,
    ("uep", 4096): 1103,
    ("secret", 1024): 2201,
    ("public", 1024): 2202,
}

# node-perspective variable distribution of the unequal-protection family
_UEP_NU = (
    (2, 0.4946), (3, 0.4054), (16, 0.0835), (17, 0.0151),
    (18, 0.0007), (19, 0.0002), (20, 0.0005),
)

# edge-perspective pairs of the split design
_SECRET_LAMBDA = ((2, 0.1185), (3, 0.8815))
_SECRET_RHO = ((14, 0.8292), (15, 0.1708))
_PUBLIC_LAMBDA = (
    (2, 0.2124), (3, 0.1976), (16, 0.0117), (17, 0.0988),
    (18, 0.0638), (19, 0.2392), (20, 0.1765),
)
_PUBLIC_RHO = ((6, 0.8393), (7, 0.1607))


def uep_variable_distribution():
    """Node-perspective variable distribution of the UEP family."""
    return parse_pairs(_UEP_NU, NODE, VARIABLE)[0]


def uep_ensemble(n):
    """Rate-1/2 UEP ensemble at block length n."""
    if n not in UEP_LENGTHS:
        raise ValueError(f"unsupported UEP length {n}; "
                         f"pick one of {UEP_LENGTHS}")
    nu = uep_variable_distribution()
    return EnsembleSpec(n, UEP_RATE, nu,
                        concentrated_check_distribution(nu, UEP_RATE))


def _pair_ensemble(n, rate, lam, rho):
    var = edge_to_node(parse_pairs(lam, EDGE, VARIABLE)[0])
    chk = edge_to_node(parse_pairs(rho, EDGE, CHECK)[0])
    return EnsembleSpec(n, rate, var, chk)


def secret_ensemble(n=TWO_CODE_LENGTH):
    """High-rate code carrying the secret bits of the split design."""
    return _pair_ensemble(n, SECRET_RATE, _SECRET_LAMBDA, _SECRET_RHO)


def public_ensemble(n=TWO_CODE_LENGTH):
    """Low-rate code carrying the public bits of the split design."""
    return _pair_ensemble(n, PUBLIC_RATE, _PUBLIC_LAMBDA, _PUBLIC_RHO)


def build_uep_code(n, seed=None, pc1_fraction=UEP_PC1_FRACTION):
    """Build the UEP code at length n with its class assignment."""
    if seed is None:
        seed = BUILD_SEEDS[("uep", n)]
    return build_zigzag_random(uep_ensemble(n), pc1_fraction, seed)


def build_two_code_pair(n=TWO_CODE_LENGTH, secret_seed=None,
                        public_seed=None):
    """Build the (secret, public) code pair of the split design.

    The secret code gets no internal class split; its whole information
    block is the secret message, and likewise for the public code.
    """
    if secret_seed is None:
        secret_seed = BUILD_SEEDS[("secret", n)]
    if public_seed is None:
        public_seed = BUILD_SEEDS[("public", n)]
    secret = build_zigzag_random(secret_ensemble(n), None, secret_seed)
    public = build_zigzag_random(public_ensemble(n), None, public_seed)
    return secret, public


def uep_layout(n, seed=None, pc1_fraction=UEP_PC1_FRACTION):
    """Frame layout for the single-code UEP scheme at length n."""
    return layout_for_uep(build_uep_code(n, seed, pc1_fraction))


def two_code_layout(n=TWO_CODE_LENGTH, secret_seed=None, public_seed=None):
    """Frame layout for the split scheme, secret codeword first."""
    secret, public = build_two_code_pair(n, secret_seed, public_seed)
    return layout_for_two_codes(secret, public)
