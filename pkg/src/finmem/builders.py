"""Concrete machines: run detector, counting-ones, stored prefix, last bit."""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import InvalidArgument, ResourceLimit
from .model import H0, H1, HypothesisPair, Machine

STORE_BITS_MAX_K = 20


def run_machine(S: int, s: int) -> Machine:
    """Decide by whichever comes first: ``a = S - s`` ones or ``b = s - 1`` zeros.

    ``s`` is the 1-indexed initial state in ``[2, S-1]``. In 1-indexed labels,
    state 1 absorbs deciding H1 and state S absorbs deciding H0; the returned
    machine is 0-indexed (label ``j`` becomes state ``j - 1``).
    """
    if S < 3 or not 2 <= s <= S - 1:
        raise InvalidArgument(f"run machine needs S >= 3 and 2 <= s <= S-1, got S={S}, s={s}")
    trans = [None] * S
    trans[0] = (0, 0)
    trans[S - 1] = (S - 1, S - 1)
    for j in range(2, S):  # paper label j
        if j <= s:
            trans[j - 1] = (j - 2, s)  # on 0 -> j-1, on 1 -> s+1
        else:
            trans[j - 1] = (s - 2, j)  # on 0 -> s-1, on 1 -> j+1
    dec = [H0] * S
    dec[0] = H1
    # Interior states lean by side of s; transient, so this never changes the error.
    for j in range(2, s + 1):
        dec[j - 1] = H1
    return Machine(tuple(trans), tuple(dec), s - 1)


def s_star(S: int, pair: HypothesisPair) -> int:
    """Initial state (1-indexed) for the run machine, clamped into [2, S-1].

    Logs are base 2; the additive constant depends on that choice.
    """
    if S < 3:
        raise InvalidArgument(f"s_star needs S >= 3, got {S}")
    p, q = pair.p, pair.q
    lp, lq = math.log2(p * (1 - p)), math.log2(q * (1 - q))
    slope = math.log2(p * q) / (lp + lq)
    offset = math.log2(((1 - q) ** 2 / q * lq) / (p / (1 - p) ** 2 * lp))
    v = slope * S + offset
    rounded = int(math.copysign(math.floor(abs(v) + 0.5), v))
    return min(max(rounded, 2), S - 1)


def count_ones_states(k: int, t) -> int:
    return count_ones_machine(k, t).num_states


def count_ones_machine(k: int, t) -> Machine:
    """Accept (H0) as soon as ``t*k - 1`` ones are seen within ``k`` samples.

    Layered states ``(n, j)``: ``n`` samples read, ``j`` ones so far, ``j``
    kept below the threshold. After the layers come two absorbing states,
    accept (H0) and reject (H1). ``t`` may be a float or ``Fraction``; ``t*k``
    must be an integer.
    """
    t = Fraction(t).limit_denominator(10**6)
    if k < 2 or not 0 < t < 1:
        raise InvalidArgument(f"need k >= 2 and 0 < t < 1, got k={k}, t={t}")
    tk = t * k
    if tk.denominator != 1:
        raise InvalidArgument(f"t*k must be an integer, got {tk}")
    thr = int(tk) - 1
    if thr == 0:
        # Zero ones already meets the threshold: a single accepting state.
        return Machine(((0, 0),), (H0,), 0)

    index: dict[tuple[int, int], int] = {}
    for n in range(k):
        for j in range(min(n, thr - 1) + 1):
            index[(n, j)] = len(index)
    accept = len(index)
    reject = accept + 1

    def target(n: int, j: int) -> int:
        if j >= thr:
            return accept
        if n >= k:
            return reject
        return index[(n, j)]

    trans = [None] * (reject + 1)
    for (n, j), i in index.items():
        trans[i] = (target(n + 1, j), target(n + 1, j + 1))
    trans[accept] = (accept, accept)
    trans[reject] = (reject, reject)
    dec = [H1] * (reject + 1)
    dec[accept] = H0
    return Machine(tuple(trans), tuple(dec), index[(0, 0)])


def claim1_bracket(k: int, t) -> tuple[float, float]:
    """Lower and upper state-count brackets for the threshold detector."""
    t = float(t)
    return 0.5 * min(t * t, (1 - t) ** 2) * k * k, t * k * k


def store_bits_machine(k: int, pair: HypothesisPair) -> Machine:
    """One state per observed prefix of length <= k; leaves absorb.

    Leaves are labelled by the likelihood-ratio test between Bern(p)^k and
    Bern(q)^k on the number of ones, ties going to H1. States are numbered in
    heap order: prefix ``x`` of length ``L`` is state ``2**L - 1 + int(x, 2)``.
    """
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    if k > STORE_BITS_MAX_K:
        raise ResourceLimit(f"k={k} exceeds the limit {STORE_BITS_MAX_K} (2^(k+1)-1 states)")
    n_internal = 2**k - 1
    n = 2 ** (k + 1) - 1
    trans = [None] * n
    dec = [H0] * n
    for i in range(n_internal):
        trans[i] = (2 * i + 1, 2 * i + 2)
    for leaf in range(n_internal, n):
        trans[leaf] = (leaf, leaf)
        ones = bin(leaf - n_internal).count("1")
        dec[leaf] = H0 if lrt_prefers_h0(ones, k, pair) else H1
    return Machine(tuple(trans), tuple(dec), 0)


def lrt_prefers_h0(ones: int, k: int, pair: HypothesisPair) -> bool:
    """True iff p^a (1-p)^(k-a) > q^a (1-q)^(k-a); equality counts as H1.

    Compared exactly over the rationals the probabilities print as, so that
    e.g. (0.9, 0.1) ties exactly on balanced prefixes.
    """
    p, q = Fraction(repr(pair.p)), Fraction(repr(pair.q))
    return p**ones * (1 - p) ** (k - ones) > q**ones * (1 - q) ** (k - ones)


def last_bit_machine() -> Machine:
    """Two states remembering the latest bit; state 1 (bit 1) decides H0."""
    return Machine(((0, 1), (0, 1)), (H1, H0), 0)
