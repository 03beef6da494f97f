"""Closed-form bounds and exponents. All logarithms are base 2; exponents in bits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

from .builders import s_star
from .errors import InvalidArgument
from .model import HypothesisPair

LOG_BASE = 2
LN2 = math.log(2.0)


def _min_ber(theta: float) -> float:
    return min(theta, 1.0 - theta)


def d_exponent(pair: HypothesisPair) -> float:
    """Converse exponent: no deterministic family decays faster than this."""
    a = math.log2(_min_ber(pair.p))
    b = math.log2(_min_ber(pair.q))
    return -(a * b) / (a + b)


def r_exponent(pair: HypothesisPair) -> float:
    """Exponent achieved by the run machine started at ``s_star``."""
    p, q = pair.p, pair.q
    num = math.log2(p) * math.log2(1 - q) - math.log2(q) * math.log2(1 - p)
    den = math.log2(p * (1 - p)) + math.log2(q * (1 - q))
    return num / den


def log2_randomized_lower_bound(S: int, pair: HypothesisPair) -> float:
    if S < 1:
        raise InvalidArgument(f"S must be >= 1, got {S}")
    x = 0.5 * (S - 1) * math.log(pair.gamma)
    # log(1 + e^x) without overflow
    softplus = x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))
    return -softplus / LN2


def randomized_lower_bound(S: int, pair: HypothesisPair) -> float:
    """Floor on the error of any S-state time-invariant machine, randomized or not."""
    return 2.0 ** log2_randomized_lower_bound(S, pair)


def ergodic_converse_bound(S: int, pair: HypothesisPair) -> float:
    """Lower bound on the error of an irreducible deterministic S-state machine."""
    if S < 1:
        raise InvalidArgument(f"S must be >= 1, got {S}")
    lp = math.log2(_min_ber(pair.p))
    lq = math.log2(_min_ber(pair.q))
    best = max(min((i - 1) * lp, (S - i) * lq) for i in range(1, S + 1))
    return 2.0**best / S


@dataclass(frozen=True)
class RunClosedForm:
    """Absorption probabilities of the run machine from 1-indexed state ``s``.

    ``pXY`` is the probability of ending at the state deciding H_X under H_Y:
    ``p00`` and ``p11`` are correct outcomes, ``p10`` (H1 chosen under H0) and
    ``p01`` (H0 chosen under H1) are errors.
    """

    p00: float
    p10: float
    p01: float
    p11: float
    pe: float
    log2_pe: float


def _log1mexp(x: float) -> float:
    """log(1 - e^x) for x <= 0."""
    if x == 0.0:
        return -math.inf
    if x > -LN2:
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a > b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def _log_first_run(theta: float, a: int, b: int) -> float:
    """ln Pr(a consecutive ones before b consecutive zeros), ones w.p. theta."""
    lt, lf = math.log(theta), math.log1p(-theta)
    num = _log1mexp(b * lf)
    # 1 + (1-theta)^(b-1)/theta^(a-1) - (1-theta)^(b-1)
    den = _logaddexp(_log1mexp((b - 1) * lf), (b - 1) * lf - (a - 1) * lt)
    return num - den


def _log_first_zero_run(theta: float, a: int, b: int) -> float:
    """ln Pr(b consecutive zeros before a consecutive ones)."""
    lt, lf = math.log(theta), math.log1p(-theta)
    num = _log1mexp(a * lt)
    den = _logaddexp(_log1mexp((a - 1) * lt), (a - 1) * lt - (b - 1) * lf)
    return num - den


def run_machine_closed_form(S: int, s: int, pair: HypothesisPair) -> RunClosedForm:
    if S < 3 or not 2 <= s <= S - 1:
        raise InvalidArgument(f"need S >= 3 and 2 <= s <= S-1, got S={S}, s={s}")
    a, b = S - s, s - 1
    l00 = _log_first_run(pair.p, a, b)
    l10 = _log_first_zero_run(pair.p, a, b)
    l01 = _log_first_run(pair.q, a, b)
    l11 = _log_first_zero_run(pair.q, a, b)
    log_pe = _logaddexp(l01, l10) - LN2
    return RunClosedForm(
        math.exp(l00), math.exp(l10), math.exp(l01), math.exp(l11), math.exp(log_pe), log_pe / LN2
    )


def c_constant(pair: HypothesisPair) -> float:
    p, q = pair.p, pair.q
    inner = (1 - p) ** 2 * (1 - q) ** 2 * math.log2(q * (1 - q)) / (p * q * math.log2(p * (1 - p)))
    return math.log2(inner)


def log2_theorem2_upper_bound(S: int, pair: HypothesisPair) -> float:
    """Unclamped log2 of the run-machine upper bound at ``s_star``."""
    if S < 3:
        raise InvalidArgument(f"S must be >= 3, got {S}")
    p, q = pair.p, pair.q
    c = c_constant(pair)
    pref = max(
        (1 + c) * math.log2(p) - (2 - c) * math.log2(1 - p),
        (1 + c) * math.log2(1 - q) - (2 - c) * math.log2(q),
    )
    return pref - r_exponent(pair) * (S - 1)


def theorem2_upper_bound(S: int, pair: HypothesisPair) -> float:
    return 2.0 ** min(0.0, log2_theorem2_upper_bound(S, pair))


def chernoff_information(p: float, q: float, tol: float = 1e-10) -> float:
    """max over lambda in [0,1] of -log2(p^l q^(1-l) + (1-p)^l (1-q)^(1-l)).

    Takes raw parameters rather than a HypothesisPair so that ``p == q`` is allowed.
    """
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise InvalidArgument("p and q must lie in (0, 1)")

    def f(lam: float) -> float:
        return -math.log2(p**lam * q ** (1 - lam) + (1 - p) ** lam * (1 - q) ** (1 - lam))

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) < f(m2):
            lo = m1
        else:
            hi = m2
    return max(f(0.5 * (lo + hi)), 0.0)


@dataclass(frozen=True)
class CorollaryRow:
    p: float
    q: float
    d_exp: float
    r_exp: float
    target: float


def corollary_gap(q_fixed: float, p_sequence: Iterable[float]) -> list[CorollaryRow]:
    """Both exponents as p -> 1 for fixed q < 1/2; they approach -log2(q)."""
    if not 0 < q_fixed < 0.5:
        raise InvalidArgument("q_fixed must lie in (0, 1/2)")
    target = -math.log2(q_fixed)
    rows = []
    for p in p_sequence:
        pair = HypothesisPair(p, q_fixed)
        rows.append(CorollaryRow(pair.p, pair.q, d_exponent(pair), r_exponent(pair), target))
    return rows


def corollary_gap_mirrored(p_fixed: float, q_sequence: Iterable[float]) -> list[CorollaryRow]:
    """Both exponents as q -> 0 for fixed p > 1/2; they approach -log2(1-p)."""
    if not 0.5 < p_fixed < 1:
        raise InvalidArgument("p_fixed must lie in (1/2, 1)")
    target = -math.log2(1 - p_fixed)
    rows = []
    for q in q_sequence:
        pair = HypothesisPair(p_fixed, q)
        rows.append(CorollaryRow(pair.p, pair.q, d_exponent(pair), r_exponent(pair), target))
    return rows


@dataclass(frozen=True)
class BoundReport:
    S: int
    p: float
    q: float
    d_exp: float
    r_exp: float
    randomized_lb: float
    ergodic_lb: float
    run_ub_exact: float | None  # exact run-machine error at s_star; None for S < 3
    theorem2_ub: float | None
    s_star: int | None
    c_const: float
    chernoff: float
    log_base: int = LOG_BASE

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(S: int, pair: HypothesisPair) -> BoundReport:
    run_pe = t2 = ss = None
    if S >= 3:
        ss = s_star(S, pair)
        run_pe = run_machine_closed_form(S, ss, pair).pe
        t2 = theorem2_upper_bound(S, pair)
    return BoundReport(
        S=S,
        p=pair.p,
        q=pair.q,
        d_exp=d_exponent(pair),
        r_exp=r_exponent(pair),
        randomized_lb=randomized_lower_bound(S, pair),
        ergodic_lb=ergodic_converse_bound(S, pair),
        run_ub_exact=run_pe,
        theorem2_ub=t2,
        s_star=ss,
        c_const=c_constant(pair),
        chernoff=chernoff_information(pair.p, pair.q),
    )
