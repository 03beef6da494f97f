"""Exact Markov-chain analysis of a machine under each hypothesis.

The asymptotic (Cesaro) error of a machine is computed without simulation:
the chain is split into closed recurrent classes and transient states, each
class contributes its stationary vector, and classes are weighted by the
probability that the walk started at ``initial`` is absorbed into them.

All solves are dense LU with partial pivoting (``numpy.linalg.solve``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from collections import deque

import numpy as np

from .errors import InvalidArgument, NumericalFailure, UnsupportedStructure
from .model import H0, H1, HypothesisPair, Machine

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10
ABSORPTION_TOL = 1e-10
# Weights closer than this count as tied (tie -> H1); float noise would otherwise pick a side.
TIE_TOL = 1e-12


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise InvalidArgument(f"theta must lie in (0, 1), got {theta!r}")
    return theta


def transition_matrix(m: Machine, theta: float) -> np.ndarray:
    """Row-stochastic matrix of the chain driven by i.i.d. Bern(theta) input."""
    theta = _check_theta(theta)
    n = m.num_states
    P = np.zeros((n, n))
    for i, (t0, t1) in enumerate(m.transitions):
        P[i, t0] += 1.0 - theta
        P[i, t1] += theta
    return P


@dataclass(frozen=True)
class ChainStructure:
    recurrent_classes: tuple[tuple[int, ...], ...]
    transient: tuple[int, ...]

    @property
    def K(self) -> int:
        return len(self.recurrent_classes)

    def class_of(self) -> dict[int, int]:
        return {s: j for j, cls in enumerate(self.recurrent_classes) for s in cls}

    @property
    def irreducible(self) -> bool:
        return self.K == 1 and not self.transient


def _sccs(succ: list[tuple[int, ...]]) -> list[list[int]]:
    # Iterative Tarjan.
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, k = work.pop()
            if k == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            if k < len(succ[v]):
                work.append((v, k + 1))
                w = succ[v][k]
                if index[w] == -1:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return out


def classify(m: Machine) -> ChainStructure:
    """Closed strongly-connected components are the recurrent classes.

    Both input bits have positive probability under either hypothesis, so the
    structure depends only on the transition table.
    """
    succ = [tuple(sorted(set(row))) for row in m.transitions]
    classes = []
    transient = []
    for comp in _sccs(succ):
        members = set(comp)
        if all(t in members for s in comp for t in succ[s]):
            classes.append(tuple(comp))
        else:
            transient.extend(comp)
    classes.sort(key=lambda c: c[0])
    return ChainStructure(tuple(classes), tuple(sorted(transient)))


def stationary(P: np.ndarray, states) -> np.ndarray:
    """Stationary vector of ``P`` restricted to a closed irreducible class.

    Periodic classes are fine: the unique solution of mu P = mu is what governs
    time averages.
    """
    idx = np.asarray(states, dtype=int)
    Q = P[np.ix_(idx, idx)]
    k = len(idx)
    if k == 1:
        return np.ones(1)
    A = (Q - np.eye(k)).T
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    try:
        mu = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"stationary system singular on class {tuple(idx)}") from exc
    resid = np.max(np.abs(mu @ Q - mu))
    if resid > STATIONARY_TOL or np.min(mu) < -STATIONARY_TOL or abs(mu.sum() - 1.0) > STATIONARY_TOL:
        raise NumericalFailure(f"stationary solve residual {resid:.3e} on class {tuple(idx)}")
    return np.clip(mu, 0.0, None)


def _absorption_rows(P: np.ndarray, structure: ChainStructure) -> np.ndarray:
    """Matrix (transient x classes) of absorption probabilities."""
    T = np.asarray(structure.transient, dtype=int)
    K = structure.K
    if len(T) == 0:
        return np.zeros((0, K))
    B = np.column_stack([P[np.ix_(T, np.asarray(c))].sum(axis=1) for c in structure.recurrent_classes])
    A = np.eye(len(T)) - P[np.ix_(T, T)]
    try:
        X = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("absorption system singular") from exc
    if np.max(np.abs(X.sum(axis=1) - 1.0)) > ABSORPTION_TOL:
        raise NumericalFailure("absorption probabilities do not sum to 1")
    return X


def _absorption_from(P: np.ndarray, structure: ChainStructure, start: int) -> np.ndarray:
    K = structure.K
    cls = structure.class_of()
    if start in cls:
        v = np.zeros(K)
        v[cls[start]] = 1.0
        return v
    X = _absorption_rows(P, structure)
    return X[structure.transient.index(start)]


def absorption(m: Machine, theta: float, structure: ChainStructure | None = None) -> np.ndarray:
    """Pr(walk from ``m.initial`` ends in class j), one entry per recurrent class."""
    P = transition_matrix(m, theta)
    if structure is None:
        structure = classify(m)
    return _absorption_from(P, structure, m.initial)


@dataclass(frozen=True)
class ClassBreakdown:
    states: tuple[int, ...]
    absorb_h0: float
    absorb_h1: float
    err_h0: float  # error under H0 given the walk lives in this class
    err_h1: float

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "absorb_h0": self.absorb_h0,
            "absorb_h1": self.absorb_h1,
            "err_h0": self.err_h0,
            "err_h1": self.err_h1,
        }


@dataclass(frozen=True)
class ErrorReport:
    pe: float
    pe_given_h0: float
    pe_given_h1: float
    per_state_min: tuple[float, ...]
    per_class: tuple[ClassBreakdown, ...]
    decision: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "pe": self.pe,
            "pe_h0": self.pe_given_h0,
            "pe_h1": self.pe_given_h1,
            "per_state_min": list(self.per_state_min),
            "classes": [c.to_dict() for c in self.per_class],
        }


@dataclass(frozen=True)
class _Weights:
    structure: ChainStructure
    absorb: tuple[np.ndarray, np.ndarray]  # per class, under H0 and H1
    mu: tuple[list[np.ndarray], list[np.ndarray]]  # per class stationary vectors
    w: tuple[np.ndarray, np.ndarray]  # long-run occupancy per state


def _weights(m: Machine, pair: HypothesisPair, structure: ChainStructure | None = None) -> _Weights:
    if structure is None:
        structure = classify(m)
    n = m.num_states
    absorb = []
    mus = []
    ws = []
    for theta in (pair.p, pair.q):
        P = transition_matrix(m, theta)
        a = _absorption_from(P, structure, m.initial)
        mu_list = [stationary(P, c) for c in structure.recurrent_classes]
        w = np.zeros(n)
        for j, c in enumerate(structure.recurrent_classes):
            w[list(c)] = a[j] * mu_list[j]
        absorb.append(a)
        mus.append(mu_list)
        ws.append(w)
    return _Weights(structure, (absorb[0], absorb[1]), (mus[0], mus[1]), (ws[0], ws[1]))


def _decide(w_p: np.ndarray, w_q: np.ndarray, structure: ChainStructure) -> tuple[int, ...]:
    dec = [H1 if w_q[i] >= w_p[i] - TIE_TOL else H0 for i in range(len(w_p))]
    for i in structure.transient:
        dec[i] = H0
    return tuple(dec)


def optimal_decision(m: Machine, pair: HypothesisPair) -> tuple[int, ...]:
    """Bayes-optimal labels under equal priors; ties go to H1, transient states to H0."""
    wt = _weights(m, pair)
    return _decide(wt.w[0], wt.w[1], wt.structure)


def _report(m: Machine, wt: _Weights, decision: tuple[int, ...]) -> ErrorReport:
    structure = wt.structure
    per_class = []
    pe_h = [0.0, 0.0]
    for j, c in enumerate(structure.recurrent_classes):
        errs = []
        for h in (H0, H1):
            mu = wt.mu[h][j]
            errs.append(float(sum(mu[k] for k, s in enumerate(c) if decision[s] != h)))
        per_class.append(ClassBreakdown(c, float(wt.absorb[0][j]), float(wt.absorb[1][j]), errs[0], errs[1]))
        pe_h[0] += wt.absorb[0][j] * errs[0]
        pe_h[1] += wt.absorb[1][j] * errs[1]
    per_state_min = tuple(float(x) for x in np.minimum(wt.w[0], wt.w[1]))
    pe0, pe1 = float(pe_h[0]), float(pe_h[1])
    return ErrorReport(0.5 * (pe0 + pe1), pe0, pe1, per_state_min, tuple(per_class), decision)


def error_probability(m: Machine, pair: HypothesisPair, optimal: bool = False) -> ErrorReport:
    """Exact asymptotic Bayes error of ``m``.

    Uses ``m.decision`` unless ``optimal`` is set, in which case the
    Bayes-optimal labelling is substituted first.
    """
    wt = _weights(m, pair)
    decision = _decide(wt.w[0], wt.w[1], wt.structure) if optimal else m.decision
    return _report(m, wt, decision)


def optimal_pe(m: Machine, pair: HypothesisPair) -> float:
    """Error of ``m`` under its optimal decision table: half the sum of per-state minima."""
    wt = _weights(m, pair)
    return _report(m, wt, _decide(wt.w[0], wt.w[1], wt.structure)).pe


# --- two-absorber diagnostics -------------------------------------------------


@dataclass(frozen=True)
class Diagnostics:
    """Total distance / occupancy per state for a two-target machine.

    ``target_h1`` is the class that decides H1 (the paper's state 1) and
    ``target_h0`` the one that decides H0 (state S).
    """

    td: tuple[float, ...]
    occ: tuple[float, ...]
    witness: int
    p0: float  # Pr(absorbed at the H1 target | H0)
    p1: float  # Pr(absorbed at the H0 target | H1)
    target_h0: tuple[int, ...]
    target_h1: tuple[int, ...]

    @property
    def occupancy_floor(self) -> float:
        return (1.0 - max(self.p0, self.p1)) / len(self.td)

    def to_dict(self) -> dict:
        return {
            "td": [None if math.isinf(x) else int(x) for x in self.td],
            "occ": list(self.occ),
            "witness": self.witness,
            "p0": self.p0,
            "p1": self.p1,
            "occupancy_floor": self.occupancy_floor,
            "target_h0": list(self.target_h0),
            "target_h1": list(self.target_h1),
        }


def _two_targets(m: Machine, structure: ChainStructure) -> tuple[int, int]:
    if structure.K != 2:
        raise UnsupportedStructure(f"need exactly two recurrent classes, found {structure.K}")
    labels = []
    for c in structure.recurrent_classes:
        ds = {m.decision[s] for s in c}
        if len(ds) != 1:
            raise UnsupportedStructure(f"recurrent class {c} mixes decisions")
        labels.append(ds.pop())
    if labels[0] == labels[1]:
        raise UnsupportedStructure("both recurrent classes carry the same decision")
    j_h0 = labels.index(H0)
    return j_h0, 1 - j_h0


def _distances_to(m: Machine, targets) -> list[float]:
    # BFS on reversed edges; shortest walks are simple paths.
    n = m.num_states
    pred: list[set[int]] = [set() for _ in range(n)]
    for i, row in enumerate(m.transitions):
        for t in row:
            pred[t].add(i)
    dist = [math.inf] * n
    queue = deque()
    for t in targets:
        dist[t] = 0
        queue.append(t)
    while queue:
        v = queue.popleft()
        for u in sorted(pred[v]):
            if dist[u] == math.inf:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _visit_probability(P: np.ndarray, start: int, target: int) -> float:
    """Pr(walk from ``start`` ever visits ``target``), time 0 included."""
    if start == target:
        return 1.0
    n = P.shape[0]
    # Only states that can reach target carry nonzero probability.
    reach = {target}
    frontier = [target]
    while frontier:
        v = frontier.pop()
        for u in np.nonzero(P[:, v])[0]:
            u = int(u)
            if u not in reach:
                reach.add(u)
                frontier.append(u)
    if start not in reach:
        return 0.0
    idx = sorted(s for s in reach if s != target)
    pos = {s: k for k, s in enumerate(idx)}
    A = np.eye(len(idx)) - P[np.ix_(idx, idx)]
    b = P[idx, target]
    try:
        h = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("first-passage system singular") from exc
    return float(min(max(h[pos[start]], 0.0), 1.0))


def structural_diagnostics(m: Machine, pair: HypothesisPair) -> Diagnostics:
    structure = classify(m)
    j_h0, j_h1 = _two_targets(m, structure)
    tgt_h0 = structure.recurrent_classes[j_h0]
    tgt_h1 = structure.recurrent_classes[j_h1]
    n = m.num_states

    d_h1 = _distances_to(m, tgt_h1)
    d_h0 = _distances_to(m, tgt_h0)
    if math.isinf(d_h1[m.initial]) or math.isinf(d_h0[m.initial]):
        raise UnsupportedStructure("initial state cannot reach both targets")
    td = tuple(d_h1[u] + d_h0[u] for u in range(n))

    Pp = transition_matrix(m, pair.p)
    Pq = transition_matrix(m, pair.q)
    a_p = _absorption_from(Pp, structure, m.initial)
    a_q = _absorption_from(Pq, structure, m.initial)
    p0 = float(a_p[j_h1])
    p1 = float(a_q[j_h0])

    occ = tuple(
        min(_visit_probability(Pp, m.initial, u), _visit_probability(Pq, m.initial, u)) for u in range(n)
    )
    floor = (1.0 - max(p0, p1)) / n
    candidates = [u for u in range(n) if td[u] <= n and occ[u] >= floor - 1e-12]
    if not candidates:
        raise AssertionError("no state meets the total-distance/occupancy guarantee; this is a bug")
    witness = max(candidates, key=lambda u: (occ[u], -u))
    return Diagnostics(td, occ, witness, p0, p1, tgt_h0, tgt_h1)
