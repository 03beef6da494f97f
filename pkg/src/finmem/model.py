"""Deterministic S-state machines: representation, execution, canonical form.

States are 0-indexed. Decision labels use ``H0 = 0`` and ``H1 = 1``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InvalidArgument

H0 = 0
H1 = 1


@dataclass(frozen=True)
class HypothesisPair:
    """Bernoulli parameters under H0 (``p``) and H1 (``q``), with ``0 < q < p < 1``."""

    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (0.0 < q < p < 1.0):
            raise InvalidArgument(f"need 0 < q < p < 1, got p={self.p!r}, q={self.q!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def gamma(self) -> float:
        """Likelihood-ratio constant p(1-q) / (q(1-p)); always > 1."""
        return self.p * (1.0 - self.q) / (self.q * (1.0 - self.p))

    def theta(self, hypothesis: int) -> float:
        return self.p if hypothesis == H0 else self.q


@dataclass(frozen=True)
class Machine:
    """A triplet (S, f, d) plus an initial state.

    ``transitions[i] == (f(i, 0), f(i, 1))``. Decisions on transient states are
    kept but never affect the asymptotic error.
    """

    transitions: tuple[tuple[int, int], ...]
    decision: tuple[int, ...]
    initial: int = 0

    def __post_init__(self):
        trans = tuple((int(a), int(b)) for a, b in self.transitions)
        dec = tuple(int(x) for x in self.decision)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "decision", dec)
        object.__setattr__(self, "initial", int(self.initial))

        n = len(trans)
        if n < 1:
            raise InvalidArgument("machine needs at least one state")
        if len(dec) != n:
            raise InvalidArgument(f"decision table has length {len(dec)}, expected {n}")
        for i, row in enumerate(trans):
            for t in row:
                if not 0 <= t < n:
                    raise InvalidArgument(f"transition target {t} from state {i} out of range [0, {n})")
        if any(x not in (H0, H1) for x in dec):
            raise InvalidArgument("decision labels must be 0 (H0) or 1 (H1)")
        if not 0 <= self.initial < n:
            raise InvalidArgument(f"initial state {self.initial} out of range [0, {n})")

    @property
    def num_states(self) -> int:
        return len(self.transitions)

    def with_decision(self, decision: Sequence[int]) -> Machine:
        return Machine(self.transitions, tuple(decision), self.initial)

    def to_dict(self) -> dict:
        return {
            "states": self.num_states,
            "initial": self.initial,
            "transitions": [list(row) for row in self.transitions],
            "decision": list(self.decision),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Machine:
        try:
            states = int(data["states"])
            m = cls(
                transitions=tuple(tuple(row) for row in data["transitions"]),
                decision=tuple(data["decision"]),
                initial=int(data["initial"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArgument):
                raise
            raise InvalidArgument(f"malformed machine JSON: {exc}") from exc
        if states != m.num_states:
            raise InvalidArgument(f"'states' is {states} but {m.num_states} transition rows given")
        return m

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Machine:
        return cls.from_dict(json.loads(text))


def load_machine(path: str | Path) -> Machine:
    return Machine.from_json(Path(path).read_text())


def step(m: Machine, state: int, bit: int) -> int:
    if not 0 <= state < m.num_states:
        raise InvalidArgument(f"state {state} out of range [0, {m.num_states})")
    if bit not in (0, 1):
        raise InvalidArgument(f"bit must be 0 or 1, got {bit!r}")
    return m.transitions[state][bit]


def run_prefix(m: Machine, bits: Iterable[int]) -> tuple[int, int]:
    """Feed ``bits`` from the initial state; return (final state, its decision)."""
    state = m.initial
    for b in bits:
        state = step(m, state, int(b))
    return state, m.decision[state]


@dataclass(frozen=True)
class CanonicalForm:
    machine: Machine
    reachable_count: int


def bfs_order(m: Machine) -> list[int]:
    """Reachable states in BFS discovery order from the initial state, bit 0 first."""
    seen = {m.initial}
    order = [m.initial]
    queue = deque(order)
    while queue:
        i = queue.popleft()
        for t in m.transitions[i]:
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return order


def canonicalize(m: Machine) -> CanonicalForm:
    order = bfs_order(m)
    relabel = {old: new for new, old in enumerate(order)}
    trans = tuple((relabel[m.transitions[old][0]], relabel[m.transitions[old][1]]) for old in order)
    dec = tuple(m.decision[old] for old in order)
    return CanonicalForm(Machine(trans, dec, 0), len(order))


def relabel(m: Machine, perm: Sequence[int]) -> Machine:
    """Rename state ``i`` to ``perm[i]``; the result behaves identically to ``m``."""
    n = m.num_states
    if sorted(perm) != list(range(n)):
        raise InvalidArgument("perm must be a permutation of range(S)")
    trans = [None] * n
    dec = [0] * n
    for old in range(n):
        a, b = m.transitions[old]
        trans[perm[old]] = (perm[a], perm[b])
        dec[perm[old]] = m.decision[old]
    return Machine(tuple(trans), tuple(dec), perm[m.initial])
