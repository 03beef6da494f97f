"""Exhaustive search for the best deterministic S-state machine.

Only transition tables are enumerated, one per isomorphism class: a table is
canonical when numbering states in BFS discovery order from state 0 (bit 0
before bit 1) leaves it unchanged. The decision table of each candidate is
chosen analytically (see ``chain.optimal_decision``).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator

from . import chain
from .errors import ResourceLimit
from .model import HypothesisPair, Machine

DEFAULT_MAX_STATES = 5
NAIVE_MAX_STATES = 3

Table = tuple[tuple[int, int], ...]


def _canonical_tables(S: int) -> Iterator[Table]:
    # Fill slots (state 0 bit 0, state 0 bit 1, state 1 bit 0, ...) in order.
    # A slot may point at any discovered state or at the next new one.
    # Yields in lexicographic order of the flattened table.
    slots = [0] * (2 * S)

    def rec(pos: int, discovered: int):
        if pos == 2 * S:
            if discovered == S:
                yield tuple((slots[2 * i], slots[2 * i + 1]) for i in range(S))
            return
        state = pos // 2
        if state >= discovered:
            return  # state never reached by BFS
        # Even a fresh state per remaining slot could not reach S.
        if discovered + (2 * S - pos) < S:
            return
        top = min(discovered, S - 1)
        for t in range(top + 1):
            slots[pos] = t
            yield from rec(pos + 1, discovered + (t == discovered))

    yield from rec(0, 1)


def enumerate_canonical(S: int, limit: int = DEFAULT_MAX_STATES) -> Iterator[Machine]:
    """Canonical machines with exactly ``S`` reachable states, initial state 0.

    Decisions are placeholders (all H0).
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    if S > limit:
        raise ResourceLimit(f"S={S} exceeds the search limit {limit}")
    zeros = (0,) * S
    for table in _canonical_tables(S):
        yield Machine(table, zeros, 0)


def _evaluate(machine: Machine, pair: HypothesisPair) -> tuple[float, Machine]:
    dec = chain.optimal_decision(machine, pair)
    m = machine.with_decision(dec)
    return chain.error_probability(m, pair).pe, m


def _key(pe: float, m: Machine) -> tuple:
    return (pe, m.transitions, m.decision)


def _best_in_chunk(args) -> tuple[float, Table, tuple[int, ...], int]:
    tables, p, q = args
    pair = HypothesisPair(p, q)
    best = None
    for table in tables:
        pe, m = _evaluate(Machine(table, (0,) * len(table), 0), pair)
        if best is None or _key(pe, m) < _key(*best):
            best = (pe, m)
    return best[0], best[1].transitions, best[1].decision, len(tables)


@dataclass(frozen=True)
class SearchResult:
    S: int
    pstar: float
    best_machine: Machine
    enumerated: int

    def to_dict(self) -> dict:
        return {
            "S": self.S,
            "pstar": self.pstar,
            "enumerated": self.enumerated,
            "best_machine": self.best_machine.to_dict(),
        }


def _chunks(items: list, n: int) -> list[list]:
    size = -(-len(items) // n)
    return [items[i : i + size] for i in range(0, len(items), size)]


def optimal_error(
    S: int,
    pair: HypothesisPair,
    workers: int = 1,
    limit: int = DEFAULT_MAX_STATES,
    chunks: int = 64,
) -> SearchResult:
    """Minimum exact error over all deterministic machines with S reachable states.

    The canonical stream is split into a fixed number of contiguous chunks
    independent of ``workers``; chunk minima are merged by
    (error, transitions, decisions), so the witness is identical for any
    degree of parallelism.
    """
    if S > limit:
        raise ResourceLimit(f"S={S} exceeds the search limit {limit}")
    tables = list(_canonical_tables(S))
    jobs = [(c, pair.p, pair.q) for c in _chunks(tables, chunks)]
    if workers <= 1:
        results = [_best_in_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_best_in_chunk, jobs))
    pe, trans, dec, _ = min(results, key=lambda r: (r[0], r[1], r[2]))
    return SearchResult(S, pe, Machine(trans, dec, 0), sum(r[3] for r in results))


def naive_optimal_error(S: int, pair: HypothesisPair) -> float:
    """Brute force over every S^(2S) table and every initial state, no canonical form."""
    if S > NAIVE_MAX_STATES:
        raise ResourceLimit(f"naive search only supports S <= {NAIVE_MAX_STATES}")
    best = 1.0
    zeros = (0,) * S
    for flat in itertools.product(range(S), repeat=2 * S):
        table = tuple((flat[2 * i], flat[2 * i + 1]) for i in range(S))
        for s0 in range(S):
            best = min(best, chain.optimal_pe(Machine(table, zeros, s0), pair))
    return best
