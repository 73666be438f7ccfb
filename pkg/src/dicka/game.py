"""The Parity-CHSH game.

Alice and Bob_1 receive uniform bits x and y; every other Bob receives the
fixed input 1.  With b-bar the parity of the outputs of Bob_2..Bob_{N-1},
the players win iff a XOR b_1 == x * ((y + b-bar) mod 2).  With no extra
Bobs the parity is empty (0) and the game is exactly CHSH.

This module evaluates the predicate, computes the exact classical value by
exhaustive enumeration of deterministic strategies, and computes the quantum
winning probability of any simulated state under a given settings bundle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError, SizeOutOfRangeError
from .quantum import MixedState, Observable, joint_distribution, setting_observable


def _check_bit(name: str, value: int) -> None:
    if value not in (0, 1):
        raise InvalidInputError(f"{name} must be 0 or 1, got {value!r}")


@dataclass(frozen=True)
class GameRound:
    """Inputs and outputs of one play: Alice (x, a), Bob_1 (y, b1), rest (b_rest)."""

    x: int
    y: int
    a: int
    b1: int
    b_rest: str = ""

    def __post_init__(self) -> None:
        for name in ("x", "y", "a", "b1"):
            _check_bit(name, getattr(self, name))
        if any(ch not in "01" for ch in self.b_rest):
            raise InvalidInputError(f"b_rest must be a bit string, got {self.b_rest!r}")


@dataclass(frozen=True)
class DeterministicStrategy:
    """Local deterministic strategy: answer tables for Alice/Bob_1, fixed bits for the rest."""

    alice_table: tuple[int, int]
    bob1_table: tuple[int, int]
    rest_bits: str = ""

    def __post_init__(self) -> None:
        for bit in (*self.alice_table, *self.bob1_table):
            _check_bit("table entry", bit)
        if any(ch not in "01" for ch in self.rest_bits):
            raise InvalidInputError(f"rest_bits must be a bit string, got {self.rest_bits!r}")


def parity_chsh_wins(round: GameRound) -> bool:
    """Whether the round satisfies a XOR b1 == x * ((y + parity(b_rest)) mod 2)."""
    parity = round.b_rest.count("1") & 1
    return (round.a ^ round.b1) == (round.x * ((round.y + parity) % 2)) % 2


def parity_chsh_wins_bulk(x, y, a, b1, rest_parity) -> np.ndarray:
    """Vectorised predicate over integer arrays; same formula as parity_chsh_wins."""
    x = np.asarray(x, dtype=np.int64)
    rhs = (x * ((np.asarray(y, dtype=np.int64) + np.asarray(rest_parity, dtype=np.int64)) % 2)) % 2
    return (np.asarray(a, dtype=np.int64) ^ np.asarray(b1, dtype=np.int64)) == rhs


def strategy_win_count(strategy: DeterministicStrategy) -> int:
    """Number of the four (x, y) question pairs the strategy wins."""
    parity = strategy.rest_bits.count("1") & 1
    count = 0
    for x in (0, 1):
        for y in (0, 1):
            a = strategy.alice_table[x]
            b1 = strategy.bob1_table[y]
            if (a ^ b1) == (x * ((y + parity) % 2)) % 2:
                count += 1
    return count


def classical_value(n_parties: int) -> Fraction:
    """Maximum winning probability over deterministic strategies, exactly.

    Enumerates all 4 * 4 * 2**(N-2) strategies under uniform (x, y); the
    result is an exact rational.
    """
    if not 2 <= n_parties <= 6:
        raise SizeOutOfRangeError(f"classical value enumeration supports 2..6 parties, got {n_parties}")
    best = 0
    for a0, a1, b0, b1 in product((0, 1), repeat=4):
        for rest in product("01", repeat=n_parties - 2):
            strat = DeterministicStrategy((a0, a1), (b0, b1), "".join(rest))
            best = max(best, strategy_win_count(strat))
            if best == 4:
                return Fraction(1)
    return Fraction(best, 4)


@dataclass(frozen=True)
class SettingsBundle:
    """Observables used in test rounds: Alice per x, Bob_1 per y, fixed for the rest."""

    alice: tuple[Observable, Observable]
    bob1: tuple[Observable, Observable]
    rest: tuple[Observable, ...]

    @property
    def n_parties(self) -> int:
        return 2 + len(self.rest)


def honest_settings(n_parties: int) -> SettingsBundle:
    """Honest test-round observables: Z/X, (Z+-X)/sqrt2, and X for the fixed input 1."""
    if n_parties < 2:
        raise SizeOutOfRangeError("need at least two parties")
    return SettingsBundle(
        alice=(setting_observable("alice", 0), setting_observable("alice", 1)),
        bob1=(setting_observable("bob1", 0), setting_observable("bob1", 1)),
        rest=tuple(setting_observable("bobk", 1) for _ in range(n_parties - 2)),
    )


def _outcome_fields(n_parties: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per outcome-index arrays (a, b1, parity of the remaining bits)."""
    idx = np.arange(2**n_parties)
    a = (idx >> (n_parties - 1)) & 1
    b1 = (idx >> (n_parties - 2)) & 1
    rest = idx & ((1 << (n_parties - 2)) - 1)
    parity = np.zeros_like(rest)
    while rest.any():
        parity ^= rest & 1
        rest = rest >> 1
    return a, b1, parity


def quantum_win_probability(state: MixedState, settings: SettingsBundle) -> float:
    """Winning probability under uniform (x, y), evaluated by the Born rule."""
    n = settings.n_parties
    if state.n_qubits != n:
        raise DimensionMismatchError(
            f"state has {state.n_qubits} qubits but settings describe {n} parties"
        )
    a, b1, parity = _outcome_fields(n)
    total = 0.0
    for x in (0, 1):
        for y in (0, 1):
            dist = joint_distribution(state, [settings.alice[x], settings.bob1[y], *settings.rest])
            wins = parity_chsh_wins_bulk(x, y, a, b1, parity)
            total += float(dist[wins].sum())
    return total / 4.0


def conditioned_win_probabilities(
    state: MixedState, settings: SettingsBundle
) -> dict[int, tuple[float, float]]:
    """Map parity value -> (probability of that parity, conditional win probability).

    The parity marginal is input-independent (no signalling), so the weights
    are averaged over the four question pairs; the convex combination of the
    conditional values reproduces quantum_win_probability.
    """
    n = settings.n_parties
    if state.n_qubits != n:
        raise DimensionMismatchError(
            f"state has {state.n_qubits} qubits but settings describe {n} parties"
        )
    a, b1, parity = _outcome_fields(n)
    mass = {0: 0.0, 1: 0.0}
    win_mass = {0: 0.0, 1: 0.0}
    for x in (0, 1):
        for y in (0, 1):
            dist = joint_distribution(state, [settings.alice[x], settings.bob1[y], *settings.rest])
            wins = parity_chsh_wins_bulk(x, y, a, b1, parity)
            for par in (0, 1):
                sel = parity == par
                mass[par] += float(dist[sel].sum()) / 4.0
                win_mass[par] += float(dist[sel & wins].sum()) / 4.0
    return {par: (mass[par], win_mass[par] / mass[par] if mass[par] > 0 else 0.0) for par in (0, 1)}
