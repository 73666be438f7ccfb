"""End-to-end N-party conference-key protocol over simulated channels.

Per round, a noisy GHZ state is prepared and measured with the honest
settings: on test rounds (probability mu) Alice and Bob_1 draw uniform
inputs while the remaining Bobs use input 1; on key rounds everyone
measures Z.  Classical post-processing then runs reconciliation,
parameter estimation against the abort threshold, and privacy
amplification.  All randomness flows from named substreams of a single
64-bit seed, so a configuration determines its transcript byte for byte.

Reconciliation is ideal-with-verification: each Bob's string is corrected
to Alice's by an oracle channel and checked against a Toeplitz tag of
Alice's string; the classical cost is charged analytically through the
key-length formula rather than transmitted bit for bit.  The Bobs'
test-round outputs are disclosed verbatim, so Alice's guesses for
parameter estimation are exact.  State preparation depends only on the
configuration, never on earlier outcomes.

Transcript text format (LF line endings)
----------------------------------------
One line per round::

    <i> <t> <x> <y1> <a> <bob bits> <c>

with ``c`` printed as ``1`` (win), ``0`` (lose) or ``-`` (untested).  Then
hex blocks (bit strings packed little-endian per byte, see
:mod:`dicka.hashing`)::

    EC_SEED <in_len> <out_len> <hex>
    EC_TAG <n_bits> <hex>
    EC_DISCLOSE <k> <n_bits> <hex>        (one line per Bob k = 1..N-1)
    PA_SEED <in_len> <out_len> <hex>      (only when a key was extracted)

and a final JSON summary line ``SUMMARY {...}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .errors import DomainError, InvalidInputError, LengthMismatchError
from .game import parity_chsh_wins_bulk
from .hashing import ToeplitzSeed, bits_to_hex, random_seed, toeplitz_hash, verify_hash
from .keyrate import (
    EpsilonBudget,
    RateParams,
    TSIRELSON_BOUND,
    CLASSICAL_BOUND,
    finite_key_length,
    qber_to_pdep,
)
from .quantum import MixedState, NoiseModel, depolarize_each, joint_distribution, make_ghz, setting_observable

ABORT_EC = "ec_failure"
ABORT_PE = "parameter_estimation"


@dataclass(frozen=True)
class ProtocolConfig:
    """All protocol and security parameters for one run."""

    n_parties: int
    n_rounds: int
    mu: float
    delta: float
    qber: float
    eps: EpsilonBudget
    rng_seed: int
    key_len: Optional[int] = None  # override; None means use the computed length
    variant: str = "main"

    def __post_init__(self) -> None:
        if self.n_parties < 3:
            raise DomainError(f"protocol needs at least 3 parties, got {self.n_parties}")
        if self.n_rounds < 0:
            raise DomainError(f"n_rounds must be nonnegative, got {self.n_rounds}")
        if not 0.0 < self.mu <= 1.0:
            raise DomainError(f"mu must lie in (0, 1], got {self.mu!r}")
        if not CLASSICAL_BOUND < self.delta < TSIRELSON_BOUND:
            raise DomainError(
                f"delta must lie strictly in ({CLASSICAL_BOUND}, {TSIRELSON_BOUND}), got {self.delta!r}"
            )
        if not 0.0 <= self.qber < 0.5:
            raise DomainError(f"qber must lie in [0, 1/2), got {self.qber!r}")
        if not 0 <= self.rng_seed < 2**64:
            raise DomainError("rng_seed must be an unsigned 64-bit integer")
        if self.key_len is not None and self.key_len < 0:
            raise DomainError("key_len override must be nonnegative")

    def rate_params(self) -> RateParams:
        return RateParams(
            n_parties=self.n_parties,
            mu=self.mu,
            delta=self.delta,
            qber=self.qber,
            n_rounds=self.n_rounds,
            eps=self.eps,
            variant=self.variant,
        )


@dataclass(frozen=True)
class RoundRecord:
    """One round: test flag, inputs, outputs, and the scored result."""

    index: int
    t: int
    x: int
    y1: int
    a_out: int
    b_outs: str
    c: str  # "win" | "lose" | "untested"


@dataclass
class KeyMaterial:
    """A party's raw measurement string and its hashed final key."""

    raw_key: np.ndarray
    final_key: np.ndarray


_C_LABEL = {1: "win", 0: "lose", -1: "untested"}
_C_CHAR = {1: "1", 0: "0", -1: "-"}


@dataclass
class Transcript:
    """Complete record of one protocol run (built up in stages)."""

    n_parties: int
    n_rounds: int
    rng_seed: int
    t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    x: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    y1: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    outcomes: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.uint8))
    c: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int8))
    ec_seed: Optional[ToeplitzSeed] = None
    ec_tag: Optional[np.ndarray] = None
    disclosures: Optional[list[np.ndarray]] = None
    raw_keys: Optional[list[np.ndarray]] = None  # Alice first, then the Bobs
    pa_seed: Optional[ToeplitzSeed] = None
    keys: Optional[list[np.ndarray]] = None
    abort: Optional[str] = None
    pe_vacuous: bool = False

    @property
    def n_test_rounds(self) -> int:
        return int(self.t.sum())

    @property
    def n_wins(self) -> Optional[int]:
        if (self.c >= 0).any():
            return int((self.c == 1).sum())
        return None

    @property
    def win_rate(self) -> Optional[float]:
        wins = self.n_wins
        tests = self.n_test_rounds
        if wins is None or tests == 0:
            return None
        return wins / tests

    @property
    def keys_identical(self) -> Optional[bool]:
        if self.keys is None:
            return None
        first = self.keys[0]
        return all(np.array_equal(first, k) for k in self.keys[1:])

    def key_material(self, party: int) -> KeyMaterial:
        """Raw and final key of one party (index 0 = Alice, k = Bob_k)."""
        if self.raw_keys is None or self.keys is None:
            raise InvalidInputError("keys are only available after privacy amplification")
        return KeyMaterial(raw_key=self.raw_keys[party], final_key=self.keys[party])

    def round(self, i: int) -> RoundRecord:
        bobs = "".join(str(int(b)) for b in self.outcomes[i, 1:])
        return RoundRecord(
            index=i,
            t=int(self.t[i]),
            x=int(self.x[i]),
            y1=int(self.y1[i]),
            a_out=int(self.outcomes[i, 0]),
            b_outs=bobs,
            c=_C_LABEL[int(self.c[i])],
        )

    def rounds(self) -> Iterator[RoundRecord]:
        for i in range(self.n_rounds):
            yield self.round(i)

    def summary(self) -> dict:
        return {
            "abort": self.abort,
            "key_length": 0 if self.keys is None else int(len(self.keys[0])),
            "keys": None if self.keys is None else [bits_to_hex(k) for k in self.keys],
            "keys_identical": self.keys_identical,
            "n_parties": self.n_parties,
            "n_rounds": self.n_rounds,
            "n_test_rounds": self.n_test_rounds,
            "n_wins": self.n_wins,
            "pe_vacuous": self.pe_vacuous,
            "seed": self.rng_seed,
            "win_rate": self.win_rate,
        }

    def serialize(self) -> str:
        lines = []
        bobs_cols = self.outcomes[:, 1:] if self.n_rounds else np.zeros((0, 0), dtype=np.uint8)
        for i in range(self.n_rounds):
            bobs = "".join(str(int(b)) for b in bobs_cols[i])
            lines.append(
                f"{i} {int(self.t[i])} {int(self.x[i])} {int(self.y1[i])} "
                f"{int(self.outcomes[i, 0])} {bobs} {_C_CHAR[int(self.c[i])]}"
            )
        if self.ec_seed is not None:
            lines.append(
                f"EC_SEED {self.ec_seed.in_len} {self.ec_seed.out_len} "
                f"{bits_to_hex(self.ec_seed.diagonal_bits)}"
            )
            lines.append(f"EC_TAG {len(self.ec_tag)} {bits_to_hex(self.ec_tag)}")
            for k, disc in enumerate(self.disclosures, start=1):
                lines.append(f"EC_DISCLOSE {k} {len(disc)} {bits_to_hex(disc)}")
        if self.pa_seed is not None:
            lines.append(
                f"PA_SEED {self.pa_seed.in_len} {self.pa_seed.out_len} "
                f"{bits_to_hex(self.pa_seed.diagonal_bits)}"
            )
        lines.append("SUMMARY " + json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"


def read_summary(text: str) -> dict:
    """Parse the SUMMARY line out of a serialized transcript."""
    for line in reversed(text.splitlines()):
        if line.startswith("SUMMARY "):
            return json.loads(line[len("SUMMARY "):])
    raise ValueError("transcript has no SUMMARY line")


@dataclass
class _Streams:
    """Named substreams of the run seed; one per stochastic operation."""

    tests: np.random.Generator
    inputs: np.random.Generator
    outcomes: np.random.Generator
    ec: np.random.Generator
    pa: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "_Streams":
        children = np.random.SeedSequence(seed).spawn(5)
        gens = [np.random.Generator(np.random.PCG64(c)) for c in children]
        return cls(*gens)


@lru_cache(maxsize=16)
def _honest_state(n_parties: int, qber: float) -> MixedState:
    noise = NoiseModel(qber_to_pdep(qber))
    return depolarize_each(make_ghz(n_parties), noise)


@lru_cache(maxsize=16)
def _round_distributions(n_parties: int, qber: float) -> dict[int, np.ndarray]:
    """Cumulative outcome distributions keyed by setting class.

    Class 0 is the key round (all Z); classes 1 + 2x + y are the four test
    questions with the remaining Bobs on input 1.
    """
    state = _honest_state(n_parties, qber)
    n_rest = n_parties - 2
    tables = {}
    key_settings = [
        setting_observable("alice", 0),
        setting_observable("bob1", 2),
        *[setting_observable("bobk", 0)] * n_rest,
    ]
    tables[0] = np.cumsum(joint_distribution(state, key_settings))
    for x in (0, 1):
        for y in (0, 1):
            settings = [
                setting_observable("alice", x),
                setting_observable("bob1", y),
                *[setting_observable("bobk", 1)] * n_rest,
            ]
            tables[1 + 2 * x + y] = np.cumsum(joint_distribution(state, settings))
    return tables


def _measure_rounds(config: ProtocolConfig, streams: _Streams) -> Transcript:
    """Protocol steps 1-2: state preparation, input choice, measurement."""
    n, n_par = config.n_rounds, config.n_parties
    tr = Transcript(n_parties=n_par, n_rounds=n, rng_seed=config.rng_seed)
    tr.outcomes = np.zeros((n, n_par), dtype=np.uint8)
    tr.c = np.full(n, -1, dtype=np.int8)
    if n == 0:
        return tr
    t = (streams.tests.random(n) < config.mu).astype(np.uint8)
    xs = streams.inputs.integers(0, 2, size=n).astype(np.uint8)
    ys = streams.inputs.integers(0, 2, size=n).astype(np.uint8)
    tr.t = t
    tr.x = np.where(t == 1, xs, 0).astype(np.uint8)
    tr.y1 = np.where(t == 1, ys, 2).astype(np.uint8)

    tables = _round_distributions(n_par, config.qber)
    cls = np.where(t == 1, 1 + 2 * tr.x.astype(np.int64) + tr.y1.astype(np.int64), 0)
    u = streams.outcomes.random(n)
    idx = np.zeros(n, dtype=np.int64)
    for cid, cum in tables.items():
        mask = cls == cid
        if mask.any():
            idx[mask] = np.minimum(np.searchsorted(cum, u[mask], side="right"), len(cum) - 1)
    shifts = np.arange(n_par - 1, -1, -1, dtype=np.int64)
    tr.outcomes = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return tr


def _tag_length(eps_ec_prime: float, n_rounds: int) -> int:
    # a verification tag cannot usefully exceed the string it authenticates
    return max(1, min(n_rounds, math.ceil(-math.log2(eps_ec_prime))))


def reconcile(
    config: ProtocolConfig,
    transcript: Transcript,
    rng: np.random.Generator,
    bob_keys: Optional[list[np.ndarray]] = None,
) -> Transcript:
    """Protocol step 3: error correction with verification.

    Each Bob's raw key is his outcome string corrected to Alice's by an
    oracle channel, then checked against a Toeplitz tag of Alice's string
    (tag length ceil(log2(1/eps'_EC))).  Each Bob also disclosures his
    test-round output bits verbatim, which later serve as Alice's exact
    guesses.  ``bob_keys`` substitutes the corrected strings, as a seam for
    corruption experiments; any verification failure aborts the run.
    """
    n, n_par = transcript.n_rounds, transcript.n_parties
    alice = transcript.outcomes[:, 0].copy() if n else np.zeros(0, dtype=np.uint8)
    if n == 0:
        transcript.raw_keys = [alice] + [alice.copy() for _ in range(n_par - 1)]
        transcript.disclosures = [np.zeros(0, dtype=np.uint8) for _ in range(n_par - 1)]
        return transcript

    seed = random_seed(n, _tag_length(config.eps.ec_prime, n), rng)
    tag = toeplitz_hash(seed, alice)
    if bob_keys is None:
        bob_keys = [alice.copy() for _ in range(n_par - 1)]
    elif len(bob_keys) != n_par - 1:
        raise LengthMismatchError(f"need {n_par - 1} Bob keys, got {len(bob_keys)}")

    transcript.ec_seed = seed
    transcript.ec_tag = tag
    test_mask = transcript.t == 1
    transcript.disclosures = [
        transcript.outcomes[test_mask, k].copy() for k in range(1, n_par)
    ]
    transcript.raw_keys = [alice] + list(bob_keys)

    if not all(verify_hash(seed, cand, tag) for cand in bob_keys):
        transcript.abort = ABORT_EC
    return transcript


def estimate_parameters(config: ProtocolConfig, transcript: Transcript) -> Transcript:
    """Protocol step 4: score test rounds and apply the abort threshold.

    Alice scores each test round with her own output and her (exact)
    guesses of the Bobs' outputs; the run aborts iff the number of wins
    falls below delta times the number of test rounds.  Zero test rounds
    pass vacuously and are flagged.
    """
    if transcript.disclosures is None:
        raise InvalidInputError("reconciliation must run before parameter estimation")
    test_mask = transcript.t == 1
    n_tests = int(test_mask.sum())
    if n_tests == 0:
        transcript.pe_vacuous = True
        return transcript
    a = transcript.outcomes[test_mask, 0]
    b1 = transcript.disclosures[0]
    rest_parity = np.zeros(n_tests, dtype=np.int64)
    for disc in transcript.disclosures[1:]:
        rest_parity ^= disc.astype(np.int64)
    wins = parity_chsh_wins_bulk(transcript.x[test_mask], transcript.y1[test_mask], a, b1, rest_parity)
    transcript.c[test_mask] = wins.astype(np.int8)
    # tiny slack so a float representation of delta cannot turn an
    # exact-threshold pass into an abort (e.g. 80 wins of 100 at delta=0.8)
    if int(wins.sum()) < config.delta * n_tests - 1e-9:
        transcript.abort = ABORT_PE
    return transcript


def amplify(
    config: ProtocolConfig,
    transcript: Transcript,
    key_len: int,
    rng: np.random.Generator,
) -> Transcript:
    """Protocol step 5: hash every party's raw key down to ``key_len`` bits."""
    if transcript.abort is not None:
        raise InvalidInputError("cannot amplify an aborted run")
    if transcript.raw_keys is None:
        raise InvalidInputError("reconciliation must run before privacy amplification")
    n = transcript.n_rounds
    if key_len > n:
        raise LengthMismatchError(f"key length {key_len} exceeds round count {n}")
    if key_len == 0 or n == 0:
        transcript.keys = [np.zeros(0, dtype=np.uint8) for _ in transcript.raw_keys]
        return transcript
    seed = random_seed(n, key_len, rng)
    transcript.pa_seed = seed
    transcript.keys = [toeplitz_hash(seed, raw) for raw in transcript.raw_keys]
    return transcript


def run_protocol(config: ProtocolConfig) -> Transcript:
    """Execute the full protocol; aborts land in the transcript, not errors."""
    streams = _Streams.from_seed(config.rng_seed)
    transcript = _measure_rounds(config, streams)
    reconcile(config, transcript, streams.ec)
    if transcript.abort is not None:
        return transcript
    estimate_parameters(config, transcript)
    if transcript.abort is not None:
        return transcript
    if config.key_len is not None:
        key_len = config.key_len
    else:
        key_len = finite_key_length(config.rate_params()).key_length
    amplify(config, transcript, key_len, streams.pa)
    return transcript
