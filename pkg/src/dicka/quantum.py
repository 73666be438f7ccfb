"""Exact linear-algebra substrate for the protocol simulator.

Builds N-qubit GHZ states, applies per-qubit depolarizing noise, evaluates
joint measurement-outcome distributions via the Born rule, and samples
outcomes from seeded streams.

Conventions
-----------
* Outcome bit 0 corresponds to the +1 eigenvalue of an observable and bit 1
  to the -1 eigenvalue.
* A probability table over outcome strings is a flat array of length 2**N,
  indexed by the integer whose binary expansion is the outcome string with
  party 0 in the most significant position.

Everything here is a pure function of its inputs; there is no shared
mutable state, so evaluation is safe to parallelise across parameter
points or rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, DomainError, InvalidInputError, SizeOutOfRangeError

MAX_QUBITS = 12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

RngLike = Union[int, np.random.Generator]


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(np.random.PCG64(rng))


@dataclass(frozen=True)
class PureState:
    """State vector of ``n_qubits`` qubits, normalised to 1 within 1e-12."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise SizeOutOfRangeError("n_qubits must be positive")
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (2**self.n_qubits,):
            raise DimensionMismatchError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amp.shape}"
            )
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"state is not normalised: |psi|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amp)

    def density_matrix(self) -> "MixedState":
        return MixedState(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class MixedState:
    """Density operator: unit trace, Hermitian, positive semidefinite."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise SizeOutOfRangeError("n_qubits must be positive")
        dim = 2**self.n_qubits
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (dim, dim):
            raise DimensionMismatchError(f"expected {dim}x{dim} matrix, got {mat.shape}")
        if abs(np.trace(mat).real - 1.0) > 1e-12 or abs(np.trace(mat).imag) > 1e-12:
            raise DomainError(f"trace is {np.trace(mat)!r}, expected 1")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise DomainError("matrix is not Hermitian within 1e-12")
        min_eig = float(np.linalg.eigvalsh(mat)[0])
        if min_eig < -1e-10:
            raise DomainError(f"matrix is not PSD: min eigenvalue {min_eig!r}")
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class Observable:
    """Two-outcome observable: a 2x2 Hermitian involution (eigenvalues +-1)."""

    label: str
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (2, 2):
            raise DimensionMismatchError("observable must be 2x2")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise DomainError("observable is not Hermitian")
        if np.max(np.abs(mat @ mat - PAULI_I)) > 1e-12:
            raise DomainError("observable squared is not the identity")
        object.__setattr__(self, "matrix", mat)

    def eigenbasis(self) -> np.ndarray:
        """Unitary whose column 0 is the +1 eigenvector, column 1 the -1."""
        _, vecs = np.linalg.eigh(self.matrix)
        # eigh sorts eigenvalues ascending, so the -1 vector comes first
        return vecs[:, ::-1]

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(P_+, P_-) eigenprojectors; exact since the matrix is an involution."""
        return (PAULI_I + self.matrix) / 2, (PAULI_I - self.matrix) / 2


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit depolarizing probability."""

    p_dep: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_dep <= 1.0:
            raise DomainError(f"p_dep must lie in [0, 1], got {self.p_dep!r}")


_OBS_Z = Observable("Z", PAULI_Z)
_OBS_X = Observable("X", PAULI_X)
_OBS_ZPX = Observable("ZplusX", (PAULI_Z + PAULI_X) / np.sqrt(2.0))
_OBS_ZMX = Observable("ZminusX", (PAULI_Z - PAULI_X) / np.sqrt(2.0))

_SETTING_TABLES = {
    "alice": {0: _OBS_Z, 1: _OBS_X},
    "bob1": {2: _OBS_Z, 0: _OBS_ZPX, 1: _OBS_ZMX},
    "bobk": {0: _OBS_Z, 1: _OBS_X},
}


def make_ghz(n_qubits: int) -> PureState:
    """GHZ state (|0...0> + |1...1>)/sqrt(2) on 2..12 qubits."""
    if not 2 <= n_qubits <= MAX_QUBITS:
        raise SizeOutOfRangeError(
            f"n_qubits must lie in [2, {MAX_QUBITS}] for exact simulation, got {n_qubits}"
        )
    amp = np.zeros(2**n_qubits, dtype=complex)
    amp[0] = amp[-1] = 1.0 / np.sqrt(2.0)
    return PureState(n_qubits, amp)


def _depolarize_qubit(rho: np.ndarray, n_qubits: int, qubit: int, p: float) -> np.ndarray:
    """Apply rho -> (1-p) rho + p (I/2 (x) tr_q rho) on one qubit."""
    da = 2**qubit
    db = 2 ** (n_qubits - qubit - 1)
    t = rho.reshape(da, 2, db, da, 2, db)
    partial = t[:, 0, :, :, 0, :] + t[:, 1, :, :, 1, :]
    out = (1.0 - p) * t
    out[:, 0, :, :, 0, :] += (p / 2.0) * partial
    out[:, 1, :, :, 1, :] += (p / 2.0) * partial
    return out.reshape(2**n_qubits, 2**n_qubits)


def depolarize_each(state: Union[PureState, MixedState], noise: NoiseModel) -> MixedState:
    """Apply the depolarizing channel independently to every qubit."""
    if isinstance(state, PureState):
        rho = np.outer(state.amplitudes, state.amplitudes.conj())
    else:
        rho = state.matrix.copy()
    for q in range(state.n_qubits):
        rho = _depolarize_qubit(rho, state.n_qubits, q, noise.p_dep)
    return MixedState(state.n_qubits, rho)


def setting_observable(party_role: str, input: int) -> Observable:
    """Honest input-to-observable mapping for a party role.

    Alice: 0 -> Z, 1 -> X.  Bob1: 2 -> Z, 0 -> (Z+X)/sqrt2, 1 -> (Z-X)/sqrt2.
    BobK (k >= 2): 0 -> Z, 1 -> X.
    """
    role = party_role.lower()
    table = _SETTING_TABLES.get(role)
    if table is None:
        raise InvalidInputError(f"unknown party role {party_role!r}")
    obs = table.get(input)
    if obs is None:
        raise InvalidInputError(f"input {input!r} is outside the domain of role {party_role!r}")
    return obs


def joint_distribution(state: MixedState, settings: Sequence[Observable]) -> np.ndarray:
    """Born-rule outcome distribution for one observable per qubit.

    Entry b is Tr[rho (x)_k P_{b_k}] with P the eigenprojectors of party k's
    observable; party 0 occupies the most significant bit of the index.
    """
    n = state.n_qubits
    if len(settings) != n:
        raise DimensionMismatchError(f"need {n} observables, got {len(settings)}")
    t = state.matrix.reshape((2,) * (2 * n))
    for q, obs in enumerate(settings):
        u = obs.eigenbasis()
        t = np.moveaxis(np.tensordot(u.conj().T, t, axes=(1, q)), 0, q)
        t = np.moveaxis(np.tensordot(t, u, axes=(n + q, 0)), -1, n + q)
    probs = np.diagonal(t.reshape(2**n, 2**n)).real.copy()
    np.clip(probs, 0.0, None, out=probs)
    return probs


def sample_outcomes(distribution: np.ndarray, rng: RngLike) -> str:
    """Draw one outcome string by inverse CDF on a seeded stream.

    The same seed (or generator state) and distribution always yield the
    same outcome.
    """
    dist = np.asarray(distribution, dtype=float)
    if dist.ndim != 1 or len(dist) & (len(dist) - 1):
        raise DimensionMismatchError("distribution length must be a power of two")
    if abs(float(dist.sum()) - 1.0) > 1e-10:
        raise DomainError(f"distribution sums to {dist.sum()!r}, expected 1")
    gen = _as_generator(rng)
    u = gen.random()
    idx = int(np.searchsorted(np.cumsum(dist), u, side="right"))
    idx = min(idx, len(dist) - 1)
    n = len(dist).bit_length() - 1
    return format(idx, f"0{n}b")
