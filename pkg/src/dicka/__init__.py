"""Device-independent conference key agreement: simulator and key-rate workbench."""

from .errors import (
    DimensionMismatchError,
    DomainError,
    InvalidInputError,
    LengthMismatchError,
    SizeOutOfRangeError,
)
from .game import (
    DeterministicStrategy,
    GameRound,
    SettingsBundle,
    classical_value,
    conditioned_win_probabilities,
    honest_settings,
    parity_chsh_wins,
    quantum_win_probability,
)
from .hashing import ToeplitzSeed, bits_to_hex, hex_to_bits, random_seed, toeplitz_hash, verify_hash
from .keyrate import (
    CLASSICAL_BOUND,
    EpsilonBudget,
    KeyLengthBreakdown,
    RateParams,
    TSIRELSON_BOUND,
    asymptotic_rate_cka,
    asymptotic_rate_diqkd,
    binary_entropy,
    completeness_bound,
    finite_key_length,
    leak_ec_bounds,
    min_tradeoff_fhat,
    min_tradeoff_slope,
    pdep_to_qber,
    pexp_formula,
    qber_to_pdep,
    tangent_f,
    v_tilde,
)
from .protocol import (
    KeyMaterial,
    ProtocolConfig,
    RoundRecord,
    Transcript,
    amplify,
    estimate_parameters,
    read_summary,
    reconcile,
    run_protocol,
)
from .quantum import (
    MAX_QUBITS,
    MixedState,
    NoiseModel,
    Observable,
    PureState,
    depolarize_each,
    joint_distribution,
    make_ghz,
    sample_outcomes,
    setting_observable,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
