"""Closed-form key-rate engine.

Contains every analytic ingredient of the security accounting: binary
entropy, the convex min-tradeoff bound on certified one-round entropy as a
function of the winning probability, its affine tangent, the entropy
accumulation second-order coefficient, error-correction leakage bounds, the
finite-size key length with its inner tangent-point optimisation, the
completeness (honest-abort) bound, and the asymptotic rates of the
conference-key protocol and of the (N-1)-pairwise-QKD baseline.

All logarithms are base 2 except the exponential inside the Hoeffding-style
completeness bound, which is natural.

Two published variants of the second-order coefficient and the
privacy-amplification penalty circulate; they differ by a 1/mu factor on
the tradeoff slope and by a factor 2 on log(1/eps_PA).  The ``variant``
switch ("main", the default, or "appendix") selects between them and
changes nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

SQRT2 = math.sqrt(2.0)

#: Maximum winning probability attainable by quantum strategies.
TSIRELSON_BOUND = 0.5 + 0.5 / SQRT2

#: Maximum winning probability attainable by classical strategies.
CLASSICAL_BOUND = 0.75

_VARIANTS = ("main", "appendix")

_LOG2_13 = math.log2(13.0)
_LOG2_7 = math.log2(7.0)


@dataclass(frozen=True)
class EpsilonBudget:
    """Security-parameter budget.

    ``smooth`` is the smoothing parameter, ``pa`` the privacy-amplification
    error, ``ea`` the entropy-accumulation security parameter, ``ec`` /
    ``ec_prime`` / ``ec_tilde`` the error-correction abort, residual-error
    and information-bound parameters.  All lie in (0, 1) and
    ec = ec_tilde + ec_prime.
    """

    smooth: float
    pa: float
    ea: float
    ec: float
    ec_prime: float
    ec_tilde: float

    def __post_init__(self) -> None:
        for name in ("smooth", "pa", "ea", "ec", "ec_prime", "ec_tilde"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise DomainError(f"eps_{name} must lie in (0, 1), got {value!r}")
        if abs(self.ec - (self.ec_prime + self.ec_tilde)) > 1e-12 * self.ec:
            raise DomainError(
                f"eps_ec must equal eps_ec_tilde + eps_ec_prime "
                f"({self.ec!r} != {self.ec_tilde!r} + {self.ec_prime!r})"
            )


@dataclass(frozen=True)
class RateParams:
    """Everything the finite-size accounting needs.

    n_parties N >= 2, test probability mu in (0, 1], abort threshold delta
    strictly inside (3/4, Tsirelson), QBER in [0, 1/2), number of rounds
    n >= 0, the epsilon budget, and the formula variant.
    """

    n_parties: int
    mu: float
    delta: float
    qber: float
    n_rounds: int
    eps: EpsilonBudget
    variant: str = "main"

    def __post_init__(self) -> None:
        if self.n_parties < 2:
            raise DomainError(f"need at least 2 parties, got {self.n_parties}")
        if not 0.0 < self.mu <= 1.0:
            raise DomainError(f"mu must lie in (0, 1], got {self.mu!r}")
        if not CLASSICAL_BOUND < self.delta < TSIRELSON_BOUND:
            raise DomainError(
                f"delta must lie strictly in ({CLASSICAL_BOUND}, {TSIRELSON_BOUND}), got {self.delta!r}"
            )
        if not 0.0 <= self.qber < 0.5:
            raise DomainError(f"qber must lie in [0, 1/2), got {self.qber!r}")
        if self.n_rounds < 0:
            raise DomainError(f"n_rounds must be nonnegative, got {self.n_rounds!r}")
        if self.variant not in _VARIANTS:
            raise DomainError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")


@dataclass(frozen=True)
class KeyLengthBreakdown:
    """Signed additive terms of the finite-size key length.

    raw_length = entropy_term - second_order + smoothing_term - pa_term
               - leak_alice - leak_bobs, and key_length = max(0, floor(raw)).
    """

    entropy_term: float
    second_order: float
    smoothing_term: float
    pa_term: float
    leak_alice: float
    leak_bobs: float
    p_opt_chosen: float
    key_length: int

    @property
    def raw_length(self) -> float:
        return (
            self.entropy_term
            - self.second_order
            + self.smoothing_term
            - self.pa_term
            - self.leak_alice
            - self.leak_bobs
        )


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2(1-x), with 0 log 0 = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def min_tradeoff_fhat(p_w: float, mu: float) -> float:
    """Certified one-round entropy as a function of the winning probability.

    (1 - mu/2) * (1 - h(1/2 + 1/2 sqrt((4 p_w - 2)^2 - 1))) on
    [3/4, Tsirelson].  Below 3/4 the square-root argument is negative and no
    entropy is certified, so the value clamps to 0; above the Tsirelson
    bound the input is unphysical and rejected.
    """
    if not 0.0 < mu <= 1.0:
        raise DomainError(f"mu must lie in (0, 1], got {mu!r}")
    if p_w < 0.0 or p_w > TSIRELSON_BOUND + 1e-12:
        raise DomainError(f"winning probability {p_w!r} outside [0, Tsirelson]")
    if p_w < CLASSICAL_BOUND:
        return 0.0
    s = 4.0 * p_w - 2.0
    arg = max(s * s - 1.0, 0.0)
    x = min(0.5 + 0.5 * math.sqrt(arg), 1.0)
    return (1.0 - mu / 2.0) * (1.0 - binary_entropy(x))


def _check_popt(p_opt: float, mu: float) -> None:
    if not mu * CLASSICAL_BOUND < p_opt < mu * TSIRELSON_BOUND:
        raise DomainError(
            f"p_opt must lie strictly in (mu*3/4, mu*(1/2+1/(2*sqrt2))), got {p_opt!r} for mu={mu!r}"
        )


def min_tradeoff_slope(p_opt: float, mu: float) -> float:
    """Analytic derivative of the tradeoff bound on the frequency scale.

    The bound as a function of the win frequency q1 = mu * p_w is
    fhat_q(q1) = min_tradeoff_fhat(q1 / mu, mu); this returns
    d fhat_q / d q1 at q1 = p_opt, by the closed-form chain rule.
    """
    _check_popt(p_opt, mu)
    s = 4.0 * p_opt / mu - 2.0
    g = math.sqrt(s * s - 1.0)
    # log2((1+g)/(1-g)) evaluated stably for small g
    log_ratio = (math.log1p(g) - math.log1p(-g)) / math.log(2.0)
    return (1.0 - mu / 2.0) * log_ratio * (2.0 / mu) * (s / g)


def tangent_f(q1: float, p_opt: float, mu: float) -> float:
    """Affine tangent to the tradeoff bound at p_opt, evaluated at q1.

    q1 is a win frequency in [0, mu]; the tangent touches the curve at
    q1 = p_opt and supports it from below elsewhere.
    """
    _check_popt(p_opt, mu)
    if not 0.0 <= q1 <= mu:
        raise DomainError(f"q1 must lie in [0, mu], got {q1!r}")
    slope = min_tradeoff_slope(p_opt, mu)
    return slope * (q1 - p_opt) + min_tradeoff_fhat(p_opt / mu, mu)


def _one_minus_sqrt_term(eps: float) -> float:
    """1 - sqrt(1 - (eps/4)^2), computed without cancellation for tiny eps."""
    t = (eps / 4.0) ** 2
    return -math.expm1(0.5 * math.log1p(-t))


def v_tilde(p_opt: float, mu: float, eps_smooth: float, eps_ea: float, variant: str = "main") -> float:
    """Second-order (sqrt-n) coefficient of the entropy accumulation bound.

    2 (log2 13 + slope_term) sqrt(1 - 2 log2(eps * eps_EA))
    + 2 log2 7 sqrt(-log2(eps_EA^2 (1 - sqrt(1 - (eps/4)^2)))),
    where slope_term is slope/mu + 1 for the "main" variant and slope + 1
    for the "appendix" variant.
    """
    if variant not in _VARIANTS:
        raise DomainError(f"variant must be one of {_VARIANTS}, got {variant!r}")
    for name, value in (("eps_smooth", eps_smooth), ("eps_ea", eps_ea)):
        if not 0.0 < value < 1.0:
            raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
    slope = min_tradeoff_slope(p_opt, mu)
    slope_term = slope / mu + 1.0 if variant == "main" else slope + 1.0
    first = 2.0 * (_LOG2_13 + slope_term) * math.sqrt(1.0 - 2.0 * math.log2(eps_smooth * eps_ea))
    eta = _one_minus_sqrt_term(eps_smooth)
    second = 2.0 * _LOG2_7 * math.sqrt(-(2.0 * math.log2(eps_ea) + math.log2(eta)))
    return first + second


def leak_ec_bounds(params: RateParams) -> tuple[float, float]:
    """(leak_A, leak_Bk): error-correction leakage bounds in bits.

    leak_A covers the one-way reconciliation message that lets every Bob
    reproduce Alice's n-bit string; leak_Bk covers one Bob's disclosure of
    his test-round bits.  Both carry identical sqrt-n and constant
    corrections driven by eps_ec_tilde.
    """
    n = params.n_rounds
    mu = params.mu
    et = params.eps.ec_tilde
    # log2(8 / et^2) without forming the (possibly huge) quotient
    log_8_et2 = 3.0 - 2.0 * math.log2(et)
    sqrt_corr = 4.0 * math.log2(2.0 * SQRT2 + 1.0) * math.sqrt(2.0 * log_8_et2) * math.sqrt(n)
    const_corr = math.log2(8.0 / et**2 + 2.0 / (2.0 - et))
    leak_alice = n * ((1.0 - mu) * binary_entropy(params.qber) + mu) + sqrt_corr + const_corr
    leak_bob = n * mu + sqrt_corr + const_corr
    return leak_alice, leak_bob


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _maximize_scalar(fn, lo: float, hi: float, grid_points: int, tol: float) -> float:
    """Global grid scan over the open interval, then golden-section refinement."""
    best_i, best_v = 0, -math.inf
    step = (hi - lo) / (grid_points + 1)
    for i in range(1, grid_points + 1):
        v = fn(lo + i * step)
        if v > best_v:
            best_i, best_v = i, v
    a = lo + max(best_i - 1, 0.5) * step
    b = lo + min(best_i + 1, grid_points + 0.5) * step
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def finite_key_length(params: RateParams) -> KeyLengthBreakdown:
    """Finite-size key length with the tangent point optimised.

    Maximises n (f(mu*delta, p_opt) - mu) - v_tilde(p_opt) sqrt(n) over
    p_opt = mu * delta_opt with delta_opt on a 2000-point grid in
    (3/4, Tsirelson) refined by golden section to 1e-10 width, then adds the
    smoothing credit and subtracts the privacy-amplification penalty and the
    error-correction leakages.  The returned length clamps at zero; the
    signed sum survives in raw_length.
    """
    n = params.n_rounds
    mu = params.mu
    eps = params.eps
    q1 = mu * params.delta
    sqrt_n = math.sqrt(n)

    def objective(delta_opt: float) -> float:
        p_opt = mu * delta_opt
        value = n * (tangent_f(q1, p_opt, mu) - mu)
        return value - v_tilde(p_opt, mu, eps.smooth, eps.ea, params.variant) * sqrt_n

    delta_opt = _maximize_scalar(objective, CLASSICAL_BOUND, TSIRELSON_BOUND, 2000, 1e-10)
    p_opt = mu * delta_opt

    entropy_term = n * (tangent_f(q1, p_opt, mu) - mu)
    second_order = v_tilde(p_opt, mu, eps.smooth, eps.ea, params.variant) * sqrt_n
    smoothing_term = 3.0 * math.log2(_one_minus_sqrt_term(eps.smooth))
    pa_factor = 2.0 if params.variant == "main" else 1.0
    pa_term = pa_factor * math.log2(1.0 / eps.pa)
    leak_alice, leak_bob = leak_ec_bounds(params)
    leak_bobs = (params.n_parties - 1) * leak_bob

    raw = entropy_term - second_order + smoothing_term - pa_term - leak_alice - leak_bobs
    return KeyLengthBreakdown(
        entropy_term=entropy_term,
        second_order=second_order,
        smoothing_term=smoothing_term,
        pa_term=pa_term,
        leak_alice=leak_alice,
        leak_bobs=leak_bobs,
        p_opt_chosen=p_opt,
        key_length=max(0, math.floor(raw)),
    )


def completeness_bound(params: RateParams, p_exp: float) -> float:
    """Upper bound on the honest abort probability.

    (N-1)(2 eps_EC + eps'_EC) + (1 - mu (1 - exp(-2 (p_exp - delta)^2)))^n,
    valid when the honestly expected winning probability exceeds the abort
    threshold.  The exponential is natural.
    """
    if p_exp <= params.delta:
        raise DomainError(
            f"completeness bound needs p_exp > delta, got {p_exp!r} <= {params.delta!r}"
        )
    ec_part = (params.n_parties - 1) * (2.0 * params.eps.ec + params.eps.ec_prime)
    shrink = params.mu * (-math.expm1(-2.0 * (p_exp - params.delta) ** 2))
    tail = math.exp(params.n_rounds * math.log1p(-shrink))
    return ec_part + tail


def qber_to_pdep(qber: float) -> float:
    """Depolarizing probability giving QBER Q between Alice and each Bob."""
    if not 0.0 <= qber < 0.5:
        raise DomainError(f"qber must lie in [0, 1/2), got {qber!r}")
    return 1.0 - math.sqrt(1.0 - 2.0 * qber)


def pdep_to_qber(p_dep: float) -> float:
    """Inverse of qber_to_pdep: Q = (2 p - p^2) / 2."""
    if not 0.0 <= p_dep <= 1.0:
        raise DomainError(f"p_dep must lie in [0, 1], got {p_dep!r}")
    return (2.0 * p_dep - p_dep**2) / 2.0


def pexp_formula(n_parties: int, qber: float) -> float:
    """Expected winning probability of the honest depolarized-GHZ implementation.

    Exact Born-rule value: with F = 1 - p_dep = sqrt(1 - 2 Q), the x = 0
    questions win with probability 1/2 + F^2 / (2 sqrt 2) (only Alice's and
    Bob_1's qubits enter the correlator) and the x = 1 questions with
    1/2 + F^N / (2 sqrt 2) (all N qubits enter), so averaging over x:

        p_exp = 1/2 + F^N / (2 sqrt 2) + F^2 (1 - F^(N-2)) / (4 sqrt 2).
    """
    if n_parties < 2:
        raise DomainError(f"need at least 2 parties, got {n_parties}")
    f = 1.0 - qber_to_pdep(qber)
    return 0.5 + f**n_parties / (2.0 * SQRT2) + f**2 * (1.0 - f ** (n_parties - 2)) / (4.0 * SQRT2)


def _rate_entropy_arg(a: float) -> float:
    """h(1/2 + 1/2 sqrt(16 a^2 - 1)) with the sub-classical clamp."""
    arg = 16.0 * a * a - 1.0
    if arg <= 0.0:
        return 1.0
    x = min(0.5 + 0.5 * math.sqrt(arg), 1.0)
    return binary_entropy(x)


def asymptotic_rate_cka(n_parties: int, qber: float) -> float:
    """Asymptotic conference-key rate of the protocol at QBER Q.

    May be negative (reported as-is; only key lengths clamp at zero).  When
    the certified violation falls to the classical value or below, the
    entropy term clamps and the rate is -h(Q).
    """
    if n_parties < 2:
        raise DomainError(f"need at least 2 parties, got {n_parties}")
    if not 0.0 <= qber < 0.5:
        raise DomainError(f"qber must lie in [0, 1/2), got {qber!r}")
    w = 1.0 - 2.0 * qber
    f = math.sqrt(w)
    a = f**n_parties / (2.0 * SQRT2) + w * (1.0 - f ** (n_parties - 2)) / (8.0 * SQRT2)
    return 1.0 - _rate_entropy_arg(a) - binary_entropy(qber)


def asymptotic_rate_diqkd(n_parties: int, qber: float) -> float:
    """Asymptotic rate of distributing one key via N-1 pairwise QKD links.

    (1 - h(1/2 + 1/2 sqrt(2 (1-2Q)^2 - 1)) - h(Q)) / (N - 1), with the same
    sub-classical clamp; N = 2 degenerates to a single pairwise link.
    """
    if n_parties < 2:
        raise DomainError(f"need at least 2 parties, got {n_parties}")
    if not 0.0 <= qber < 0.5:
        raise DomainError(f"qber must lie in [0, 1/2), got {qber!r}")
    w = 1.0 - 2.0 * qber
    arg = 2.0 * w * w - 1.0
    if arg <= 0.0:
        h_term = 1.0
    else:
        h_term = binary_entropy(min(0.5 + 0.5 * math.sqrt(arg), 1.0))
    return (1.0 - h_term - binary_entropy(qber)) / (n_parties - 1)
