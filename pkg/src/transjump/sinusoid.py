"""Marginalised posterior for an unknown number of sinusoids in white Gaussian noise.

With a g-prior on the cosine/sine amplitudes and Jeffreys prior on the noise
variance, both integrate out analytically and the posterior over (k, omega)
reduces to a quadratic-form expression evaluated here, together with the
within-model frequency move, hyperparameter moves for the component-count mean
and the g-prior scale, and synthetic-signal generation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .core import (
    NEG_INF,
    BrokenKernelError,
    ConfigurationError,
    ProposalOutcome,
    Rng,
    TargetDensity,
    VarDimState,
    mhg_accept,
)

OMEGA_LOW = 0.0
OMEGA_HIGH = math.pi


class SingularDesignError(RuntimeError):
    """The regression design is numerically singular (near-duplicate frequencies)."""


def design_matrix(omega, n_obs: int) -> np.ndarray:
    """N x 2k design with columns cos(w_j t), sin(w_j t), t = 0 .. N-1."""
    omega = np.asarray(omega, dtype=float)
    t = np.arange(n_obs, dtype=float)
    phases = np.outer(t, omega)
    d = np.empty((n_obs, 2 * omega.size))
    d[:, 0::2] = np.cos(phases)
    d[:, 1::2] = np.sin(phases)
    return d


NEAR_DUPLICATE_GAP = 1e-8


def _projection_norm2(y: np.ndarray, omega, jitter: float = 0.0) -> float:
    """Squared norm of the whitened projection of y onto the design columns.

    Computed through a Cholesky factorisation of D^T D.  Near-duplicate
    frequencies (gap below ~1e-8, a posterior null set) and factorisation
    failures that survive the jitter guard raise SingularDesignError.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.size > 1 and float(np.diff(np.sort(omega)).min()) < NEAR_DUPLICATE_GAP:
        raise SingularDesignError(f"near-duplicate frequencies in omega={tuple(omega)}")
    d = design_matrix(omega, y.size)
    gram = d.T @ d
    z = d.T @ y
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        if jitter > 0.0:
            try:
                chol = np.linalg.cholesky(gram + jitter * np.eye(gram.shape[0]))
            except np.linalg.LinAlgError:
                raise SingularDesignError(f"design is singular at omega={tuple(omega)}")
        else:
            raise SingularDesignError(f"design is singular at omega={tuple(omega)}")
    w = solve_triangular(chol, z, lower=True)
    return float(w @ w)


def quad_form(y, omega, delta2: float, jitter: float = 0.0) -> float:
    """y^T P_k y with P_k the g-prior shrinkage projection; y^T y when k = 0.

    P_k is never formed: the quadratic form is y^T y minus the shrunk squared
    projection, so the result always lies in [|y|^2 / (1 + delta2), |y|^2].
    """
    y = np.asarray(y, dtype=float)
    yty = float(y @ y)
    omega = np.asarray(omega, dtype=float)
    if omega.size == 0 or delta2 == 0.0:
        return yty
    s = _projection_norm2(y, omega, jitter)
    return yty - delta2 / (1.0 + delta2) * s


def sinusoid_log_target(y, omega, lam: float, delta2: float, k_max: int,
                        jitter: float = 0.0) -> float:
    """Unnormalised log posterior of (k, omega) given the data.

    -(N/2) log(y^T P_k y) + k log(lam) - k log(pi) - log k! - k log(1+delta2),
    or -inf outside (0, pi)^k, above the truncation, or on a numerically
    singular design.
    """
    y = np.asarray(y, dtype=float)
    k = len(omega)
    if k > k_max:
        return NEG_INF
    if any(not OMEGA_LOW < w < OMEGA_HIGH for w in omega):
        return NEG_INF
    try:
        q = quad_form(y, omega, delta2, jitter)
    except SingularDesignError:
        return NEG_INF
    n = y.size
    return (-0.5 * n * math.log(q) + k * math.log(lam) - k * math.log(math.pi)
            - math.lgamma(k + 1) - k * math.log1p(delta2))


class SinusoidPosterior:
    """Target density over (k, omega) for fixed hyperparameters.

    Holds the observations y, the g-prior scale delta2, the component-count
    mean lam, the truncation k_max and a Cholesky jitter guard.  Evaluations
    are memoised on the component tuple (the density is deterministic), which
    saves repeated factorisations of the current state during a sweep.
    """

    def __init__(self, y, lam: float, delta2: float, k_max: int = 32,
                 jitter: float = 0.0, cache_size: int = 64):
        self.y = np.asarray(y, dtype=float)
        if self.y.ndim != 1 or self.y.size == 0:
            raise ConfigurationError("y must be a nonempty vector")
        if lam <= 0 or delta2 < 0 or k_max < 0 or jitter < 0:
            raise ConfigurationError("lam must be positive; delta2, k_max, jitter nonnegative")
        self.n_obs = self.y.size
        self.lam = float(lam)
        self.delta2 = float(delta2)
        self.k_max = int(k_max)
        self.jitter = float(jitter)
        self._cache_size = cache_size
        self._cache: dict[tuple, float] = {}

    def log_target(self, k: int, omega) -> float:
        if len(omega) != k:
            raise ConfigurationError(f"omega has length {len(omega)}, expected k={k}")
        return self.log_density(VarDimState(tuple(float(w) for w in omega)))

    def log_density(self, x: VarDimState) -> float:
        cached = self._cache.get(x.components)
        if cached is not None:
            return cached
        val = sinusoid_log_target(self.y, x.components, self.lam, self.delta2,
                                  self.k_max, self.jitter)
        if len(self._cache) >= self._cache_size:
            self._cache.pop(next(iter(self._cache)))
        self._cache[x.components] = val
        return val


@dataclass(frozen=True)
class PriorOnlyTarget:
    """The (k, omega) prior alone: truncated-Poisson order, i.i.d. uniform components.

    Used by the flat-likelihood switch; its exact k-marginal is the truncated
    Poisson law, which makes it the reference target for ratio diagnostics.
    """

    lam: float
    k_max: int
    low: float = OMEGA_LOW
    high: float = OMEGA_HIGH

    def log_density(self, x: VarDimState) -> float:
        k = x.k
        if k > self.k_max:
            return NEG_INF
        if any(not self.low < w < self.high for w in x.components):
            return NEG_INF
        return (k * math.log(self.lam) - k * math.log(self.high - self.low)
                - math.lgamma(k + 1))


def frequency_update_move(x: VarDimState, target: TargetDensity, rng: Rng,
                          walk_sd: float, low: float = OMEGA_LOW,
                          high: float = OMEGA_HIGH,
                          walk_prob: float = 0.8) -> ProposalOutcome:
    """Within-model update of one frequency; never changes k.

    One index is picked uniformly; with probability ``walk_prob`` the proposal
    is a Gaussian random-walk step of the given std, otherwise an independent
    uniform draw on (low, high).  Both branches have symmetric proposal ratio,
    so the log ratio is the log target difference (with -inf outside the
    domain).
    """
    if x.k == 0:
        raise BrokenKernelError("frequency update proposed at k=0")
    index = int(rng.integers(0, x.k))
    if rng.random() < walk_prob:
        new = x.components[index] + walk_sd * rng.standard_normal()
    else:
        new = rng.uniform(low, high)
    comps = list(x.components)
    comps[index] = float(new)
    proposed = VarDimState(tuple(comps))
    if not low < new < high:
        return ProposalOutcome(proposed, NEG_INF, "update")
    lt_new = target.log_density(proposed)
    if lt_new == NEG_INF:
        return ProposalOutcome(proposed, NEG_INF, "update", None, lt_new)
    log_ratio = lt_new - target.log_density(x)
    return ProposalOutcome(proposed, log_ratio, "update", None, lt_new)


def log_truncated_poisson_normalizer(lam: float, k_max: int) -> float:
    """log sum_{j=0}^{k_max} lam^j / j!."""
    j = np.arange(k_max + 1)
    return float(logsumexp(j * math.log(lam) - [math.lgamma(v + 1) for v in j]))


def sample_lambda(current: float, k: int, shape: float, rate: float, k_max: int,
                  rng: Rng) -> tuple[float, bool]:
    """One MH update of the component-count mean given the current order k.

    Proposes from the untruncated conjugate Gamma(shape + k, rate + 1) and
    corrects for the truncated-Poisson normalizer, which leaves the
    conditional law invariant; the correction tends to 1 as k_max grows.
    Returns (new value, accepted flag).
    """
    proposed = float(rng.gamma(shape + k, 1.0 / (rate + 1.0)))
    if proposed <= 0.0:
        return current, False
    log_ratio = ((proposed - current)
                 + log_truncated_poisson_normalizer(current, k_max)
                 - log_truncated_poisson_normalizer(proposed, k_max))
    if mhg_accept(log_ratio, rng):
        return proposed, True
    return current, False


def sample_delta2(current: float, x: VarDimState, y, shape: float, scale: float,
                  rng: Rng, walk_sd: float = 0.5, jitter: float = 0.0,
                  ) -> tuple[float, bool]:
    """One random-walk MH update of the g-prior scale on the log scale.

    Targets the conditional density proportional to
    IG(delta2; shape, scale) * (y^T P_k y)^(-N/2) * (1 + delta2)^(-k),
    with the log-scale Jacobian included.  Returns (new value, accepted flag).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    k = x.k
    yty = float(y @ y)
    s = _projection_norm2(y, x.components, jitter) if k > 0 else 0.0

    def log_cond(d2: float) -> float:
        quad = yty - d2 / (1.0 + d2) * s
        return (-(shape + 1.0) * math.log(d2) - scale / d2
                - 0.5 * n * math.log(quad) - k * math.log1p(d2))

    v = math.log(current)
    v_new = v + walk_sd * rng.standard_normal()
    proposed = math.exp(v_new)
    log_ratio = (log_cond(proposed) + v_new) - (log_cond(current) + v)
    if mhg_accept(log_ratio, rng):
        return proposed, True
    return current, False


def synthesize(omega, amp2, snr_db: float, n_obs: int, rng: Rng) -> np.ndarray:
    """Clean sinusoid mixture plus white noise scaled to the requested SNR.

    Each component's squared amplitude splits evenly between the cosine and
    sine terms.  The noise variance is |clean|^2 / (N * 10^(SNR/10)), so the
    realized SNR matches the request exactly by construction.
    """
    omega = tuple(float(w) for w in omega)
    amp2 = tuple(float(a) for a in amp2)
    if len(omega) != len(amp2):
        raise ConfigurationError("omega and amp2 must have matching lengths")
    if omega:
        amps = np.empty(2 * len(omega))
        amps[0::2] = np.sqrt(np.asarray(amp2) / 2.0)
        amps[1::2] = np.sqrt(np.asarray(amp2) / 2.0)
        clean = design_matrix(omega, n_obs) @ amps
    else:
        clean = np.zeros(n_obs)
    if math.isinf(snr_db) and snr_db > 0:
        return clean
    sigma2 = float(clean @ clean) / (n_obs * 10.0 ** (snr_db / 10.0))
    return clean + math.sqrt(sigma2) * rng.standard_normal(n_obs)


@dataclass(frozen=True)
class ExperimentSpec:
    """Ground truth, priors and chain sizes for one synthetic experiment."""

    k_true: int = 3
    omega_true: tuple[float, ...] = (0.63, 0.68, 0.73)
    amp2_true: tuple[float, ...] = (20.0, 6.32, 20.0)
    snr_db: float = 7.0
    n_obs: int = 64
    replications: int = 100
    n_iter: int = 100_000
    burn_in: int = 20_000
    lambda_prior: tuple[float, float] = (1.0, 1e-3)  # Gamma shape, rate
    delta2_prior: tuple[float, float] = (2.0, 100.0)  # inverse-Gamma shape, scale
    ratio_mode: str = "corrected"
    representation: str = "unsorted"
    base_seed: int = 0

    def __post_init__(self):
        if len(self.omega_true) != self.k_true or len(self.amp2_true) != self.k_true:
            raise ConfigurationError("omega_true and amp2_true must have length k_true")
        if any(not OMEGA_LOW < w < OMEGA_HIGH for w in self.omega_true):
            raise ConfigurationError("true frequencies must lie in (0, pi)")
        if len(set(self.omega_true)) != self.k_true:
            raise ConfigurationError("true frequencies must be distinct")
        if not math.isfinite(self.snr_db):
            raise ConfigurationError("SNR must be finite")
        if self.n_iter > 0 and not 0 <= self.burn_in < self.n_iter:
            raise ConfigurationError("burn_in must be smaller than n_iter")


def synth_signal(spec: ExperimentSpec, rng: Rng) -> np.ndarray:
    """Synthetic observation vector for the experiment's ground truth."""
    return synthesize(spec.omega_true, spec.amp2_true, spec.snr_db, spec.n_obs, rng)


def truncated_poisson_logpmf(k: int, lam: float, k_max: int) -> float:
    """log pmf of Poisson(lam) truncated to {0, ..., k_max}."""
    if not 0 <= k <= k_max:
        raise ValueError(f"k={k} outside the truncated support [0, {k_max}]")
    return (k * math.log(lam) - math.lgamma(k + 1)
            - log_truncated_poisson_normalizer(lam, k_max))


def accelerated_poisson_logpmf(k: int, lam: float, k_max: int) -> float:
    """log pmf proportional to lam^k / (k!)^2 on {0, ..., k_max}.

    This is the model-order law implicitly imposed by the legacy erroneous
    birth ratio; it puts markedly more mass on sparse models than the plain
    Poisson with the same mean parameter.
    """
    if not 0 <= k <= k_max:
        raise ValueError(f"k={k} outside the truncated support [0, {k_max}]")
    j = np.arange(k_max + 1)
    log_norm = logsumexp(j * math.log(lam) - 2.0 * np.array([math.lgamma(v + 1) for v in j]))
    return k * math.log(lam) - 2.0 * math.lgamma(k + 1) - float(log_norm)


def truncated_poisson_pmf(lam: float, k_max: int) -> np.ndarray:
    return np.exp([truncated_poisson_logpmf(k, lam, k_max) for k in range(k_max + 1)])


def accelerated_poisson_pmf(lam: float, k_max: int) -> np.ndarray:
    return np.exp([accelerated_poisson_logpmf(k, lam, k_max) for k in range(k_max + 1)])
