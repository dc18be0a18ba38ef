"""Named verification suites with exact or statistical pass thresholds.

Each suite returns CheckResult rows; the CLI ``validate`` subcommand prints
them and the acceptance tests assert them.  Sizes default to the full
verification scale; tests may shrink them for smoke runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .birthdeath import (
    BirthDeathSchedule,
    SortedRestriction,
    birth_propose_unsorted,
    bod_move_set,
)
from .core import VarDimState, rng_stream, run_chain
from .experiment import run_joint_chain
from .oracle import (
    build_transition_matrix,
    detailed_balance_residual,
    enumerate_states,
    normalized_target_vector,
    quadrature_posterior_k,
    random_toy_spec,
    stationary_distribution,
    tv_distance,
)
from .sinusoid import (
    PriorOnlyTarget,
    SinusoidPosterior,
    accelerated_poisson_pmf,
    frequency_update_move,
    quad_form,
    synthesize,
    truncated_poisson_pmf,
)

DEFAULT_SEED = 20260810


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    comparison: str  # "<" or ">"
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name}: value={self.value:.6g} "
                f"(required {self.comparison} {self.threshold:g})")


def _check(name: str, value: float, threshold: float, comparison: str = "<") -> CheckResult:
    passed = value < threshold if comparison == "<" else value > threshold
    return CheckResult(name, float(value), float(threshold), comparison, passed)


def toy_stationarity(n_specs: int = 20, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Exact stationarity and detailed balance of the corrected kernel on random toys."""
    rng = rng_stream(seed, 1)
    worst_tv = 0.0
    worst_db = 0.0
    for i in range(n_specs):
        spec = random_toy_spec(rng, m=3 if i % 2 == 0 else 4, k_max=2)
        matrix = build_transition_matrix(spec, "corrected")
        pi_exact = normalized_target_vector(spec, enumerate_states(spec))
        pi_hat = stationary_distribution(matrix, tol=5e-15)
        worst_tv = max(worst_tv, tv_distance(pi_hat, pi_exact))
        worst_db = max(worst_db, detailed_balance_residual(matrix, pi_exact))
    return [
        _check(f"stationary law TV vs normalized target (worst of {n_specs} toys)",
               worst_tv, 1e-10),
        _check(f"detailed balance cell residual (worst of {n_specs} toys)",
               worst_db, 1e-12),
    ]


def ratio_cancellation(n_configs: int = 1000, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Birth acceptance ratio equals its closed form on random configurations.

    The closed form (quad ratio)^(-N/2) / (1 + delta2) only emerges if the
    prior, proposal and schedule bookkeeping cancel exactly, so agreement
    verifies the assembled ratio end to end.
    """
    rng = rng_stream(seed, 2)
    n_obs = 32
    worst = 0.0
    done = 0
    while done < n_configs:
        k = int(rng.integers(0, 6))
        y = rng.standard_normal(n_obs)
        omega = tuple(np.sort(rng.uniform(0.05, math.pi - 0.05, size=k)))
        if k and min(np.diff(omega), default=1.0) < 1e-3:
            continue
        delta2 = float(np.exp(rng.uniform(math.log(0.1), math.log(1000.0))))
        lam = float(rng.uniform(0.5, 10.0))
        model = SinusoidPosterior(y, lam, delta2, k_max=8)
        sched = BirthDeathSchedule.green(lam, 8, 0.25)
        outcome = birth_propose_unsorted(VarDimState(omega), sched, model, rng)
        if outcome.log_ratio == float("-inf"):
            continue  # numerically singular draw; resample
        lhs = math.exp(outcome.log_ratio)
        q_k = quad_form(y, omega, delta2)
        q_k1 = quad_form(y, outcome.proposed.components, delta2)
        rhs = (q_k1 / q_k) ** (-n_obs / 2.0) / (1.0 + delta2)
        worst = max(worst, abs(lhs - rhs) / rhs)
        done += 1
    return [
        _check(f"birth ratio vs closed form, max relative error over {n_configs} configs",
               worst, 1e-9),
    ]


def prior_only(post_samples: int = 200_000, burn_in: int = 20_000,
               lam: float = 5.0, k_max: int = 32, c: float = 0.25,
               seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Model-order law of prior-only chains: corrected vs legacy ratio mode.

    The corrected chain must reproduce the truncated Poisson prior; the legacy
    chain lands on the sparser law proportional to lam^k/(k!)^2 instead, far
    from the Poisson it was meant to target.
    """
    target = PriorOnlyTarget(lam, k_max)
    freqs = {}
    for stream, mode in enumerate(("corrected", "legacy")):
        sched = BirthDeathSchedule.green(lam, k_max, c, ratio_mode=mode)
        out = run_chain(target, bod_move_set(target, sched), VarDimState(),
                        n_iter=burn_in + post_samples, burn_in=burn_in,
                        rng=rng_stream(seed, 3, stream))
        freqs[mode] = out.k_frequencies(k_max)
    poisson = truncated_poisson_pmf(lam, k_max)
    accelerated = accelerated_poisson_pmf(lam, k_max)
    return [
        _check("corrected chain TV vs truncated Poisson",
               tv_distance(freqs["corrected"], poisson), 0.02),
        _check("legacy chain TV vs accelerated law",
               tv_distance(freqs["legacy"], accelerated), 0.02),
        _check("legacy chain TV vs plain truncated Poisson",
               tv_distance(freqs["legacy"], poisson), 0.15, ">"),
    ]


def quadrature(n_iter: int = 500_000, burn_in: int = 50_000,
               grid_size: int = 200, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Chain k-marginal against direct quadrature on a single-tone problem."""
    y = synthesize((0.63,), (20.0,), 20.0, 32, rng_stream(seed, 4, 0))
    model = SinusoidPosterior(y, lam=1.0, delta2=100.0, k_max=2)
    sched = BirthDeathSchedule.green(1.0, 2, 0.25)
    update = lambda x, rng: frequency_update_move(x, model, rng, walk_sd=0.25 / 32)
    out = run_chain(model, bod_move_set(model, sched, update), VarDimState(),
                    n_iter=n_iter, burn_in=burn_in, rng=rng_stream(seed, 4, 1))
    freqs = out.k_frequencies(2)
    pmf = quadrature_posterior_k(y, 100.0, 1.0, 2, grid_size)
    return [
        _check("chain vs quadrature k-posterior, max entry difference",
               float(np.abs(freqs - pmf).max()), 0.02),
    ]


def sorted_equivalence(post_samples: int = 100_000, burn_in: int = 10_000,
                       lam: float = 3.0, k_max: int = 32, c: float = 0.25,
                       seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Sorted and unsorted representations of one exchangeable target agree.

    Runs the prior-only target under both kernels; the k-marginals must match
    because the two acceptance ratios coincide for exchangeable densities.
    """
    base = PriorOnlyTarget(lam, k_max)
    freqs = {}
    for stream, representation in enumerate(("unsorted", "sorted")):
        target = SortedRestriction(base) if representation == "sorted" else base
        sched = BirthDeathSchedule.green(lam, k_max, c, representation=representation)
        out = run_chain(target, bod_move_set(target, sched), VarDimState(),
                        n_iter=burn_in + post_samples, burn_in=burn_in,
                        rng=rng_stream(seed, 5, stream))
        freqs[representation] = out.k_frequencies(k_max)
    return [
        _check("TV between sorted and unsorted k-marginals",
               tv_distance(freqs["unsorted"], freqs["sorted"]), 0.03),
    ]


SUITES = {
    "toy-stationarity": toy_stationarity,
    "ratio-cancellation": ratio_cancellation,
    "prior-only": prior_only,
    "quadrature": quadrature,
    "sorted-equivalence": sorted_equivalence,
}
