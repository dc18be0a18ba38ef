"""Chain driver for the full sinusoid model, with hyperparameter sampling.

One sweep composes invariant kernels: optional hyperparameter updates for the
component-count mean and the g-prior scale, one between-model birth-or-death
attempt, and one within-model frequency update.  Each sweep produces one
record, so iteration counts refer to sweeps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .birthdeath import (
    BirthDeathSchedule,
    SortedRestriction,
    birth_propose_sorted,
    birth_propose_unsorted,
    death_propose,
    uniform_component_proposal,
)
from .core import (
    BrokenKernelError,
    ConfigurationError,
    Rng,
    VarDimState,
    mhg_accept,
)
from .sinusoid import (
    PriorOnlyTarget,
    SinusoidPosterior,
    frequency_update_move,
    sample_delta2,
    sample_lambda,
)


@dataclass(frozen=True)
class SweepRecord:
    iteration: int
    k: int
    components: tuple[float, ...]
    log_target: float
    move: str  # between-model attempt: "birth" | "death" | "none"
    accepted: bool
    lam: float
    delta2: float
    burn_in: bool


@dataclass
class JointRunResult:
    """Sweep records plus per-move attempt/acceptance tallies and a config echo."""

    records: list[SweepRecord]
    proposals: dict[str, int]
    acceptances: dict[str, int]
    config: dict
    k_max: int

    def post_burn_in(self) -> list[SweepRecord]:
        return [r for r in self.records if not r.burn_in]

    def k_counts(self) -> np.ndarray:
        counts = np.zeros(self.k_max + 1, dtype=np.int64)
        for r in self.records:
            if not r.burn_in:
                counts[r.k] += 1
        return counts

    def k_frequencies(self) -> np.ndarray:
        counts = self.k_counts()
        total = counts.sum()
        return counts / total if total else np.zeros(self.k_max + 1)

    def mean_k(self) -> float:
        freqs = self.k_frequencies()
        return float(freqs @ np.arange(self.k_max + 1))


def run_joint_chain(
    y,
    *,
    n_iter: int,
    burn_in: int,
    k_max: int = 32,
    c: float = 0.25,
    ratio_mode: str = "corrected",
    representation: str = "unsorted",
    lam: float | None = None,
    lambda_prior: tuple[float, float] | None = None,
    delta2: float | None = None,
    delta2_prior: tuple[float, float] | None = None,
    flat_likelihood: bool = False,
    jitter: float = 0.0,
    rng: Rng,
    seed: int | None = None,
    init: VarDimState = VarDimState(),
) -> JointRunResult:
    """Run the sweep chain; fully reproducible given the generator.

    Exactly one of ``lam`` / ``lambda_prior`` must be given (likewise for
    delta2).  With ``flat_likelihood`` the data never enter the density: the
    target is the (k, omega) prior alone, the frequency-update and g-prior
    moves are skipped, and ``y`` may be omitted.
    """
    if (lam is None) == (lambda_prior is None):
        raise ConfigurationError("give exactly one of lam / lambda_prior")
    if (delta2 is None) == (delta2_prior is None):
        raise ConfigurationError("give exactly one of delta2 / delta2_prior")
    if n_iter < 0 or burn_in < 0 or burn_in > n_iter or (n_iter > 0 and burn_in >= n_iter):
        raise ConfigurationError(f"invalid iteration counts: n_iter={n_iter}, burn_in={burn_in}")
    if not flat_likelihood:
        if y is None:
            raise ConfigurationError("observations are required unless flat_likelihood is set")
        y = np.asarray(y, dtype=float)
        walk_sd = 0.25 / y.size
    else:
        walk_sd = 0.0

    lam_val = lam if lam is not None else (lambda_prior[0] + init.k) / (lambda_prior[1] + 1.0)
    if delta2 is not None:
        delta2_val = delta2
    else:
        shape, scale = delta2_prior
        delta2_val = scale / (shape - 1.0) if shape > 1.0 else scale

    proposal = uniform_component_proposal()
    sorted_rep = representation == "sorted"
    birth_propose = birth_propose_sorted if sorted_rep else birth_propose_unsorted

    x = init
    records: list[SweepRecord] = []
    proposals: dict[str, int] = {}
    acceptances: dict[str, int] = {}

    def tally(label: str, accepted: bool) -> None:
        proposals[label] = proposals.get(label, 0) + 1
        if accepted:
            acceptances[label] = acceptances.get(label, 0) + 1

    for i in range(n_iter):
        if lambda_prior is not None:
            lam_val, acc = sample_lambda(lam_val, x.k, lambda_prior[0],
                                         lambda_prior[1], k_max, rng)
            tally("lambda", acc)
        if delta2_prior is not None and not flat_likelihood:
            delta2_val, acc = sample_delta2(delta2_val, x, y, delta2_prior[0],
                                            delta2_prior[1], rng, jitter=jitter)
            tally("delta2", acc)

        if flat_likelihood:
            base = PriorOnlyTarget(lam_val, k_max)
        else:
            base = SinusoidPosterior(y, lam_val, delta2_val, k_max, jitter)
        target = SortedRestriction(base) if sorted_rep else base
        sched = BirthDeathSchedule.green(lam_val, k_max, c, proposal=proposal,
                                         representation=representation,
                                         ratio_mode=ratio_mode)

        move = "none"
        move_accepted = False
        u = rng.random()
        p_b = sched.p_birth(x)
        if u < p_b:
            outcome = birth_propose(x, sched, target, rng)
            move = "birth"
            move_accepted = mhg_accept(outcome.log_ratio, rng)
            tally("birth", move_accepted)
            if move_accepted:
                x = outcome.proposed
        elif u < p_b + sched.p_death(x):
            outcome = death_propose(x, sched, target, rng)
            move = "death"
            move_accepted = mhg_accept(outcome.log_ratio, rng)
            tally("death", move_accepted)
            if move_accepted:
                x = outcome.proposed

        if not flat_likelihood and x.k >= 1:
            outcome = frequency_update_move(x, target, rng, walk_sd)
            acc = mhg_accept(outcome.log_ratio, rng)
            tally("update", acc)
            if acc:
                x = outcome.proposed

        log_t = target.log_density(x)
        if math.isnan(log_t):
            raise BrokenKernelError(f"target returned NaN at sweep {i}, k={x.k}")
        records.append(SweepRecord(
            iteration=i, k=x.k, components=x.components, log_target=log_t,
            move=move, accepted=move_accepted, lam=lam_val, delta2=delta2_val,
            burn_in=i < burn_in))

    return JointRunResult(
        records=records, proposals=proposals, acceptances=acceptances,
        config={
            "n_iter": n_iter, "burn_in": burn_in, "seed": seed, "k_max": k_max,
            "c": c, "ratio_mode": ratio_mode, "representation": representation,
            "flat_likelihood": flat_likelihood,
        },
        k_max=k_max)
