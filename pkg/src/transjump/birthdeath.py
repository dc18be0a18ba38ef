"""Birth-or-Death proposal kernels on variable-dimensional vectors.

Two representations are supported: unsorted vectors, where a birth inserts the
new component at a uniformly chosen slot, and sorted vectors, where it is
inserted at the unique slot that keeps the vector nondecreasing.  Each kernel
comes with the exact acceptance ratio and with a deliberately erroneous
"legacy" mode that differs by a factor 1/(k+1) on births (and k on deaths),
kept for comparison experiments.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable

from .core import (
    NEG_INF,
    BrokenKernelError,
    ConfigurationError,
    Move,
    MoveSet,
    ProposalOutcome,
    Rng,
    TargetDensity,
    VarDimState,
)

REPRESENTATIONS = ("unsorted", "sorted")
RATIO_MODES = ("corrected", "legacy")


@dataclass(frozen=True)
class ComponentProposal:
    """Proposal distribution q on the component space: paired sampler and density.

    ``log_density`` must return the density actually used by ``sample``; the
    optional ``cdf`` enables insertion-slot probabilities for sorted kernels.
    """

    sample: Callable[[Rng], float]
    log_density: Callable[[float], float]
    cdf: Callable[[float], float] | None = None


def uniform_component_proposal(low: float = 0.0, high: float = math.pi) -> ComponentProposal:
    """Uniform proposal on the open interval (low, high)."""
    if not high > low:
        raise ConfigurationError(f"empty proposal interval ({low}, {high})")
    width = high - low
    log_dens = -math.log(width)

    def log_density(v: float) -> float:
        return log_dens if low < v < high else NEG_INF

    def cdf(v: float) -> float:
        return min(1.0, max(0.0, (v - low) / width))

    return ComponentProposal(
        sample=lambda rng: rng.uniform(low, high),
        log_density=log_density,
        cdf=cdf,
    )


def pmf_component_proposal(points, probabilities) -> ComponentProposal:
    """Proposal over finitely many labelled points (discrete surrogate of q)."""
    pts = tuple(float(p) for p in points)
    probs = [float(p) for p in probabilities]
    if len(pts) != len(probs) or any(p < 0 for p in probs):
        raise ConfigurationError("pmf proposal needs one nonnegative weight per point")
    total = sum(probs)
    if total <= 0:
        raise ConfigurationError("pmf proposal weights sum to zero")
    probs = [p / total for p in probs]
    log_p = {v: (math.log(p) if p > 0 else NEG_INF) for v, p in zip(pts, probs)}

    def sample(rng: Rng) -> float:
        return pts[int(rng.choice(len(pts), p=probs))]

    return ComponentProposal(
        sample=sample,
        log_density=lambda v: log_p.get(v, NEG_INF),
        cdf=None,
    )


@dataclass(frozen=True)
class BoDDetail:
    """Bookkeeping attached to a birth or death proposal.

    ``log_q`` is the proposal log-density of the inserted (or removed)
    component, evaluated once at proposal time so the ratio is guaranteed to
    use the density consistent with the sampler.  ``log_eta`` is the
    insertion-slot probability for sorted births, when the proposal exposes a
    CDF; it cancels from the ratio and is recorded for diagnostics only.
    """

    kind: str  # "birth" | "death"
    index: int  # 0-based slot
    value: float
    log_q: float
    log_eta: float | None = None


def schedule_probabilities(k: int, k_max: int, lam: float, c: float) -> tuple[float, float]:
    """Birth/death selection probabilities (p_b, p_d) at model order k.

    Uses the c*min{1, prior ratio} schedule against a truncated Poisson(lam)
    prior on k, which guarantees p_d(k+1)/p_b(k) = (k+1)/lam for all k < k_max
    while leaving 1 - p_b - p_d mass for within-model moves.  p_d(0) = 0 and
    p_b(k_max) = 0 are forced.
    """
    if not 0 <= k <= k_max:
        raise ConfigurationError(f"order k={k} outside [0, {k_max}]")
    if not 0.0 < c <= 0.5:
        raise ConfigurationError(f"schedule constant c={c} outside (0, 0.5]")
    if not lam > 0:
        raise ConfigurationError(f"schedule mean lam={lam} must be positive")
    p_b = 0.0 if k >= k_max else c * min(1.0, lam / (k + 1))
    p_d = 0.0 if k == 0 else c * min(1.0, k / lam)
    return p_b, p_d


@dataclass(frozen=True)
class BirthDeathSchedule:
    """State-dependent birth/death probabilities plus the component proposal q.

    p_birth(x) + p_death(x) <= 1; the remaining mass is available for
    within-model moves.  p_death must vanish at k = 0 and p_birth at the
    truncation k_max.
    """

    p_birth: Callable[[VarDimState], float]
    p_death: Callable[[VarDimState], float]
    proposal: ComponentProposal
    representation: str = "unsorted"
    ratio_mode: str = "corrected"

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ConfigurationError(f"unknown representation {self.representation!r}")
        if self.ratio_mode not in RATIO_MODES:
            raise ConfigurationError(f"unknown ratio mode {self.ratio_mode!r}")

    @classmethod
    def green(cls, lam: float, k_max: int, c: float = 0.25,
              proposal: ComponentProposal | None = None,
              representation: str = "unsorted",
              ratio_mode: str = "corrected") -> "BirthDeathSchedule":
        """Schedule realizing p_d(k+1)/p_b(k) = (k+1)/lam (see schedule_probabilities)."""
        table = tuple(schedule_probabilities(k, k_max, lam, c)
                      for k in range(k_max + 1))
        return cls(
            p_birth=lambda x: table[x.k][0],
            p_death=lambda x: table[x.k][1],
            proposal=proposal if proposal is not None else uniform_component_proposal(),
            representation=representation,
            ratio_mode=ratio_mode,
        )


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else NEG_INF


def _checked_log_density(target: TargetDensity, x: VarDimState) -> float:
    lt = target.log_density(x)
    if math.isnan(lt):
        raise BrokenKernelError(f"target returned NaN at k={x.k}")
    return lt


def _birth_parts(x, x_new, detail, sched, target, extra: float) -> tuple[float, float]:
    if detail.log_q == NEG_INF:
        raise BrokenKernelError(
            "proposal density is zero at the sampled component; "
            "sampler and density evaluator disagree")
    p_b = sched.p_birth(x)
    if p_b <= 0.0:
        raise BrokenKernelError(f"birth proposed at k={x.k} where p_birth = 0")
    lt_new = _checked_log_density(target, x_new)
    if lt_new == NEG_INF:
        return NEG_INF, lt_new
    p_d_new = sched.p_death(x_new)
    if p_d_new <= 0.0:
        return NEG_INF, lt_new
    lt_cur = _checked_log_density(target, x)
    ratio = lt_new - lt_cur + math.log(p_d_new) - math.log(p_b) - detail.log_q + extra
    return ratio, lt_new


def _death_parts(x, x_new, detail, sched, target, extra: float) -> tuple[float, float]:
    if x.k == 0:
        raise BrokenKernelError("death proposed at k=0; schedule must prevent this")
    p_d = sched.p_death(x)
    if p_d <= 0.0:
        raise BrokenKernelError(f"death proposed at k={x.k} where p_death = 0")
    lt_new = _checked_log_density(target, x_new)
    if lt_new == NEG_INF:
        return NEG_INF, lt_new
    p_b_new = sched.p_birth(x_new)
    if p_b_new <= 0.0 or detail.log_q == NEG_INF:
        return NEG_INF, lt_new
    lt_cur = _checked_log_density(target, x)
    ratio = lt_new - lt_cur + math.log(p_b_new) - math.log(p_d) + detail.log_q + extra
    return ratio, lt_new


def bod_log_ratio(x: VarDimState, x_new: VarDimState, detail: BoDDetail,
                  sched: BirthDeathSchedule, target: TargetDensity) -> float:
    """Exact log acceptance ratio for an unsorted birth or death move.

    For a birth this is log f(x') - log f(x) + log p_d(x') - log p_b(x)
    - log q(s*); a death is the exact negation with the roles swapped.  The
    uniform location-selection terms 1/(k+1) cancel and never appear.
    """
    if detail.kind == "birth":
        return _birth_parts(x, x_new, detail, sched, target, 0.0)[0]
    if detail.kind == "death":
        return _death_parts(x, x_new, detail, sched, target, 0.0)[0]
    raise ConfigurationError(f"unknown move kind {detail.kind!r}")


def legacy_log_ratio(x: VarDimState, x_new: VarDimState, detail: BoDDetail,
                     sched: BirthDeathSchedule, target: TargetDensity) -> float:
    """The historical erroneous ratio: exact ratio with a spurious 1/(k+1) on births.

    Relative to :func:`bod_log_ratio` this subtracts log(k+1) for a birth from
    order k and adds log(k) for a death from order k.  A chain driven by it
    silently targets f_k / k! instead of f_k.
    """
    if detail.kind == "birth":
        return _birth_parts(x, x_new, detail, sched, target, -math.log(x.k + 1))[0]
    if detail.kind == "death":
        return _death_parts(x, x_new, detail, sched, target, math.log(x.k))[0]
    raise ConfigurationError(f"unknown move kind {detail.kind!r}")


def sorted_log_ratio(x: VarDimState, x_new: VarDimState, detail: BoDDetail,
                     sched: BirthDeathSchedule, target: TargetDensity) -> float:
    """Log acceptance ratio for birth/death on sorted vectors.

    The insertion-slot probabilities eta_i cancel algebraically, leaving
    log f~(x') - log f~(x) + log p_d(x') - log(k+1) - log p_b(x) - log q(s*)
    for a birth from order k.  The target must supply the sorted density f~;
    for an exchangeable base density f this is k! * f.
    """
    if not x.is_sorted() or not x_new.is_sorted():
        raise BrokenKernelError("sorted ratio evaluated on an unsorted state")
    if detail.kind == "birth":
        return _birth_parts(x, x_new, detail, sched, target, -math.log(x.k + 1))[0]
    if detail.kind == "death":
        return _death_parts(x, x_new, detail, sched, target, math.log(x.k))[0]
    raise ConfigurationError(f"unknown move kind {detail.kind!r}")


def _ratio_parts(x, x_new, detail, sched, target) -> tuple[float, float]:
    """Dispatch on representation and ratio mode; returns (log ratio, log f(x'))."""
    birth = detail.kind == "birth"
    extra = 0.0
    if sched.representation == "sorted":
        extra += -math.log(x.k + 1) if birth else math.log(x.k)
    if sched.ratio_mode == "legacy":
        extra += -math.log(x.k + 1) if birth else math.log(x.k)
    if birth:
        return _birth_parts(x, x_new, detail, sched, target, extra)
    return _death_parts(x, x_new, detail, sched, target, extra)


def move_log_ratio(x: VarDimState, x_new: VarDimState, detail: BoDDetail,
                   sched: BirthDeathSchedule, target: TargetDensity) -> float:
    """Log MHG ratio for a birth/death move under the schedule's representation and mode.

    This is the single code path the proposal functions use; exact
    transition-matrix oracles call it so they exercise the implemented ratio,
    not a reimplementation.
    """
    return _ratio_parts(x, x_new, detail, sched, target)[0]


def birth_propose_unsorted(x: VarDimState, sched: BirthDeathSchedule,
                           target: TargetDensity, rng: Rng) -> ProposalOutcome:
    """Draw s* ~ q and insert it at a uniformly chosen slot of x."""
    s_star = float(sched.proposal.sample(rng))
    if math.isnan(s_star):
        raise BrokenKernelError("proposal sampler returned NaN")
    log_q = sched.proposal.log_density(s_star)
    if log_q == NEG_INF:
        raise BrokenKernelError(
            f"proposal sampler returned {s_star!r}, outside the support of its density")
    index = int(rng.integers(0, x.k + 1))
    proposed = x.insert(index, s_star)
    detail = BoDDetail("birth", index, s_star, log_q)
    log_ratio, lt_new = _ratio_parts(x, proposed, detail, sched, target)
    return ProposalOutcome(proposed, log_ratio, "birth", detail, lt_new)


def birth_propose_sorted(x: VarDimState, sched: BirthDeathSchedule,
                         target: TargetDensity, rng: Rng) -> ProposalOutcome:
    """Draw s* ~ q and insert it at the unique slot keeping x nondecreasing.

    An exact tie with an existing component is a null event for an atomless
    proposal; in floating point it is still possible and yields a
    reject-surely outcome.
    """
    if not x.is_sorted():
        raise BrokenKernelError("sorted birth proposed from an unsorted state")
    s_star = float(sched.proposal.sample(rng))
    if math.isnan(s_star):
        raise BrokenKernelError("proposal sampler returned NaN")
    log_q = sched.proposal.log_density(s_star)
    if log_q == NEG_INF:
        raise BrokenKernelError(
            f"proposal sampler returned {s_star!r}, outside the support of its density")
    index = bisect.bisect_left(x.components, s_star)
    proposed = x.insert(index, s_star)
    detail = BoDDetail("birth", index, s_star, log_q, _log_eta(x, index, sched.proposal))
    if s_star in x.components:
        return ProposalOutcome(proposed, NEG_INF, "birth", detail, None)
    log_ratio, lt_new = _ratio_parts(x, proposed, detail, sched, target)
    return ProposalOutcome(proposed, log_ratio, "birth", detail, lt_new)


def _log_eta(x: VarDimState, index: int, proposal: ComponentProposal) -> float | None:
    if proposal.cdf is None:
        return None
    upper = proposal.cdf(x.components[index]) if index < x.k else 1.0
    lower = proposal.cdf(x.components[index - 1]) if index > 0 else 0.0
    return _log(upper - lower)


def death_propose(x: VarDimState, sched: BirthDeathSchedule,
                  target: TargetDensity, rng: Rng) -> ProposalOutcome:
    """Remove a uniformly chosen component (both representations)."""
    if x.k == 0:
        raise BrokenKernelError("death proposed at k=0; schedule must prevent this")
    index = int(rng.integers(0, x.k))
    value = x.components[index]
    proposed = x.remove(index)
    detail = BoDDetail("death", index, value, sched.proposal.log_density(value))
    log_ratio, lt_new = _ratio_parts(x, proposed, detail, sched, target)
    return ProposalOutcome(proposed, log_ratio, "death", detail, lt_new)


@dataclass(frozen=True)
class SortedRestriction:
    """Restriction of an exchangeable target to nondecreasing vectors.

    Each order-k density is rescaled by k! so the restriction carries the same
    mass as the exchangeable original; unsorted states get density zero.
    """

    base: TargetDensity

    def log_density(self, x: VarDimState) -> float:
        if not x.is_sorted():
            return NEG_INF
        return math.lgamma(x.k + 1) + self.base.log_density(x)


def bod_move_set(target: TargetDensity, sched: BirthDeathSchedule,
                 update_propose: Callable[[VarDimState, Rng], ProposalOutcome] | None = None,
                 ) -> MoveSet:
    """Mixture move set {birth, death, update-or-hold} for the given schedule.

    Move selection weights are p_b(x), p_d(x) and the remainder.  When no
    within-model move is supplied, the remaining mass holds the chain in
    place (an always-accepted identity proposal).
    """
    if sched.representation == "sorted":
        birth = lambda x, rng: birth_propose_sorted(x, sched, target, rng)
    else:
        birth = lambda x, rng: birth_propose_unsorted(x, sched, target, rng)

    def death(x, rng):
        return death_propose(x, sched, target, rng)

    def rest_weight(x):
        return max(0.0, 1.0 - sched.p_birth(x) - sched.p_death(x))

    if update_propose is None:
        third = Move("hold", "hold", rest_weight,
                     lambda x, rng: ProposalOutcome(x, 0.0, "hold"))
    else:
        def update(x, rng):
            if x.k == 0:
                return ProposalOutcome(x, 0.0, "update")
            return update_propose(x, rng)
        third = Move("update", "update", rest_weight, update)

    return MoveSet([
        Move("birth", "death", sched.p_birth, birth),
        Move("death", "birth", sched.p_death, death),
        third,
    ])
