"""Exact and brute-force verification tools.

Finite discrete surrogates of the variable-dimensional space make the full
transition matrix of the birth-or-death sampler computable, so stationarity
and detailed balance can be checked to floating-point accuracy.  Small
sinusoid problems are cross-checked against direct quadrature of the target.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .birthdeath import (
    BirthDeathSchedule,
    BoDDetail,
    move_log_ratio,
    pmf_component_proposal,
)
from .core import NEG_INF, BrokenKernelError, ConfigurationError, Rng, VarDimState
from .sinusoid import sinusoid_log_target


@dataclass
class DiscreteToySpec:
    """A finite surrogate: M labelled points, truncated order, tabulated target.

    ``weights`` maps component tuples (including the empty tuple) to
    nonnegative target weights; tuples with repeated entries implicitly get
    weight zero, mirroring the null diagonal of an atomless component space.
    """

    points: tuple[float, ...]
    k_max: int
    weights: dict[tuple[float, ...], float]
    q: tuple[float, ...]
    lam: float = 1.0
    c: float = 0.25
    representation: str = "unsorted"

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise ConfigurationError("toy points must be distinct")
        if len(self.q) != len(self.points):
            raise ConfigurationError("q must have one probability per point")
        if not any(w > 0 for w in self.weights.values()):
            raise ConfigurationError("target weights must not all vanish")

    def schedule(self, ratio_mode: str = "corrected") -> BirthDeathSchedule:
        return BirthDeathSchedule.green(
            self.lam, self.k_max, self.c,
            proposal=pmf_component_proposal(self.points, self.q),
            representation=self.representation,
            ratio_mode=ratio_mode)


class DiscreteToyTarget:
    """Tabulated target density over the toy's states."""

    def __init__(self, spec: DiscreteToySpec):
        self.spec = spec

    def log_density(self, x: VarDimState) -> float:
        comps = x.components
        if len(comps) > self.spec.k_max:
            return NEG_INF
        if len(set(comps)) != len(comps):
            return NEG_INF
        if self.spec.representation == "sorted" and not x.is_sorted():
            return NEG_INF
        w = self.spec.weights.get(comps, 0.0)
        return math.log(w) if w > 0.0 else NEG_INF


def enumerate_states(spec: DiscreteToySpec) -> list[VarDimState]:
    """All states with distinct components up to k_max, in canonical order.

    Orders ascend by k, then lexicographically; the empty state comes first.
    Sorted specs enumerate combinations, unsorted ones ordered arrangements.
    """
    n_states = sum(
        math.perm(len(spec.points), k) for k in range(spec.k_max + 1))
    if n_states >= 10_000:
        raise ConfigurationError(f"state space too large to enumerate ({n_states})")
    pts = tuple(sorted(spec.points))
    arrange = (itertools.combinations if spec.representation == "sorted"
               else itertools.permutations)
    states = [VarDimState()]
    for k in range(1, spec.k_max + 1):
        states.extend(VarDimState(tup) for tup in arrange(pts, k))
    return states


def normalized_target_vector(spec: DiscreteToySpec,
                             states: list[VarDimState] | None = None,
                             legacy: bool = False) -> np.ndarray:
    """The exact stationary law: normalized weights, or weights / k! in legacy mode.

    A chain driven by the legacy ratio is exactly the corrected chain for the
    reweighted target f_k / k!, so its fixed point is known in closed form.
    """
    if states is None:
        states = enumerate_states(spec)
    w = np.array([spec.weights.get(s.components, 0.0) for s in states], dtype=float)
    if legacy:
        w = w / np.array([math.factorial(s.k) for s in states], dtype=float)
    total = w.sum()
    if total <= 0:
        raise ConfigurationError("toy target has zero total mass")
    return w / total


def build_transition_matrix(spec: DiscreteToySpec,
                            ratio_mode: str = "corrected") -> np.ndarray:
    """Exact one-step transition matrix of the birth-or-death sampler.

    Every elementary proposal's probability is multiplied by its acceptance
    probability (computed through the implemented ratio code path) and summed
    into the row; all rejection mass lands on the diagonal.  Rows must sum to
    one to 1e-12, otherwise the kernel accounting is broken.
    """
    states = enumerate_states(spec)
    index = {s.components: i for i, s in enumerate(states)}
    target = DiscreteToyTarget(spec)
    sched = spec.schedule(ratio_mode)
    n = len(states)
    matrix = np.zeros((n, n))

    for xi, x in enumerate(states):
        p_b = sched.p_birth(x)
        p_d = sched.p_death(x)
        matrix[xi, xi] += max(0.0, 1.0 - p_b - p_d)
        if p_b > 0.0:
            for s_star, q_s in zip(spec.points, spec.q):
                if q_s <= 0.0:
                    continue
                log_q = sched.proposal.log_density(s_star)
                if spec.representation == "sorted":
                    slots = [_sorted_slot(x, s_star)]
                    slot_prob = p_b * q_s
                else:
                    slots = range(x.k + 1)
                    slot_prob = p_b * q_s / (x.k + 1)
                for i in slots:
                    proposed = x.insert(i, s_star)
                    if spec.representation == "sorted" and s_star in x.components:
                        alpha = 0.0
                    else:
                        detail = BoDDetail("birth", i, s_star, log_q)
                        alpha = math.exp(min(0.0, move_log_ratio(
                            x, proposed, detail, sched, target)))
                    _accumulate(matrix, index, xi, proposed, slot_prob, alpha)
        if p_d > 0.0:
            for i in range(x.k):
                value = x.components[i]
                proposed = x.remove(i)
                detail = BoDDetail("death", i, value, sched.proposal.log_density(value))
                alpha = math.exp(min(0.0, move_log_ratio(
                    x, proposed, detail, sched, target)))
                _accumulate(matrix, index, xi, proposed, p_d / x.k, alpha)

    row_err = np.abs(matrix.sum(axis=1) - 1.0).max()
    if row_err > 1e-12:
        raise BrokenKernelError(f"transition rows sum to 1 +/- {row_err:.3e}")
    return matrix


def _sorted_slot(x: VarDimState, value: float) -> int:
    i = 0
    while i < x.k and x.components[i] < value:
        i += 1
    return i


def _accumulate(matrix, index, xi, proposed, prob, alpha):
    target_index = index.get(proposed.components)
    if target_index is None:
        # Proposals landing outside the enumerated support (duplicates) must
        # have been auto-rejected through a zero-density target.
        if alpha != 0.0:
            raise BrokenKernelError(
                f"accepting proposal into unenumerated state {proposed.components}")
        matrix[xi, xi] += prob
        return
    matrix[xi, target_index] += prob * alpha
    matrix[xi, xi] += prob * (1.0 - alpha)


def stationary_distribution(matrix: np.ndarray, tol: float = 1e-12,
                            max_iter: int = 1_000_000) -> np.ndarray:
    """Left fixed point of a row-stochastic matrix by power iteration."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ matrix
        nxt /= nxt.sum()
        resid = float(np.abs(nxt - pi).max())
        pi = nxt
        if resid < tol:
            return pi
    raise RuntimeError(f"power iteration did not reach residual {tol} "
                       f"in {max_iter} iterations")


def detailed_balance_residual(matrix: np.ndarray, pi: np.ndarray) -> float:
    """max over cells of |pi_x P(x,x') - pi_x' P(x',x)|."""
    flow = pi[:, None] * matrix
    return float(np.abs(flow - flow.T).max())


def _frequency_partition(y, lam: float, delta2: float, k_max: int,
                         jitter: float, grid_size: int,
                         n_refine: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Riemann partition of (0, pi) that resolves narrow likelihood peaks.

    A uniform coarse pass spends half the evaluation budget; the highest
    scoring coarse cells (by their own midpoint value or a neighbour's, so a
    peak hiding at a cell boundary is still caught) are subdivided with the
    remaining budget.  Returns cell midpoints and log cell widths; the total
    number of density evaluations stays at ``grid_size`` per axis.
    """
    n_coarse = grid_size // 2
    sub = (grid_size - n_coarse) // n_refine
    width = math.pi / n_coarse
    mids = (np.arange(n_coarse) + 0.5) * width
    vals = np.array([sinusoid_log_target(y, (w,), lam, delta2, k_max, jitter)
                     for w in mids])
    padded = np.concatenate(([NEG_INF], vals, [NEG_INF]))
    scores = np.maximum(np.maximum(padded[:-2], padded[1:-1]), padded[2:])
    refine = set(np.argsort(scores)[::-1][:n_refine].tolist())

    points: list[float] = []
    log_widths: list[float] = []
    for i in range(n_coarse):
        left = i * width
        if i in refine:
            points.extend(left + (np.arange(sub) + 0.5) * width / sub)
            log_widths.extend([math.log(width / sub)] * sub)
        else:
            points.append(mids[i])
            log_widths.append(math.log(width))
    return np.array(points), np.array(log_widths)


def quadrature_posterior_k(y, delta2: float, lam: float, k_max: int,
                           grid_size: int = 200, jitter: float = 0.0) -> np.ndarray:
    """Posterior law of the model order by Riemann sums over (0, pi)^k grids.

    Only small problems (k_max <= 2) are supported.  The order-1 sum uses the
    peak-resolving partition above (``grid_size`` evaluations), the order-2 sum
    its tensor product (``grid_size``^2 evaluations); all sums are max-log
    shifted so no overflow can occur.
    """
    if k_max > 2:
        raise ConfigurationError("quadrature oracle supports k_max <= 2 only")
    if grid_size < 100:
        raise ConfigurationError("grid_size must be at least 100")
    y = np.asarray(y, dtype=float)

    log_mass = [sinusoid_log_target(y, (), lam, delta2, k_max, jitter)]
    if k_max >= 1:
        points, log_widths = _frequency_partition(y, lam, delta2, k_max, jitter, grid_size)
        vals = np.array([sinusoid_log_target(y, (w,), lam, delta2, k_max, jitter)
                         for w in points])
        log_mass.append(float(logsumexp(vals + log_widths)))
    if k_max >= 2:
        vals2 = np.array([
            sinusoid_log_target(y, (w1, w2), lam, delta2, k_max, jitter) + lw1 + lw2
            for w1, lw1 in zip(points, log_widths)
            for w2, lw2 in zip(points, log_widths)])
        log_mass.append(float(logsumexp(vals2)))

    log_mass = np.array(log_mass)
    shifted = np.exp(log_mass - log_mass.max())
    return shifted / shifted.sum()


def tv_distance(p, q) -> float:
    """Total variation distance between two laws on the same finite support."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support size mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def chi_square_stat(counts, pmf) -> float:
    """Pearson chi-square statistic of observed counts against a pmf."""
    counts = np.asarray(counts, dtype=float)
    pmf = np.asarray(pmf, dtype=float)
    if counts.shape != pmf.shape:
        raise ValueError(f"support size mismatch: {counts.shape} vs {pmf.shape}")
    if np.any((pmf <= 0) & (counts > 0)):
        raise ValueError("pmf must be positive wherever counts are positive")
    expected = pmf * counts.sum()
    mask = expected > 0
    return float((((counts - expected) ** 2)[mask] / expected[mask]).sum())


def random_toy_spec(rng: Rng, m: int = 3, k_max: int = 2,
                    representation: str = "unsorted") -> DiscreteToySpec:
    """A randomized toy: random target weights, proposal pmf and schedule constants.

    Weights are bounded away from zero so every randomized chain is
    well-conditioned for exact stationarity checks.
    """
    points = tuple(np.linspace(0.4, 2.8, m))
    arrange = (itertools.combinations if representation == "sorted"
               else itertools.permutations)
    weights: dict[tuple[float, ...], float] = {(): float(rng.uniform(0.1, 1.0))}
    for k in range(1, k_max + 1):
        for tup in arrange(points, k):
            weights[tup] = float(rng.uniform(0.1, 1.0))
    q = rng.uniform(0.2, 1.0, size=m)
    return DiscreteToySpec(
        points=points,
        k_max=k_max,
        weights=weights,
        q=tuple(q / q.sum()),
        lam=float(rng.uniform(0.8, 3.0)),
        c=float(rng.uniform(0.15, 0.5)),
        representation=representation,
    )
