"""Block-coordinate forward-backward iteration with an incremental gradient cache.

The solver keeps ``s = W A^T A W^T w`` alongside the iterate, so the full
gradient is ``s - W A^T y`` at no extra cost.  After a step only the
changed blocks differ, and ``s`` is refreshed with one application of the
normal operator to the block-sparse difference.
"""

from dataclasses import dataclass, field
import time

import numpy as np

from .errors import ConfigurationError, ConvergenceSignal
from .problem import normal_apply, objective
from .selection import SelectionPolicy, candidate_updates, select
from .wavelet import CoeffVector, forward_dwt2, inverse_dwt2

__all__ = [
    "SolverConfig",
    "SolverState",
    "IterationRecord",
    "RunTrace",
    "init_state",
    "step",
    "run",
    "make_rng",
]


def make_rng(seed):
    """PCG64 stream; the only generator used for selection draws."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SolverConfig:
    policy: SelectionPolicy
    max_iterations: int = 200
    step_factor: float = None
    seed: int = 0
    convergence_tol: float = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.step_factor is not None and not 0 < self.step_factor < 2:
            raise ConfigurationError(f"step_factor must lie in (0, 2), got {self.step_factor}")

    def stepsize(self, p):
        if self.step_factor is None:
            return p.stepsize
        return self.step_factor / p.lipschitz

    def echo(self):
        return {
            "method": self.policy.name,
            "p": self.policy.p,
            "cyclic_strict": self.policy.cyclic_strict,
            "max_iterations": self.max_iterations,
            "step_factor": self.step_factor,
            "seed": self.seed,
            "convergence_tol": self.convergence_tol,
        }


@dataclass
class SolverState:
    iterate: CoeffVector
    grad_cache: CoeffVector
    iteration: int
    rng: np.random.Generator

    def gradient(self, p):
        return CoeffVector(p.layout, self.grad_cache.data - p.aty.data)


@dataclass
class IterationRecord:
    """One solver iteration.

    ``objective`` is evaluated after the update; ``norms`` and ``mask``
    describe the update that was taken.  ``time_s`` is wall time since the
    start of the run; ``eval_s`` is the part of it spent evaluating the
    objective for this trace.
    """

    k: int
    time_s: float
    eval_s: float
    objective: float
    mask: np.ndarray
    norms: np.ndarray
    probabilities: np.ndarray = None

    @property
    def solver_time_s(self):
        return self.time_s - self.eval_s


@dataclass
class RunTrace:
    records: list
    final_iterate: CoeffVector
    config: dict
    initial_objective: float
    status: str = "max_iterations"
    iterates: list = field(default=None, repr=False)

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def masks(self):
        return np.array([r.mask for r in self.records], dtype=bool)

    @property
    def final_objective(self):
        return self.records[-1].objective if self.records else self.initial_objective

    @property
    def total_time_s(self):
        return self.records[-1].time_s if self.records else 0.0

    def objective_at(self, iterations):
        """Objective after ``iterations`` steps (clamped to the last record)."""
        if iterations <= 0 or not self.records:
            return self.initial_objective
        return self.records[min(iterations, len(self.records)) - 1].objective

    def objective_at_time(self, seconds, exclude_eval=True):
        """Objective of the last iterate finished within ``seconds`` of solver time."""
        value = self.initial_objective
        for r in self.records:
            t = r.solver_time_s if exclude_eval else r.time_s
            if t > seconds:
                break
            value = r.objective
        return value

    def reconstruction(self, bank):
        return inverse_dwt2(self.final_iterate, bank)


def init_state(p, seed=0):
    """Start from the wavelet coefficients of the observation."""
    w = forward_dwt2(p.observation, p.levels, p.bank)
    return SolverState(w, normal_apply(p, w), 0, make_rng(seed))


def step(p, state, policy, gamma=None, convergence_tol=None):
    """One BC-FB iteration, in place.

    Returns ``(mask, candidates)``.  Raises :class:`ConvergenceSignal` when
    the full update norm is at most ``convergence_tol`` (0 when unset) or
    a greedy rule finds nothing to update; the state is then untouched.
    """
    cand = candidate_updates(p, state.iterate, state.gradient(p), gamma)
    tol = 0.0 if convergence_tol is None else convergence_tol
    if cand.total_norm <= tol:
        raise ConvergenceSignal(f"update norm {cand.total_norm:.3e} <= {tol:.3e}")
    mask = select(policy, state.iteration, p.levels, cand.norms, state.rng)
    active = mask.active
    if active.size:
        delta = np.zeros(p.layout.size)
        for i in active:
            sl = p.layout.block_slice(i)
            delta[sl] = -cand.delta.data[sl]
        state.iterate.data += delta
        state.grad_cache.data += normal_apply(p, CoeffVector(p.layout, delta)).data
    state.iteration += 1
    return mask, cand


def run(p, config, keep_iterates=False):
    """Run ``config.max_iterations`` steps (fewer on convergence) and trace them."""
    state = init_state(p, config.seed)
    gamma = config.stepsize(p)
    records = []
    iterates = [state.iterate.copy()] if keep_iterates else None
    initial = objective(p, state.iterate)
    status = "max_iterations"
    eval_total = 0.0
    start = time.perf_counter()
    for k in range(config.max_iterations):
        try:
            mask, cand = step(p, state, config.policy, gamma, config.convergence_tol)
        except ConvergenceSignal:
            status = "converged"
            break
        t_eval = time.perf_counter()
        value = objective(p, state.iterate)
        now = time.perf_counter()
        eval_total += now - t_eval
        records.append(
            IterationRecord(k, now - start, eval_total, value, mask.bits.copy(), cand.norms, mask.probabilities)
        )
        if keep_iterates:
            iterates.append(state.iterate.copy())
    return RunTrace(records, state.iterate, config.echo(), initial, status, iterates)
