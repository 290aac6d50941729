"""Comparison metrics between policy traces, and generalized-Bellman model checks.

The model checks operate on small abstract MDPs ``(P, C)`` and verify that
single and composed (multi-step) models share the fixed point of
``V = C + P.T @ V``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from statistics import median
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .exceptions import InvalidArgumentError, ModelValidityError
from .trace import PolicyTrace


def _actions(p) -> np.ndarray:
    return np.asarray(p.action if isinstance(p, PolicyTrace) else p, dtype=float)


def calibration_error(policy_a, policy_b, horizon: Optional[int] = None) -> float:
    """Difference in on-hours divided by the horizon, in percent.

    Accepts traces or action sequences.
    """
    a, b = _actions(policy_a), _actions(policy_b)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"policy lengths differ: {len(a)} vs {len(b)}")
    horizon = len(a) if horizon is None else horizon
    if horizon <= 0:
        raise InvalidArgumentError("horizon must be positive")
    return 100.0 * abs(float(a.sum()) - float(b.sum())) / horizon


def batch_calibration_error(policies_a: Sequence, policies_b: Sequence,
                            horizon: Optional[int] = None) -> float:
    """Mean calibration error over paired start points."""
    if len(policies_a) != len(policies_b):
        raise InvalidArgumentError("batches must pair up one-to-one")
    if not policies_a:
        raise InvalidArgumentError("empty batch")
    errs = [calibration_error(a, b, horizon) for a, b in zip(policies_a, policies_b)]
    return float(np.mean(errs))


def mae(series_a, series_b) -> float:
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"series shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise InvalidArgumentError("empty series")
    return float(np.mean(np.abs(a - b)))


def median_wall_time(fn: Callable[[], object], repeats: int = 5) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return median(times)


@dataclass
class SolverSummary:
    """One summary row: averages over start points."""

    name: str
    operating_hours: float
    electricity_cents: float
    discomfort_c: float
    weighted_cost: float
    feasible_fraction: float

    @classmethod
    def from_traces(cls, name: str, traces: Sequence[PolicyTrace]) -> "SolverSummary":
        return cls(
            name=name,
            operating_hours=float(np.mean([t.on_hours for t in traces])),
            electricity_cents=float(np.mean([t.total_electricity for t in traces])),
            discomfort_c=float(np.mean([t.total_discomfort for t in traces])),
            weighted_cost=float(np.mean([t.total_cost for t in traces])),
            feasible_fraction=float(np.mean([t.feasible for t in traces])),
        )


@dataclass
class ComparisonReport:
    """Solver ``a`` measured against reference solver ``b`` over paired start points."""

    solver_a: str
    solver_b: str
    n_starts: int
    horizon: int
    mae_state_c: float
    mae_electricity_cents: float
    ref_avg_electricity_cents: float
    mae_discomfort_c: float
    ref_avg_discomfort_c: float
    calibration_error_pct: float
    speedup: float
    time_a_s: float
    time_b_s: float
    summaries: List[SolverSummary] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return asdict(self)

    def format(self) -> str:
        lines = [
            f"comparison: {self.solver_a} vs {self.solver_b} "
            f"({self.n_starts} start points, {self.horizon} h)",
            f"  MAE indoor temperature      {self.mae_state_c:.4f} C",
            f"  MAE electricity             {self.mae_electricity_cents:.4f} cents "
            f"(reference average {self.ref_avg_electricity_cents:.2f})",
            f"  MAE discomfort              {self.mae_discomfort_c:.4f} C "
            f"(reference average {self.ref_avg_discomfort_c:.2f})",
            f"  calibration error           {self.calibration_error_pct:.4f} %",
            f"  speedup ({self.solver_a} over {self.solver_b})  {self.speedup:.3g}x "
            f"({self.time_a_s:.4g} s vs {self.time_b_s:.4g} s)",
            "",
            f"  {'solver':<10}{'on-hours':>10}{'elec ($)':>10}{'discomf (C)':>13}"
            f"{'weighted':>14}{'in-band':>9}",
        ]
        for s in self.summaries:
            lines.append(f"  {s.name:<10}{s.operating_hours:>10.2f}{s.electricity_cents / 100:>10.2f}"
                         f"{s.discomfort_c:>13.2f}{s.weighted_cost:>14.4f}{s.feasible_fraction:>9.0%}")
        return "\n".join(lines)


def compare(name_a: str, traces_a: Sequence[PolicyTrace], name_b: str,
            traces_b: Sequence[PolicyTrace], time_a: float = float("nan"),
            time_b: float = float("nan")) -> ComparisonReport:
    if len(traces_a) != len(traces_b) or not traces_a:
        raise InvalidArgumentError("trace batches must be non-empty and paired")
    ta = np.stack([t.t_in_c for t in traces_a])
    tb = np.stack([t.t_in_c for t in traces_b])
    el_a = [t.total_electricity for t in traces_a]
    el_b = [t.total_electricity for t in traces_b]
    d_a = [t.total_discomfort for t in traces_a]
    d_b = [t.total_discomfort for t in traces_b]
    return ComparisonReport(
        solver_a=name_a, solver_b=name_b, n_starts=len(traces_a), horizon=len(traces_a[0]),
        mae_state_c=mae(ta, tb),
        mae_electricity_cents=mae(el_a, el_b), ref_avg_electricity_cents=float(np.mean(el_b)),
        mae_discomfort_c=mae(d_a, d_b), ref_avg_discomfort_c=float(np.mean(d_b)),
        calibration_error_pct=batch_calibration_error(traces_a, traces_b),
        speedup=time_b / time_a if time_a > 0 else float("nan"),
        time_a_s=time_a, time_b_s=time_b,
        summaries=[SolverSummary.from_traces(name_a, traces_a),
                   SolverSummary.from_traces(name_b, traces_b)],
    )


# -- abstract models ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AbstractMdpModel:
    """Cost vector ``C`` and transition matrix ``P`` with ``V = C + P.T @ V``.

    ``P`` is substochastic (rows sum to at most 1, the remainder leaks to an
    implicit absorbing terminal).
    """

    P: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        C = np.asarray(self.C, dtype=float)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "C", C)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or C.shape != (P.shape[0],):
            raise InvalidArgumentError(f"incompatible shapes P{P.shape}, C{C.shape}")

    @property
    def n(self) -> int:
        return len(self.C)

    def augmented(self) -> np.ndarray:
        """Block matrix [[1, C^T], [0, P]] acting on the augmented value [1, V]."""
        M = np.zeros((self.n + 1, self.n + 1))
        M[0, 0] = 1.0
        M[0, 1:] = self.C
        M[1:, 1:] = self.P
        return M

    @classmethod
    def from_augmented(cls, M: np.ndarray) -> "AbstractMdpModel":
        return cls(M[1:, 1:].copy(), M[0, 1:].copy())

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.P)))) if self.n else 0.0


def compose_models(models: Sequence[AbstractMdpModel]) -> AbstractMdpModel:
    """Product of the augmented matrices, in order.

    For ``n`` copies of one model this gives ``C_n = sum_{i<n} (P.T)^i C`` and
    ``P_n = P^n``.
    """
    if not models:
        raise InvalidArgumentError("need at least one model")
    n = models[0].n
    M = np.eye(n + 1)
    for m in models:
        if m.n != n:
            raise InvalidArgumentError(f"dimension mismatch: {m.n} vs {n}")
        M = M @ m.augmented()
    return AbstractMdpModel.from_augmented(M)


def n_step_cost(model: AbstractMdpModel, n: int) -> np.ndarray:
    """Direct evaluation of ``sum_{i=0}^{n-1} (P.T)^i C``."""
    out = np.zeros(model.n)
    term = model.C.copy()
    for _ in range(n):
        out = out + term
        term = model.P.T @ term
    return out


def solve_value(model: AbstractMdpModel) -> np.ndarray:
    """Fixed point of ``V = C + P.T V``; requires spectral radius below one."""
    rho = model.spectral_radius()
    if not rho < 1.0 - 1e-12:
        raise ModelValidityError(f"spectral radius {rho:.6g} >= 1: the fixed point is not unique")
    return np.linalg.solve(np.eye(model.n) - model.P.T, model.C)


def check_generalized_bellman(model: AbstractMdpModel, v: Optional[np.ndarray] = None) -> float:
    """Infinity-norm residual of ``V - C - P.T V`` (``V`` solved when omitted)."""
    if v is None:
        v = solve_value(model)
    v = np.asarray(v, dtype=float)
    if v.shape != (model.n,):
        raise InvalidArgumentError(f"value vector shape {v.shape} does not match {model.n} states")
    return float(np.max(np.abs(v - model.C - model.P.T @ v))) if model.n else 0.0


def iterate_backup(model: AbstractMdpModel, v0: Optional[np.ndarray] = None, tol: float = 1e-12,
                   max_iter: int = 10_000):
    """Repeated ``V <- C + P.T V``; returns ``(V, iterations)``."""
    v = np.zeros(model.n) if v0 is None else np.asarray(v0, dtype=float)
    for i in range(1, max_iter + 1):
        nv = model.C + model.P.T @ v
        if np.max(np.abs(nv - v)) <= tol:
            return nv, i
        v = nv
    return v, max_iter


def random_model(rng: np.random.Generator, n_states: int, leak=(0.05, 0.7)) -> AbstractMdpModel:
    """Random substochastic model; each row keeps 1 - leak of its mass."""
    P = rng.random((n_states, n_states)) * (rng.random((n_states, n_states)) < 0.7)
    P[np.arange(n_states), rng.integers(0, n_states, n_states)] += 0.1
    P /= P.sum(axis=1, keepdims=True)
    P *= (1.0 - rng.uniform(*leak, size=n_states))[:, None]
    C = rng.uniform(-5.0, 10.0, n_states)
    return AbstractMdpModel(P, C)


def sharing_fixed_point(rng: np.random.Generator, v: np.ndarray) -> AbstractMdpModel:
    """Random model whose fixed point is ``v`` (cost chosen as ``v - P.T v``)."""
    base = random_model(rng, len(v))
    return AbstractMdpModel(base.P, v - base.P.T @ v)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""


def validation_suite(seed: int = 0, n_models: int = 1000, max_states: int = 8,
                     tol: float = 1e-9, iter_tol: float = 1e-6, inject_fault: bool = False):
    """Randomized generalized-Bellman checks; returns a list of :class:`CheckResult`.

    ``inject_fault`` perturbs the cost vector of every composed model, a
    negative control that must make the composition check fail.
    """
    rng = np.random.default_rng(seed)
    worst = {"single": 0.0, "self_composition": 0.0, "mixed_composition": 0.0,
             "n_step_formula": 0.0, "backup_iteration": 0.0}
    max_iters = 0
    for _ in range(n_models):
        n = int(rng.integers(1, max_states + 1))
        m = random_model(rng, n)
        v = solve_value(m)
        worst["single"] = max(worst["single"], check_generalized_bellman(m, v))
        for k in range(2, 6):
            comp = compose_models([m] * k)
            if inject_fault:
                comp = AbstractMdpModel(comp.P, comp.C + 1e-3)
            worst["self_composition"] = max(worst["self_composition"],
                                            check_generalized_bellman(comp, v))
            worst["n_step_formula"] = max(worst["n_step_formula"],
                                          float(np.max(np.abs(comp.C - n_step_cost(m, k)))))
        k = int(rng.integers(2, 6))
        parts = [m] + [sharing_fixed_point(rng, v) for _ in range(k - 1)]
        mixed = compose_models(parts)
        if inject_fault:
            mixed = AbstractMdpModel(mixed.P, mixed.C + 1e-3)
        worst["mixed_composition"] = max(worst["mixed_composition"],
                                         check_generalized_bellman(mixed, v))
        vi, iters = iterate_backup(m, tol=1e-13)
        max_iters = max(max_iters, iters)
        worst["backup_iteration"] = max(worst["backup_iteration"], float(np.max(np.abs(vi - v))))
    scale = lambda name: iter_tol if name == "backup_iteration" else tol  # noqa: E731
    results = [CheckResult(name, w <= scale(name), w) for name, w in worst.items()]
    results[-1].detail = f"max iterations {max_iters}"
    return results
