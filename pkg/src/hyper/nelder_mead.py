# src/hyper/nelder_mead.py
"""
Derivative-free Nelder-Mead simplex on top of scipy.optimize.minimize
(fminsearch conventions: reflection 1, expansion 2, contraction 0.5,
shrink 0.5, non-adaptive).

Stops when the simplex diameter (max-norm distance to the best vertex) is
below xtol AND the value spread is below ftol, or after max_iter iterations.
With restarts > 0 the search is started again from the best vertex with a
fresh simplex until a restart gains no more than ftol.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import minimize

from src.utils.errors import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NelderMeadOptions:
    """
    Fields:
      - xtol:         simplex diameter tolerance
      - ftol:         value spread tolerance
      - max_iter:     iteration cap per run (None -> 200 * k)
      - initial_step: fixed edge length of the initial simplex; None uses
                      5% of each x0 component (0.00025 for zero components)
      - restarts:     extra runs from the best vertex
    """

    xtol: float = 1e-6
    ftol: float = 1e-8
    max_iter: Optional[int] = None
    initial_step: Optional[float] = None
    restarts: int = 0


@dataclass
class NelderMeadResult:
    x: np.ndarray
    value: float
    iterations: int
    evaluations: int
    converged: bool
    # best value after every iteration, across restarts
    trace: List[float] = field(default_factory=list)
    runs: int = 1


def _initial_simplex(x0: np.ndarray, initial_step: Optional[float]) -> np.ndarray:
    k = x0.size
    simplex = np.tile(x0, (k + 1, 1))
    for i in range(k):
        if initial_step is not None:
            simplex[i + 1, i] += initial_step
        elif x0[i] != 0.0:
            simplex[i + 1, i] *= 1.05
        else:
            simplex[i + 1, i] = 0.00025
    return simplex


def _single_run(f: Callable[[np.ndarray], float], x0: np.ndarray, options: NelderMeadOptions, max_iter: int):
    trace: List[float] = []

    def record(intermediate_result) -> None:
        trace.append(float(intermediate_result.fun))
        if len(trace) >= max_iter:
            raise StopIteration

    res = minimize(
        f,
        x0,
        method="Nelder-Mead",
        callback=record,
        options={
            "initial_simplex": _initial_simplex(x0, options.initial_step),
            "xatol": options.xtol,
            "fatol": options.ftol,
            # the callback enforces the cap
            "maxiter": max_iter + 1,
            "adaptive": False,
        },
    )
    simplex, values = res.final_simplex
    diameter = float(np.max(np.abs(simplex[1:] - simplex[0]))) if simplex.shape[0] > 1 else 0.0
    spread = float(np.max(values) - np.min(values))
    converged = bool(diameter <= options.xtol and spread <= options.ftol)
    return np.asarray(simplex[0], dtype=float).copy(), float(values[0]), trace, converged


def minimize_nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: np.ndarray,
    options: Optional[NelderMeadOptions] = None,
) -> NelderMeadResult:
    """
    Minimize `objective` from x0.

    Non-finite values away from x0 count as +inf (the vertex is rejected).

    Raises:
        InvalidInputError: empty x0, negative restarts or objective not finite at x0.
    """
    options = options or NelderMeadOptions()
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    k = x0.size
    if k < 1:
        raise InvalidInputError("Nelder-Mead needs at least one coordinate")
    if options.restarts < 0:
        raise InvalidInputError(f"restarts must be >= 0, got {options.restarts}")
    max_iter = options.max_iter if options.max_iter is not None else 200 * k

    f0 = float(objective(x0))
    if not math.isfinite(f0):
        raise InvalidInputError(f"Objective is not finite at the starting point (value {f0})")

    evaluations = 1

    def f(x: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        value = float(objective(x))
        return value if math.isfinite(value) else math.inf

    x, value, trace, converged = _single_run(f, x0, options, max_iter)
    runs = 1
    for _ in range(options.restarts):
        x_next, value_next, trace_next, converged = _single_run(f, x, options, max_iter)
        runs += 1
        gain = value - value_next
        trace.extend(min(v, value) for v in trace_next)
        if value_next < value:
            x, value = x_next, value_next
        if gain <= options.ftol:
            break

    if not converged:
        logger.warning(f"Nelder-Mead stopped after {len(trace)} iterations without meeting the tolerances")

    return NelderMeadResult(
        x=x,
        value=value,
        iterations=len(trace),
        evaluations=evaluations,
        converged=converged,
        trace=trace,
        runs=runs,
    )
