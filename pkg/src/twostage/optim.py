"""Projected gradient descent with Barzilai-Borwein steps and Armijo backtracking.

Used both for the monotone editing tables (projection onto nonnegative
increments) and, without projection, for the symmetric logistic baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FitError

ARMIJO_C = 1e-4
MIN_STEP = 1e-20
MAX_STEP = 1e10


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    n_iter: int
    converged: bool
    message: str
    history: list[float] = field(default_factory=list)


def minimize_projected(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    *,
    ftol: float = 1e-7,
    max_iter: int = 300,
) -> OptimResult:
    """Minimize ``fun`` over the set described by ``project``.

    Stops when the relative objective decrease ``(f_k - f_{k+1}) / max(|f_k|,
    |f_{k+1}|, 1)`` drops to ``ftol`` or below, or after ``max_iter``
    iterations.  Every accepted step satisfies the Armijo condition along the
    projection arc, so the recorded objective history is nonincreasing.
    """
    project = project or (lambda z: z)
    x = project(np.array(x0, dtype=float))
    f, g = fun(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise FitError(f"non-finite objective at the starting point (f={f})")
    history = [f]
    gmax = float(np.max(np.abs(g))) if g.size else 0.0
    alpha = 1.0 / max(gmax, 1.0)
    message = "max_iter reached"
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        step = alpha
        while True:
            x_new = project(x - step * g)
            d = x_new - x
            f_new, g_new = fun(x_new)
            finite = np.isfinite(f_new) and np.all(np.isfinite(g_new))
            if finite and f_new <= f + ARMIJO_C * float(g @ d):
                break
            step *= 0.5
            if step < MIN_STEP:
                if not finite:
                    raise FitError("objective became non-finite and step sizes collapsed")
                x_new, f_new, g_new = x, f, g
                break
        s, y = x_new - x, g_new - g
        rel = (f - f_new) / max(abs(f), abs(f_new), 1.0)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        if rel <= ftol:
            converged = True
            message = "relative decrease below ftol" if np.any(s) else "no admissible descent step"
            break
        sy = float(s @ y)
        alpha = float(np.clip(float(s @ s) / sy, 1e-12, MAX_STEP)) if sy > 0 else min(2.0 * step, MAX_STEP)
    return OptimResult(x, float(f), n_iter, converged, message, history)
