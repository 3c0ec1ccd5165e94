"""Global-best particle swarm minimizer over a box."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import optimize

from src.modeling.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PsoResult:
    x: np.ndarray
    fun: float
    n_evals: int
    polished: bool = False
    history: List[float] = field(default_factory=list, compare=False)


def minimize_pso(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[Tuple[float, float]],
    rng: np.random.Generator,
    swarm: int = 40,
    iters: int = 200,
    inertia: float = 0.7,
    cognitive: float = 1.5,
    social: float = 1.5,
    polish: bool = False,
) -> PsoResult:
    """Minimize `objective` over the box `bounds`.

    Positions are clipped to the box and the velocity of a clipped
    coordinate is zeroed. All randomness comes from `rng`, so a fixed
    generator state gives identical results. With `polish`, the best particle
    is refined by Nelder-Mead and the refinement is kept only if it improves
    the objective while staying inside the box.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(hi <= lo):
        raise ConfigurationError(f"invalid PSO bounds {list(bounds)}")
    dim = lo.size
    span = hi - lo

    def _f(x: np.ndarray) -> float:
        v = float(objective(x))
        return v if np.isfinite(v) else np.inf

    pos = lo + rng.random((swarm, dim)) * span
    vel = rng.uniform(-span, span, size=(swarm, dim)) * 0.1
    fit = np.array([_f(p) for p in pos])
    best_pos = pos.copy()
    best_fit = fit.copy()
    g = int(np.argmin(best_fit))
    g_pos, g_fit = best_pos[g].copy(), float(best_fit[g])
    n_evals = swarm
    history = [g_fit]

    for it in range(iters):
        r1 = rng.random((swarm, dim))
        r2 = rng.random((swarm, dim))
        vel = inertia * vel + cognitive * r1 * (best_pos - pos) + social * r2 * (g_pos - pos)
        np.clip(vel, -span, span, out=vel)
        pos = pos + vel
        out = (pos < lo) | (pos > hi)
        pos = np.clip(pos, lo, hi)
        vel[out] = 0.0
        fit = np.array([_f(p) for p in pos])
        n_evals += swarm
        improved = fit < best_fit
        best_pos[improved] = pos[improved]
        best_fit[improved] = fit[improved]
        g = int(np.argmin(best_fit))
        if best_fit[g] < g_fit:
            g_pos, g_fit = best_pos[g].copy(), float(best_fit[g])
        history.append(g_fit)
        logger.debug(f"pso iteration {it + 1}: best={g_fit:.6g}")

    polished = False
    if polish and np.isfinite(g_fit):
        res = optimize.minimize(_f, g_pos, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        n_evals += int(res.nfev)
        if res.fun < g_fit and np.all(res.x >= lo) and np.all(res.x <= hi):
            g_pos, g_fit, polished = np.asarray(res.x, dtype=float), float(res.fun), True

    return PsoResult(x=g_pos, fun=g_fit, n_evals=n_evals, polished=polished, history=history)
