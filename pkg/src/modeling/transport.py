"""
Monotone lower-triangular polynomial transport maps.

Component i of the map depends on standardized inputs x_1..x_i and is linear
in its coefficients over a total-degree probabilists' Hermite basis. Fitting
minimizes, per component and independently,

    J(c) = mean[ T_i(x)^2 / 2 - log dT_i/dx_i(x) ] + ridge * |c_nonconstant|^2

which is convex in c. Monotonicity is not built into the basis: the log term
is a barrier at the samples, Newton starts from the identity T_i = x_i and the
line search never leaves the feasible set.
"""

import asyncio
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import hermite_e as H
from scipy import linalg

from src.modeling.configuration import Configuration
from src.modeling.errors import ConditioningError, ConfigurationError, FitError
from src.modeling.timeseries import TimeSeries, standardize

logger = logging.getLogger(__name__)

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
MIN_SAMPLES_PER_COEFF = 10
MAX_DOUBLINGS = 60
ROOT_TOL = 1e-10


def total_degree_multi_indices(dim: int, degree: int) -> Tuple[Tuple[int, ...], ...]:
    """All dim-tuples of nonnegative integers with total degree <= degree.

    Ordered by total degree, then lexicographically.
    """
    out = [a for a in itertools.product(range(degree + 1), repeat=dim) if sum(a) <= degree]
    out.sort(key=lambda a: (sum(a), tuple(-v for v in a)))
    return tuple(out)


@dataclass(frozen=True)
class PolynomialExpansion:
    """T(x) = sum_a c_a prod_j He_{a_j}(x_j); derivatives are taken in the last variable."""

    dim: int
    multi_indices: Tuple[Tuple[int, ...], ...]
    coefficients: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        idx = tuple(tuple(int(v) for v in a) for a in self.multi_indices)
        coeffs = np.asarray(self.coefficients, dtype=float)
        if len(set(idx)) != len(idx):
            raise ConfigurationError("duplicate multi-indices")
        if coeffs.shape != (len(idx),):
            raise ConfigurationError(f"{coeffs.size} coefficients for {len(idx)} multi-indices")
        if any(len(a) != self.dim or min(a) < 0 for a in idx):
            raise ConfigurationError(f"multi-indices must be nonnegative {self.dim}-tuples")
        coeffs.setflags(write=False)
        object.__setattr__(self, "multi_indices", idx)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return max(sum(a) for a in self.multi_indices)

    @property
    def last_degree(self) -> int:
        return max(a[-1] for a in self.multi_indices)

    def features(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Basis values and their derivatives in x_dim, both M x K."""
        return basis_features(np.atleast_2d(x), self.multi_indices)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        phi, _ = self.features(x)
        return phi @ self.coefficients

    def derivative(self, x: np.ndarray) -> np.ndarray:
        _, dphi = self.features(x)
        return dphi @ self.coefficients

    def last_variable_coefficients(self, prefix: np.ndarray) -> np.ndarray:
        """Hermite coefficients of t -> T(prefix, t), one row per prefix sample."""
        prefix = np.asarray(prefix, dtype=float)
        m = prefix.shape[0] if prefix.ndim == 2 else 1
        out = np.zeros((m, self.last_degree + 1))
        if self.dim > 1:
            prefix = prefix.reshape(m, self.dim - 1)
            tables = H.hermevander(prefix.T, self.degree)  # (dim-1, M, deg+1)
        for a, c in zip(self.multi_indices, self.coefficients):
            term = np.full(m, c)
            for j in range(self.dim - 1):
                term = term * tables[j][:, a[j]]
            out[:, a[-1]] += term
        return out

    @classmethod
    def from_monomials_1d(cls, coeffs: Sequence[float]) -> "PolynomialExpansion":
        """Build a 1-D expansion from ascending monomial coefficients."""
        herm = H.poly2herme(np.asarray(coeffs, dtype=float))
        return cls(1, tuple((n,) for n in range(herm.size)), herm)


def basis_features(x: np.ndarray, multi_indices: Sequence[Tuple[int, ...]]) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate the tensor Hermite basis and its derivative in the last variable."""
    m, k = x.shape
    idx = np.asarray(multi_indices, dtype=int)
    degree = int(idx.max()) if idx.size else 0
    tables = H.hermevander(x.T, degree)  # (k, M, degree+1)
    dlast = np.zeros_like(tables[-1])
    if degree >= 1:
        dlast[:, 1:] = tables[-1][:, :-1] * np.arange(1, degree + 1)
    prefix = np.ones((m, idx.shape[0]))
    for j in range(k - 1):
        prefix *= tables[j][:, idx[:, j]]
    phi = prefix * tables[-1][:, idx[:, -1]]
    dphi = prefix * dlast[:, idx[:, -1]]
    return phi, dphi


# ---------------------- Objective and Newton solver ----------------------

def objective_terms(
    coeffs: np.ndarray,
    phi: np.ndarray,
    dphi: np.ndarray,
    ridge: float,
    penalty_mask: np.ndarray,
    order: int = 2,
) -> Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]:
    """J(c), its gradient and Hessian. Returns J = inf outside the feasible set."""
    m = phi.shape[0]
    t = phi @ coeffs
    dt = dphi @ coeffs
    if np.any(dt <= 0):
        return math.inf, None, None
    pen = penalty_mask * coeffs
    value = float(np.mean(0.5 * t**2 - np.log(dt)) + ridge * pen @ pen)
    if order == 0:
        return value, None, None
    inv_dt = 1.0 / dt
    grad = (phi.T @ t - dphi.T @ inv_dt) / m + 2 * ridge * pen
    if order == 1:
        return value, grad, None
    scaled = dphi * inv_dt[:, None]
    hess = (phi.T @ phi + scaled.T @ scaled) / m + 2 * ridge * np.diag(penalty_mask)
    return value, grad, hess


def fit_component(
    samples: np.ndarray,
    degree: int,
    ridge: float = 1e-4,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> PolynomialExpansion:
    """Fit one map component to standardized M x i samples by damped Newton."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    m, dim = samples.shape
    multi = total_degree_multi_indices(dim, degree)
    if m < MIN_SAMPLES_PER_COEFF * len(multi):
        raise ConfigurationError(
            f"{m} samples is too few for {len(multi)} coefficients (need {MIN_SAMPLES_PER_COEFF}x)"
        )
    phi, dphi = basis_features(samples, multi)
    mask = np.array([0.0 if sum(a) == 0 else 1.0 for a in multi])

    identity = tuple(1 if j == dim - 1 else 0 for j in range(dim))
    coeffs = np.zeros(len(multi))
    coeffs[multi.index(identity)] = 1.0
    value, grad, hess = objective_terms(coeffs, phi, dphi, ridge, mask)
    if not math.isfinite(value):
        raise FitError("identity initialization is infeasible")

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = float(np.max(np.abs(grad)))
        if gnorm < tol:
            converged = True
            break
        try:
            step = -linalg.cho_solve(linalg.cho_factor(hess), grad)
        except linalg.LinAlgError:
            raise ConditioningError("map objective Hessian is singular", float(np.linalg.cond(hess)))
        slope = float(grad @ step)
        alpha = 1.0
        while alpha > 1e-14:
            trial = coeffs + alpha * step
            trial_value, _, _ = objective_terms(trial, phi, dphi, ridge, mask, order=0)
            if trial_value <= value + 1e-4 * alpha * slope:
                break
            alpha *= 0.5
        else:
            logger.debug(f"line search stalled at iteration {it}, |g|={gnorm:.2e}")
            break
        coeffs = trial
        value, grad, hess = objective_terms(coeffs, phi, dphi, ridge, mask)
    gnorm = float(np.max(np.abs(grad)))
    converged = converged or gnorm < tol

    if np.any(dphi @ coeffs <= 0):
        raise FitError("monotonicity lost at training samples")
    try:
        cov = linalg.inv(hess) / m
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except linalg.LinAlgError:
        se = np.full(len(multi), np.nan)
    logger.info(
        f"component dim={dim} degree={degree}: J={value:.6f} |g|={gnorm:.2e} iters={it} converged={converged}"
    )
    return PolynomialExpansion(
        dim,
        multi,
        coeffs,
        diagnostics={
            "objective": value,
            "gradient_norm": gnorm,
            "iterations": it,
            "converged": converged,
            "standard_errors": se.tolist(),
        },
    )


# ---------------------- Maps ----------------------

@dataclass(frozen=True)
class MonotoneTriangularMap:
    """Triangular map acting on standardized, reordered inputs.

    Map coordinate i reads input channel `ordering[i]`; `means`, `stds`,
    `medians` and `monotone_domain` are indexed by map coordinate, the latter
    two in standardized units.
    """

    components: Tuple[PolynomialExpansion, ...]
    degree: int
    means: np.ndarray
    stds: np.ndarray
    ordering: Tuple[int, ...]
    monotone_domain: Tuple[Tuple[float, float], ...]
    medians: np.ndarray
    names: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.components)
        for i, comp in enumerate(self.components):
            if comp.dim != i + 1:
                raise ConfigurationError(f"component {i} must depend on {i + 1} variables, not {comp.dim}")
        if sorted(self.ordering) != list(range(n)):
            raise ConfigurationError(f"ordering {self.ordering} is not a permutation of {n} channels")
        for name in ("means", "stds", "medians"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ConfigurationError(f"{name} must have {n} entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.stds <= 0):
            raise ConfigurationError("standardization stds must be positive")
        if len(self.monotone_domain) != n:
            raise ConfigurationError("one monotone interval per component required")
        object.__setattr__(self, "ordering", tuple(int(o) for o in self.ordering))
        object.__setattr__(self, "names", tuple(self.names) or tuple(f"y{j + 1}" for j in range(n)))

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def map_names(self) -> Tuple[str, ...]:
        """Channel names in map order."""
        return tuple(self.names[o] for o in self.ordering)

    def standardized(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return (y[:, list(self.ordering)] - self.means) / self.stds

    def unstandardized(self, x: np.ndarray) -> np.ndarray:
        y_map = x * self.stds + self.means
        out = np.empty_like(y_map)
        out[:, list(self.ordering)] = y_map
        return out

    @classmethod
    def identity(cls, n: int, means: Optional[np.ndarray] = None, stds: Optional[np.ndarray] = None) -> "MonotoneTriangularMap":
        comps = []
        for i in range(n):
            e = tuple(1 if j == i else 0 for j in range(i + 1))
            comps.append(PolynomialExpansion(i + 1, (e,), np.ones(1)))
        return cls(
            components=tuple(comps),
            degree=1,
            means=np.zeros(n) if means is None else means,
            stds=np.ones(n) if stds is None else stds,
            ordering=tuple(range(n)),
            monotone_domain=tuple((-math.inf, math.inf) for _ in range(n)),
            medians=np.zeros(n),
        )

    @classmethod
    def from_monomials_1d(cls, coeffs: Sequence[float], domain: Tuple[float, float] = (-50.0, 50.0)) -> "MonotoneTriangularMap":
        """1-D map T(y) = sum_n b_n y^n without standardization."""
        comp = PolynomialExpansion.from_monomials_1d(coeffs)
        lo, hi, _ = monotone_interval(comp, np.zeros(0), domain[0], domain[1], 0.0, 4096)
        return cls(
            components=(comp,),
            degree=comp.degree,
            means=np.zeros(1),
            stds=np.ones(1),
            ordering=(0,),
            monotone_domain=((lo, hi),),
            medians=np.zeros(1),
        )


def monotone_interval(
    comp: PolynomialExpansion,
    prefix: np.ndarray,
    lo: float,
    hi: float,
    center: float,
    n_grid: int,
) -> Tuple[float, float, bool]:
    """Largest grid interval around `center` where dT/dx_last > 0.

    Returns (lo, hi, full) where `full` says the whole [lo, hi] grid passed.
    """
    grid = np.linspace(lo, hi, n_grid)
    pts = np.column_stack([np.tile(np.asarray(prefix, dtype=float), (n_grid, 1)), grid]) if comp.dim > 1 else grid[:, None]
    ok = comp.derivative(pts) > 0
    if ok.all():
        return float(lo), float(hi), True
    if not ok.any():
        raise FitError("component is nowhere increasing on its verification grid")
    start = int(np.argmin(np.abs(grid - center)))
    if not ok[start]:
        # no increasing point at the median; fall back to the longest increasing run
        runs = np.split(np.arange(n_grid), np.nonzero(np.diff(ok.astype(int)))[0] + 1)
        best = max((r for r in runs if ok[r[0]]), key=len)
        return float(grid[best[0]]), float(grid[best[-1]]), False
    a = start
    while a > 0 and ok[a - 1]:
        a -= 1
    b = start
    while b < n_grid - 1 and ok[b + 1]:
        b += 1
    return float(grid[a]), float(grid[b]), False


def _validate_ordering(ordering: Optional[Sequence[int]], n: int) -> Tuple[int, ...]:
    if ordering is None:
        return tuple(range(n))
    order = tuple(int(o) for o in ordering)
    if sorted(order) != list(range(n)):
        raise ConfigurationError(f"ordering {list(order)} is not a permutation of {n} channels")
    return order


async def afit_map(
    ts: TimeSeries,
    degree: int,
    ordering: Optional[Sequence[int]] = None,
    config: Optional[Configuration] = None,
) -> MonotoneTriangularMap:
    """Fit all components concurrently (bounded by `max_concurrency`)."""
    cfg = config or Configuration()
    order = _validate_ordering(ordering, ts.n_channels)
    std_ts, means, stds = standardize(ts)
    x = std_ts.values[:, list(order)]
    sem = asyncio.Semaphore(cfg.max_concurrency)

    async def _fit(i: int) -> PolynomialExpansion:
        async with sem:
            return await asyncio.to_thread(
                fit_component, x[:, : i + 1], degree, cfg.ridge, cfg.newton_tol, cfg.newton_max_iter
            )

    comps = await asyncio.gather(*[_fit(i) for i in range(ts.n_channels)])

    medians = np.median(x, axis=0)
    domains: List[Tuple[float, float]] = []
    warnings: List[str] = []
    names = tuple(ts.names[o] for o in order)
    for i, comp in enumerate(comps):
        lo = float(x[:, i].min()) - 3.0
        hi = float(x[:, i].max()) + 3.0
        a, b, full = monotone_interval(comp, medians[:i], lo, hi, float(medians[i]), cfg.monotone_grid)
        domains.append((a, b))
        if not full:
            msg = f"component {i} ({names[i]}) is monotone only on [{a:.3f}, {b:.3f}] of [{lo:.3f}, {hi:.3f}]"
            warnings.append(msg)
            logger.warning(msg)

    return MonotoneTriangularMap(
        components=tuple(comps),
        degree=degree,
        means=means[list(order)],
        stds=stds[list(order)],
        ordering=order,
        monotone_domain=tuple(domains),
        medians=medians,
        names=ts.names,
        warnings=tuple(warnings),
    )


def fit_map(
    ts: TimeSeries,
    degree: int,
    ordering: Optional[Sequence[int]] = None,
    config: Optional[Configuration] = None,
) -> MonotoneTriangularMap:
    """Synchronous wrapper around `afit_map` (must not be called from a running loop)."""
    return asyncio.run(afit_map(ts, degree, ordering, config))


# ---------------------- Evaluation ----------------------

def transport_samples(tmap: MonotoneTriangularMap, y: np.ndarray) -> np.ndarray:
    """Apply the map to M x N samples (input channel order); output in map order."""
    x = tmap.standardized(y)
    q = np.empty_like(x)
    for i, comp in enumerate(tmap.components):
        q[:, i] = comp.evaluate(x[:, : i + 1])
    return q


def forward(tmap: MonotoneTriangularMap, y: Sequence[float]) -> np.ndarray:
    """q = T(y) for one N-vector."""
    return transport_samples(tmap, np.asarray(y, dtype=float)[None, :])[0]


def log_density_samples(tmap: MonotoneTriangularMap, y: np.ndarray) -> np.ndarray:
    """Pullback log-density of the standard normal at M x N samples."""
    x = tmap.standardized(y)
    out = np.full(x.shape[0], -float(np.sum(np.log(tmap.stds))))
    bad = np.zeros(x.shape[0], dtype=bool)
    for i, comp in enumerate(tmap.components):
        phi, dphi = comp.features(x[:, : i + 1])
        t = phi @ comp.coefficients
        dt = dphi @ comp.coefficients
        bad |= dt <= 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out += -0.5 * t**2 - LOG_SQRT_2PI + np.log(np.where(dt > 0, dt, 1.0))
    out[bad] = -math.inf
    return out


def pullback_log_density(tmap: MonotoneTriangularMap, y: Sequence[float]) -> float:
    """log of the pulled-back standard normal density at one point."""
    return float(log_density_samples(tmap, np.asarray(y, dtype=float)[None, :])[0])


def _eval_1d(a: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise evaluate sum_n a[:, n] He_n(t) and its derivative."""
    v = H.hermevander(t, a.shape[1] - 1)
    dv = np.zeros_like(v)
    if a.shape[1] > 1:
        dv[:, 1:] = v[:, :-1] * np.arange(1, a.shape[1])
    return np.sum(a * v, axis=1), np.sum(a * dv, axis=1)


def _solve_component(
    a: np.ndarray, q: np.ndarray, domain: Tuple[float, float], center: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Solve sum_n a[:, n] He_n(t) = q for t, row-wise, by Newton-bisection."""
    m = q.size
    lo_dom, hi_dom = domain
    if not math.isfinite(lo_dom):
        lo_dom = center - 10.0
    if not math.isfinite(hi_dom):
        hi_dom = center + 10.0
    mid = 0.5 * (lo_dom + hi_dom)
    lo = np.full(m, lo_dom)
    hi = np.full(m, hi_dom)
    flo = _eval_1d(a, lo)[0] - q
    fhi = _eval_1d(a, hi)[0] - q

    # root below the bracket: push lo down
    active = flo > 0
    for k in range(MAX_DOUBLINGS):
        if not active.any():
            break
        new_lo = mid - (mid - lo_dom) * 2.0 ** (k + 1)
        f_new, d_new = _eval_1d(a[active], np.full(active.sum(), new_lo))
        f_new -= q[active]
        ok = d_new > 0
        idx = np.nonzero(active)[0]
        # a non-increasing endpoint ends the search for that sample
        active[idx[~ok]] = False
        grow = idx[ok]
        hi[grow] = lo[grow]
        fhi[grow] = flo[grow]
        lo[grow] = new_lo
        flo[grow] = f_new[ok]
        active[grow] = flo[grow] > 0

    # root above the bracket: push hi up
    active = (fhi < 0) & (flo <= 0)
    for k in range(MAX_DOUBLINGS):
        if not active.any():
            break
        new_hi = mid + (hi_dom - mid) * 2.0 ** (k + 1)
        f_new, d_new = _eval_1d(a[active], np.full(active.sum(), new_hi))
        f_new -= q[active]
        ok = d_new > 0
        idx = np.nonzero(active)[0]
        active[idx[~ok]] = False
        grow = idx[ok]
        lo[grow] = hi[grow]
        flo[grow] = fhi[grow]
        hi[grow] = new_hi
        fhi[grow] = f_new[ok]
        active[grow] = fhi[grow] < 0

    t = 0.5 * (lo + hi)
    below = flo > 0
    above = fhi < 0
    t[below] = lo[below]
    t[above] = hi[above]
    clamped = below | above
    t[flo == 0] = lo[flo == 0]
    t[fhi == 0] = hi[fhi == 0]
    active = ~clamped & (flo != 0) & (fhi != 0)

    for _ in range(200):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        ft, dft = _eval_1d(a[idx], t[idx])
        ft -= q[idx]
        neg = ft < 0
        lo[idx[neg]] = t[idx[neg]]
        hi[idx[~neg]] = t[idx[~neg]]
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t[idx] - ft / dft
        use_newton = (dft > 0) & (newton > lo[idx]) & (newton < hi[idx])
        t_new = np.where(use_newton, newton, 0.5 * (lo[idx] + hi[idx]))
        done = (np.abs(t_new - t[idx]) < ROOT_TOL) | (ft == 0) | (hi[idx] - lo[idx] < ROOT_TOL)
        t[idx] = np.where(ft == 0, t[idx], t_new)
        active[idx[done]] = False
    return t, clamped


def inverse_samples(tmap: MonotoneTriangularMap, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Invert the map on M x N reference samples (map order).

    Returns (y in input channel order, clamped flag per sample).
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    m, n = q.shape
    if n != tmap.dim:
        raise ConfigurationError(f"expected {tmap.dim} columns, got {n}")
    x = np.empty_like(q)
    clamped = np.zeros(m, dtype=bool)
    for i, comp in enumerate(tmap.components):
        a = comp.last_variable_coefficients(x[:, :i])
        x[:, i], c = _solve_component(a, q[:, i], tmap.monotone_domain[i], float(tmap.medians[i]))
        clamped |= c
    return tmap.unstandardized(x), clamped


def inverse(tmap: MonotoneTriangularMap, q: Sequence[float]) -> np.ndarray:
    """y = T^{-1}(q) for one N-vector (clamped to the monotone branch if needed)."""
    y, _ = inverse_samples(tmap, np.asarray(q, dtype=float)[None, :])
    return y[0]


def monomial_coefficients(tmap: MonotoneTriangularMap, component: int = 0) -> np.ndarray:
    """Ascending monomial coefficients of a 1-D component in raw (unstandardized) units."""
    comp = tmap.components[component]
    if comp.dim != 1:
        raise ConfigurationError("monomial form is only reported for 1-D components")
    herm = np.zeros(comp.last_degree + 1)
    for a, c in zip(comp.multi_indices, comp.coefficients):
        herm[a[0]] += c
    p = Polynomial(H.herme2poly(herm))
    m, s = float(tmap.means[component]), float(tmap.stds[component])
    return p(Polynomial([-m / s, 1.0 / s])).coef


# ---------------------- Serialization ----------------------

def map_to_dict(tmap: MonotoneTriangularMap) -> Dict[str, Any]:
    return {
        "degree": tmap.degree,
        "names": list(tmap.names),
        "ordering": list(tmap.ordering),
        "means": tmap.means.tolist(),
        "stds": tmap.stds.tolist(),
        "medians": tmap.medians.tolist(),
        "monotone_domain": [list(d) for d in tmap.monotone_domain],
        "warnings": list(tmap.warnings),
        "components": [
            {
                "dim": c.dim,
                "multi_indices": [list(a) for a in c.multi_indices],
                "coefficients": c.coefficients.tolist(),
                "diagnostics": c.diagnostics,
            }
            for c in tmap.components
        ],
    }


def map_from_dict(data: Dict[str, Any]) -> MonotoneTriangularMap:
    comps = tuple(
        PolynomialExpansion(
            int(c["dim"]),
            tuple(tuple(a) for a in c["multi_indices"]),
            np.asarray(c["coefficients"], dtype=float),
            diagnostics=dict(c.get("diagnostics", {})),
        )
        for c in data["components"]
    )
    return MonotoneTriangularMap(
        components=comps,
        degree=int(data["degree"]),
        means=np.asarray(data["means"], dtype=float),
        stds=np.asarray(data["stds"], dtype=float),
        ordering=tuple(data["ordering"]),
        monotone_domain=tuple((float(a), float(b)) for a, b in data["monotone_domain"]),
        medians=np.asarray(data["medians"], dtype=float),
        names=tuple(data.get("names", ())),
        warnings=tuple(data.get("warnings", ())),
    )
