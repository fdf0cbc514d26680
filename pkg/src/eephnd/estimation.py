"""Maximum-likelihood fitting, bootstrap intervals and information criteria.

Optimization runs on an unconstrained reparameterization (``log`` for
positive parameters, ``logit`` for the mixture weight) so every likelihood
evaluation sees valid parameters. Each restart is a Nelder-Mead search that
is re-launched from its own optimum until the relative log-likelihood change
falls below ``tol``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .distributions import Model, get_model, model_of
from .errors import BootstrapError, ConvergenceError, DegenerateDataError, DomainError, EephndError
from .rng import RngStream


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 8
    max_iters: int = 2000
    tol: float = 1e-10
    seed: int = 0

    def as_dict(self) -> dict:
        return {"restarts": self.restarts, "max_iters": self.max_iters, "tol": self.tol, "seed": self.seed}


@dataclass
class FitResult:
    model_tag: str
    params: object
    loglik: float
    k: int
    n: int
    converged: bool
    iterations: int
    restarts_used: int

    def as_dict(self) -> dict:
        return {
            "model": self.model_tag,
            "params": self.params.as_dict(),
            "loglik": self.loglik,
            "k": self.k,
            "n": self.n,
            "converged": self.converged,
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
        }


@dataclass(frozen=True)
class InfoCriteria:
    aic: float
    bic: float
    caic_bozdogan: float
    aicc: float

    def as_dict(self) -> dict:
        return {"aic": self.aic, "bic": self.bic, "caic_bozdogan": self.caic_bozdogan, "aicc": self.aicc}


@dataclass
class BootstrapCI:
    intervals: dict[str, tuple[float, float]]
    level: float
    B: int
    n_failed: int
    seed_metadata: dict
    degenerate: list[str] = field(default_factory=list)
    estimates: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "B": self.B,
            "n_failed": self.n_failed,
            "intervals": {k: {"lower": lo, "upper": hi} for k, (lo, hi) in self.intervals.items()},
            "degenerate": list(self.degenerate),
            "seed": self.seed_metadata,
        }


# --- reparameterization -------------------------------------------------------

def _expit(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _logit(p):
    return math.log(p) - math.log1p(-p)


def to_unconstrained(model: Model, params) -> np.ndarray:
    out = []
    for kind, v in zip(model.kinds, params.as_dict().values()):
        if kind == "pos":
            out.append(math.log(v))
        elif kind == "unit":
            v = min(max(v, 1e-12), 1.0 - 1e-12)
            out.append(_logit(v))
        else:
            out.append(float(v))
    return np.array(out)


def from_unconstrained(model: Model, z):
    vals = []
    for kind, zi in zip(model.kinds, z):
        if kind == "pos":
            vals.append(math.exp(zi))
        elif kind == "unit":
            vals.append(_expit(zi))
        else:
            vals.append(float(zi))
    return model.params_cls(*vals)


# --- likelihood ------------------------------------------------------------------

def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size and (not np.all(x > 0) or not np.all(np.isfinite(x))):
        raise DomainError("observations must be finite and strictly positive")
    return x


def log_likelihood(data, model_tag: str, params) -> float:
    """Sum of log densities. ``-inf`` marks a zero-density observation."""
    x = _as_data(data)
    if x.size == 0:
        return 0.0
    model = get_model(model_tag)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ll = float(np.sum(model.logpdf(x, params)))
    if math.isnan(ll):
        return -math.inf
    return ll


def _objective(model: Model, x: np.ndarray):
    def neg_ll(z):
        try:
            params = from_unconstrained(model, z)
        except (DomainError, OverflowError):
            return math.inf
        with np.errstate(divide="ignore", over="ignore", invalid="ignore", under="ignore"):
            ll = float(np.sum(model.logpdf(x, params)))
        return -ll if math.isfinite(ll) else math.inf
    return neg_ll


def initial_guesses(model: Model, x: np.ndarray) -> list:
    """Moment-informed starting points for the multistart search."""
    m, sd = float(np.mean(x)), float(np.std(x))
    sd = sd if sd > 0 else m
    grid = (0.5, 1.0, 2.0)
    cls = model.params_cls
    if model.tag == "eephnd":
        return [cls(a, m, th, lam, sd, p1)
                for a, th, lam, p1 in itertools.product(grid, grid, grid, (0.1, 0.5, 0.9))]
    if model.tag == "eep":
        return [cls(a, m, th, lam) for a, th, lam in itertools.product(grid, grid, grid)]
    if model.tag == "hn":
        return [cls(math.sqrt(float(np.mean(x * x)))), cls(sd)]
    if model.tag == "lognormal":
        lx = np.log(x)
        return [cls(float(lx.mean()), max(float(lx.std()), 1e-3))]
    if model.tag == "gamma-rayleigh":
        m2 = float(np.mean(x * x))
        return [cls(a, math.sqrt(m2 / (2 * a))) for a in grid]
    raise DomainError(f"no initialization rule for {model.tag}")


def _nelder_mead_restart(fun, z0: np.ndarray, cfg: FitConfig):
    """Repeated Nelder-Mead from its own optimum; returns (z, f, iters, converged)."""
    dim = len(z0)
    z, f = np.array(z0, dtype=float), fun(z0)
    iters = 0
    step = 0.5
    converged = False
    while iters < cfg.max_iters:
        simplex = np.vstack([z] + [z + step * np.eye(dim)[i] for i in range(dim)])
        res = minimize(
            fun, z, method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "maxiter": cfg.max_iters - iters,
                "xatol": 1e-9,
                "fatol": cfg.tol * max(1.0, abs(f)) if math.isfinite(f) else 1e-12,
            },
        )
        iters += int(res.nit)
        improved = math.isfinite(res.fun) and res.fun <= f
        prev = f
        if improved:
            z, f = np.asarray(res.x, dtype=float), float(res.fun)
        if math.isfinite(prev) and math.isfinite(f):
            rel = abs(prev - f) / max(1.0, abs(prev))
            if rel < cfg.tol and res.status == 0:
                converged = True
                break
        step = 0.1
    return z, f, iters, converged


def fit_mle(data, model_tag: str, config: FitConfig | None = None, starts=None) -> FitResult:
    """Maximum-likelihood fit of one zoo model to fully observed data.

    Parameters
    ----------
    data : array_like
        Positive observations.
    model_tag : str
        Key of :data:`eephnd.distributions.MODELS`.
    config : FitConfig, optional
        Multistart and stopping controls.
    starts : sequence of parameter records, optional
        Extra starting points, ranked together with the default grid.

    Returns
    -------
    FitResult
        Best restart; ``converged`` is False if no restart met ``tol``
        within ``max_iters``.
    """
    cfg = config or FitConfig()
    model = get_model(model_tag)
    x = _as_data(data)
    if x.size < model.k + 1:
        raise DomainError(f"{model.label} needs at least {model.k + 1} observations, got {x.size}")
    if np.all(x == x[0]):
        raise DegenerateDataError("all observations are identical")
    fun = _objective(model, x)

    candidates = list(starts or []) + initial_guesses(model, x)
    zs = [to_unconstrained(model, c) for c in candidates]
    if cfg.restarts > len(zs):
        stream = RngStream(cfg.seed, 0)
        base = zs[0]
        for _ in range(cfg.restarts - len(zs)):
            zs.append(base + stream._gen.normal(0.0, 1.0, size=len(base)))
    ranked = sorted(range(len(zs)), key=lambda i: (fun(zs[i]), i))
    chosen = ranked[: max(1, cfg.restarts)]

    best = None
    total_iters = 0
    for i in chosen:
        z, f, iters, conv = _nelder_mead_restart(fun, zs[i], cfg)
        total_iters += iters
        if best is None or f < best[1]:
            best = (z, f, conv)
    z, f, conv = best
    loglik = -f if math.isfinite(f) else -math.inf
    return FitResult(
        model_tag=model.tag,
        params=from_unconstrained(model, z),
        loglik=loglik,
        k=model.k,
        n=int(x.size),
        converged=bool(conv and math.isfinite(loglik)),
        iterations=total_iters,
        restarts_used=len(chosen),
    )


# --- bootstrap ---------------------------------------------------------------------

BOOTSTRAP_FIT = FitConfig(restarts=1)


def percentile_intervals(estimates, names, level: float = 0.95):
    """Per-column percentile intervals; returns ``(intervals, degenerate_names)``.

    A column whose interval collapses to a point is flagged rather than widened.
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    lo_q, hi_q = (1.0 - level) / 2.0, (1.0 + level) / 2.0
    intervals, degenerate = {}, []
    for j, name in enumerate(names):
        lo, hi = (float(v) for v in np.quantile(est[:, j], [lo_q, hi_q]))
        intervals[name] = (lo, hi)
        if lo == hi:
            degenerate.append(name)
    return intervals, degenerate


def bootstrap_ci(
    data,
    model_tag: str,
    B: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    point: FitResult | None = None,
    config: FitConfig | None = None,
    threads: int = 1,
) -> BootstrapCI:
    """Nonparametric percentile bootstrap.

    Resample ``b`` draws its row indices from ``RngStream(seed, b)`` and is
    refit from the full-data estimate (ranked against the default grid), so
    results do not depend on ``threads``. Failed or unconverged refits are
    dropped and counted.
    """
    if B < 100:
        raise DomainError("B must be at least 100")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    x = _as_data(data)
    model = get_model(model_tag)
    cfg = config or replace(BOOTSTRAP_FIT, seed=seed)
    if point is None:
        point = fit_mle(x, model_tag, FitConfig(seed=seed))
    n = x.size

    def one(b: int):
        idx = RngStream(seed, b).integers(n, n)
        try:
            fit = fit_mle(x[idx], model.tag, cfg, starts=[point.params])
        except EephndError:
            return None
        if not fit.converged:
            return None
        return np.array(list(fit.params.as_dict().values()))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(B)))
    else:
        results = [one(b) for b in range(B)]
    ok = [r for r in results if r is not None]
    n_failed = B - len(ok)
    if n_failed > 0.2 * B:
        raise BootstrapError(f"{n_failed} of {B} bootstrap refits failed")
    est = np.vstack(ok)
    intervals, degenerate = percentile_intervals(est, model.params_cls.names(), level)
    return BootstrapCI(intervals, level, B, n_failed,
                       {"seed": seed, "streams": f"0..{B - 1}", "algorithm": RngStream(seed).metadata["algorithm"]},
                       degenerate, est)


# --- information criteria ------------------------------------------------------------

def information_criteria(fit: FitResult, require_converged: bool = True) -> InfoCriteria:
    """AIC, BIC, Bozdogan's CAIC (BIC + k) and small-sample AICc."""
    if require_converged and not fit.converged:
        raise ConvergenceError(f"{fit.model_tag} fit did not converge")
    k, n, ll = fit.k, fit.n, fit.loglik
    if n <= k + 1:
        raise DomainError(f"AICc undefined for n={n} <= k+1={k + 1}")
    aic = 2 * k - 2 * ll
    bic = k * math.log(n) - 2 * ll
    return InfoCriteria(aic=aic, bic=bic, caic_bozdogan=bic + k, aicc=aic + 2 * k * (k + 1) / (n - k - 1))


def params_for(model_tag: str, values: dict):
    return get_model(model_tag).params_cls.from_dict(values)


__all__ = [
    "FitConfig", "FitResult", "InfoCriteria", "BootstrapCI", "log_likelihood", "fit_mle",
    "bootstrap_ci", "percentile_intervals", "information_criteria", "initial_guesses", "to_unconstrained",
    "from_unconstrained", "model_of",
]
