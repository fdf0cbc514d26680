"""Kaplan-Meier, Cox proportional hazards (Efron ties) and Harrell's C."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import distributions as dist
from .errors import ConvergenceError, DegenerateDataError, DomainError, SeparationError
from .special import erfc

Z95 = 1.959963984540054

CONCORDANCE_PROTOCOL = (
    "harrell-c; predicted score_i = -S_model(t_i) at each subject's observed time, "
    "read as a survival-time ordering (higher = longer), i.e. risk_i = S_model(t_i); "
    "comparable pairs: event_i and t_i < t_j; score ties count 0.5"
)


@dataclass(frozen=True)
class SurvivalSample:
    time: float
    event: bool
    covariates: dict[str, float] | None = None

    def __post_init__(self):
        if not (self.time > 0 and math.isfinite(self.time)):
            raise DomainError(f"survival time must be positive, got {self.time!r}")


def as_arrays(samples: Sequence[SurvivalSample]) -> tuple[np.ndarray, np.ndarray]:
    time = np.array([s.time for s in samples], dtype=float)
    event = np.array([bool(s.event) for s in samples], dtype=bool)
    return time, event


def _check_survival(time, event):
    time = np.asarray(time, dtype=float).ravel()
    event = np.asarray(event).astype(bool).ravel()
    if time.size == 0:
        raise DomainError("survival data are empty")
    if time.shape != event.shape:
        raise DomainError("time and event must have the same length")
    if not np.all(time > 0):
        raise DomainError("survival times must be positive")
    return time, event


# --- Kaplan-Meier ---------------------------------------------------------------

@dataclass
class KmCurve:
    event_times: np.ndarray
    survival: np.ndarray
    greenwood_var: np.ndarray
    n_at_risk: np.ndarray
    n_events: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95

    def _index(self, t):
        return np.searchsorted(self.event_times, np.asarray(t, dtype=float), side="right") - 1

    def survival_at(self, t):
        """Right-continuous step evaluation; 1 before the first event."""
        i = self._index(t)
        s = np.where(i >= 0, self.survival[np.clip(i, 0, None)], 1.0)
        return float(s) if np.ndim(t) == 0 else s

    def band_at(self, t) -> tuple[float, float]:
        i = int(self._index(t))
        if i < 0:
            return 1.0, 1.0
        return float(self.lower[i]), float(self.upper[i])

    def as_dict(self) -> dict:
        return {
            "event_times": self.event_times.tolist(),
            "survival": self.survival.tolist(),
            "greenwood_var": self.greenwood_var.tolist(),
            "n_at_risk": self.n_at_risk.tolist(),
            "n_events": self.n_events.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "level": self.level,
            "band": "log-minus-log",
        }


def kaplan_meier(time, event, level: float = 0.95) -> KmCurve:
    """Product-limit estimate with Greenwood variance and log(-log) bands."""
    time, event = _check_survival(time, event)
    if not event.any():
        raise DegenerateDataError("all observations are censored")
    z = Z95 if level == 0.95 else _normal_quantile(0.5 + level / 2.0)
    uniq = np.unique(time[event])
    sorted_t = np.sort(time)
    n_risk = (time.size - np.searchsorted(sorted_t, uniq, side="left")).astype(int)
    ev_sorted = np.sort(time[event])
    d = (np.searchsorted(ev_sorted, uniq, side="right") - np.searchsorted(ev_sorted, uniq, side="left")).astype(int)
    s = np.cumprod(1.0 - d / n_risk)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(n_risk > d, d / (n_risk * (n_risk - d)), np.inf)
    cum = np.cumsum(terms)
    with np.errstate(invalid="ignore"):
        var = np.where(s > 0, s**2 * cum, 0.0)
    lower = np.zeros_like(s)
    upper = np.zeros_like(s)
    for i, (si, ci) in enumerate(zip(s, cum)):
        if si <= 0:
            continue
        if si >= 1 or ci == 0:
            lower[i] = upper[i] = si
            continue
        se = math.sqrt(ci) / abs(math.log(si))
        lower[i] = si ** math.exp(z * se)
        upper[i] = si ** math.exp(-z * se)
    return KmCurve(uniq, s, var, n_risk, d, lower, upper, level)


def _normal_quantile(q: float) -> float:
    from scipy.optimize import brentq
    return brentq(lambda v: 0.5 * erfc(-v / math.sqrt(2.0)) - q, -40, 40, xtol=1e-15)


# --- Cox proportional hazards --------------------------------------------------------

@dataclass(frozen=True)
class CoxCoefficient:
    coef: float
    se: float
    hazard_ratio: float
    ci95: tuple[float, float]
    p_value: float

    def as_dict(self) -> dict:
        return {"coef": self.coef, "se": self.se, "hazard_ratio": self.hazard_ratio,
                "ci95": list(self.ci95), "p_value": self.p_value}


@dataclass
class CoxFit:
    names: list[str]
    coefficients: dict[str, CoxCoefficient]
    loglik: float
    loglik_null: float
    converged: bool
    iterations: int
    ties: str = "efron"

    @property
    def beta(self) -> np.ndarray:
        return np.array([self.coefficients[n].coef for n in self.names])

    def linear_predictor(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.beta

    def as_dict(self) -> dict:
        return {
            "covariates": {n: self.coefficients[n].as_dict() for n in self.names},
            "loglik": self.loglik,
            "loglik_null": self.loglik_null,
            "converged": self.converged,
            "iterations": self.iterations,
            "ties": self.ties,
        }


def _efron_terms(beta, X, time, event, groups):
    eta = X @ beta
    w = np.exp(eta)
    p = X.shape[1]
    ll = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    for risk, dead in groups:
        Xr, wr = X[risk], w[risk]
        Xd, wd = X[dead], w[dead]
        s0r, s1r = wr.sum(), wr @ Xr
        s2r = (Xr * wr[:, None]).T @ Xr
        s0d, s1d = wd.sum(), wd @ Xd
        s2d = (Xd * wd[:, None]).T @ Xd
        m = len(dead)
        ll += eta[dead].sum()
        grad += Xd.sum(axis=0)
        for l in range(m):
            f = l / m
            phi = s0r - f * s0d
            a1 = s1r - f * s1d
            a2 = s2r - f * s2d
            ll -= math.log(phi)
            grad -= a1 / phi
            hess -= a2 / phi - np.outer(a1, a1) / phi**2
    return ll, grad, hess


def cox_ph_fit(X, time, event, names: Sequence[str] | None = None,
               max_iter: int = 50, tol: float = 1e-12) -> CoxFit:
    """Partial-likelihood Cox regression, Efron tie correction, Newton ascent
    with step halving. Standard errors come from the inverse observed
    information; p-values are two-sided Wald tests."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    time, event = _check_survival(time, event)
    if X.shape[0] != time.size:
        raise DomainError("covariate rows must match survival data")
    if not np.all(np.isfinite(X)):
        raise DomainError("covariates contain missing values")
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    if np.unique(time[event]).size < 2:
        raise DegenerateDataError("Cox fit needs at least two distinct event times")
    if np.any(np.ptp(X, axis=0) == 0):
        raise DegenerateDataError("a covariate is constant")

    groups = []
    for t in np.unique(time[event]):
        groups.append((np.flatnonzero(time >= t), np.flatnonzero((time == t) & event)))

    beta = np.zeros(X.shape[1])
    ll, grad, hess = _efron_terms(beta, X, time, event, groups)
    ll_null = ll
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SeparationError("singular information matrix") from exc
        trial = beta + step
        ll_new, g_new, h_new = _efron_terms(trial, X, time, event, groups)
        halvings = 0
        while not (math.isfinite(ll_new) and ll_new >= ll - 1e-12) and halvings < 30:
            step /= 2.0
            trial = beta + step
            ll_new, g_new, h_new = _efron_terms(trial, X, time, event, groups)
            halvings += 1
        if np.any(np.abs(trial) > 50):
            raise SeparationError("a Cox coefficient diverged (|coef| > 50)")
        done = abs(ll_new - ll) <= tol * max(1.0, abs(ll)) and np.max(np.abs(step)) < 1e-8
        beta, ll, grad, hess = trial, ll_new, g_new, h_new
        if done:
            converged = True
            break
    if not converged:
        raise ConvergenceError(f"Cox Newton iterations did not converge in {max_iter} steps")

    cov = np.linalg.inv(-hess)
    coefs = {}
    for j, name in enumerate(names):
        se = math.sqrt(cov[j, j])
        b = float(beta[j])
        z = b / se
        coefs[name] = CoxCoefficient(
            coef=b, se=se, hazard_ratio=math.exp(b),
            ci95=(b - Z95 * se, b + Z95 * se),
            p_value=float(erfc(abs(z) / math.sqrt(2.0))),
        )
    return CoxFit(names, coefs, ll, ll_null, converged, it)


# --- concordance --------------------------------------------------------------------

def concordance_counts(scores, time, event, threads: int = 1) -> tuple[int, int, int]:
    """Integer (concordant, discordant, tied-score) counts over comparable pairs.

    A pair (i, j) is comparable when subject i had the event and
    ``time_i < time_j``; it is concordant when i has the higher risk score.
    """
    time, event = _check_survival(time, event)
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.shape != time.shape:
        raise DomainError("scores must align with survival data")
    rows = np.flatnonzero(event)

    def block(idx):
        ti, si = time[idx][:, None], scores[idx][:, None]
        comparable = ti < time[None, :]
        c = int(np.sum(comparable & (si > scores[None, :])))
        d = int(np.sum(comparable & (si < scores[None, :])))
        t = int(np.sum(comparable & (si == scores[None, :])))
        return c, d, t

    chunks = np.array_split(rows, max(1, min(threads, rows.size)) * 4) if rows.size else []
    chunks = [c for c in chunks if c.size]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, chunks))
    else:
        parts = [block(c) for c in chunks]
    return tuple(int(sum(p[k] for p in parts)) for k in range(3))


def concordance_index(scores, time, event, threads: int = 1) -> float:
    """Harrell's C by direct pair enumeration; score ties count one half."""
    c, d, t = concordance_counts(scores, time, event, threads)
    total = c + d + t
    if total == 0:
        raise DegenerateDataError("no comparable pairs")
    return (2 * c + t) / (2 * total)


def parametric_survival_predict(params, t):
    """Model survival probability ``S(t)``."""
    return dist.survival(t, params)


def model_concordance_protocol(fit, time, event, threads: int = 1) -> float:
    """Harrell's C of a covariate-free parametric fit.

    Each subject is scored by ``-S(t_i)``, the negated model survival at its
    own observed time, interpreted in the predicted-time convention (larger
    means longer survival). In the risk convention of
    :func:`concordance_index` that is the risk ``S(t_i)``. ``fit`` may be a
    :class:`~eephnd.estimation.FitResult`, a parameter record, or a
    :class:`KmCurve`.
    """
    time, event = _check_survival(time, event)
    if isinstance(fit, KmCurve):
        predicted = -np.asarray(fit.survival_at(time), dtype=float)
    else:
        params = getattr(fit, "params", fit)
        predicted = -np.asarray(dist.survival(time, params), dtype=float)
    return concordance_index(-predicted, time, event, threads)
