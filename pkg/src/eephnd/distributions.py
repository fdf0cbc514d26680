"""Parameter records and pointwise evaluation for EEPHND and competing models.

The exponentiated-exponential-Pareto (EEP) component uses

    F(x) = (1 - exp(-u))**alpha,    u = lam * (x / beta)**theta,

with density ``(alpha*lam*theta/beta) (x/beta)^(theta-1) e^-u (1-e^-u)^(alpha-1)``.
The mixture adds a half-normal component with weight ``1 - p1``.

All functions accept scalars or arrays and are defined on ``x > 0`` only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, SaturationError
from .special import erf, erfc, ln_gamma, reg_lower_incomplete_gamma

_LOG_SQRT_2_OVER_PI = 0.5 * math.log(2.0 / math.pi)
_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LN2 = math.log(2.0)


def _positive(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise DomainError(f"{type(obj).__name__}.{name} must be a finite positive number, got {v!r}")


class _Params:
    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict):
        unknown = set(d) - set(cls.names())
        if unknown:
            raise DomainError(f"unknown parameter(s) for {cls.__name__}: {sorted(unknown)}")
        missing = set(cls.names()) - set(d)
        if missing:
            raise DomainError(f"missing parameter(s) for {cls.__name__}: {sorted(missing)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class EepParams(_Params):
    alpha: float
    beta: float
    theta: float
    lam: float

    def __post_init__(self):
        _positive(self, "alpha", "beta", "theta", "lam")


@dataclass(frozen=True)
class HalfNormalParams(_Params):
    sigma: float

    def __post_init__(self):
        _positive(self, "sigma")


@dataclass(frozen=True)
class EephndParams(_Params):
    """Mixture parameters. The half-normal weight is ``p2 = 1 - p1``."""

    alpha: float
    beta: float
    theta: float
    lam: float
    sigma: float
    p1: float

    def __post_init__(self):
        _positive(self, "alpha", "beta", "theta", "lam", "sigma")
        if not (isinstance(self.p1, (int, float)) and 0.0 <= self.p1 <= 1.0):
            raise DomainError(f"EephndParams.p1 must lie in [0, 1], got {self.p1!r}")

    @property
    def p2(self) -> float:
        return 1.0 - self.p1

    @property
    def eep(self) -> EepParams:
        return EepParams(self.alpha, self.beta, self.theta, self.lam)

    @property
    def hn(self) -> HalfNormalParams:
        return HalfNormalParams(self.sigma)


@dataclass(frozen=True)
class LogNormalParams(_Params):
    mu: float
    s: float

    def __post_init__(self):
        if not (isinstance(self.mu, (int, float)) and math.isfinite(self.mu)):
            raise DomainError(f"LogNormalParams.mu must be finite, got {self.mu!r}")
        _positive(self, "s")


@dataclass(frozen=True)
class GammaRayleighParams(_Params):
    """Gamma-generated Rayleigh: ``x**2 / (2 s**2)`` is Gamma(a, 1)."""

    a: float
    s: float

    def __post_init__(self):
        _positive(self, "a", "s")


def _support(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0) or np.any(np.isnan(arr)):
        raise DomainError("densities are defined for x > 0 only")
    return arr


def _out(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def _log1mexp(u):
    """log(1 - exp(-u)) for u >= 0, stable for tiny and large u."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    tiny = u < 1e-10
    mid = (u >= 1e-10) & (u <= _LN2)
    big = u > _LN2
    with np.errstate(divide="ignore"):
        out[tiny] = np.log(u[tiny]) - 0.5 * u[tiny]
    out[mid] = np.log(-np.expm1(-u[mid]))
    out[big] = np.log1p(-np.exp(-u[big]))
    return out


def _eep_core(x, p: EepParams):
    lx = np.log(x / p.beta)
    with np.errstate(over="ignore"):
        u = np.exp(math.log(p.lam) + p.theta * lx)
    log_u = math.log(p.lam) + p.theta * lx
    out = np.empty_like(u)
    tiny = u < 1e-10
    out[tiny] = log_u[tiny] - 0.5 * u[tiny]
    out[~tiny] = _log1mexp(u[~tiny])
    return lx, u, out


# --- EEP component -----------------------------------------------------------

def eep_logpdf(x, p: EepParams):
    arr = _support(x)
    lx, u, l1m = _eep_core(np.atleast_1d(arr), p)
    shape = 0.0 if p.alpha == 1.0 else (p.alpha - 1.0) * l1m
    val = (math.log(p.alpha * p.lam * p.theta / p.beta) + (p.theta - 1.0) * lx - u + shape)
    return _out(val.reshape(arr.shape), x)


def eep_pdf(x, p: EepParams):
    return _out(np.exp(eep_logpdf(x, p)), x)


def eep_cdf(x, p: EepParams):
    arr = _support(x)
    _, _, l1m = _eep_core(np.atleast_1d(arr), p)
    return _out(np.exp(p.alpha * l1m).reshape(arr.shape), x)


def eep_sf(x, p: EepParams):
    arr = _support(x)
    _, _, l1m = _eep_core(np.atleast_1d(arr), p)
    return _out((-np.expm1(p.alpha * l1m)).reshape(arr.shape), x)


def eep_quantile(q, p: EepParams):
    """Closed-form inverse of :func:`eep_cdf`."""
    q = np.asarray(q, dtype=float)
    if not np.all((q > 0) & (q < 1)):
        raise DomainError("quantile level must lie in (0, 1)")
    u = -np.log(-np.expm1(np.log(q) / p.alpha))
    return _out(p.beta * (u / p.lam) ** (1.0 / p.theta), q)


# --- Half-normal component ---------------------------------------------------

def hn_logpdf(x, p: HalfNormalParams):
    arr = _support(x)
    return _out(_LOG_SQRT_2_OVER_PI - math.log(p.sigma) - arr * arr / (2.0 * p.sigma**2), x)


def hn_pdf(x, p: HalfNormalParams):
    return _out(np.exp(hn_logpdf(x, p)), x)


def hn_cdf(x, p: HalfNormalParams):
    arr = _support(x)
    return _out(erf(arr / (p.sigma * _SQRT2)), x)


def hn_sf(x, p: HalfNormalParams):
    arr = _support(x)
    return _out(erfc(arr / (p.sigma * _SQRT2)), x)


# --- Mixture -----------------------------------------------------------------

def eephnd_pdf(x, p: EephndParams):
    return _out(p.p1 * eep_pdf(x, p.eep) + (1.0 - p.p1) * hn_pdf(x, p.hn), x)


def eephnd_logpdf(x, p: EephndParams):
    """Log density via log-sum-exp of the weighted component log densities."""
    if p.p1 == 1.0:
        return eep_logpdf(x, p.eep)
    if p.p1 == 0.0:
        return hn_logpdf(x, p.hn)
    val = np.logaddexp(math.log(p.p1) + eep_logpdf(x, p.eep), math.log1p(-p.p1) + hn_logpdf(x, p.hn))
    return _out(val, x)


def eephnd_cdf(x, p: EephndParams):
    return _out(p.p1 * eep_cdf(x, p.eep) + (1.0 - p.p1) * hn_cdf(x, p.hn), x)


def eephnd_sf(x, p: EephndParams):
    return _out(p.p1 * eep_sf(x, p.eep) + (1.0 - p.p1) * hn_sf(x, p.hn), x)


# --- Competing models --------------------------------------------------------

def lognormal_logpdf(x, p: LogNormalParams):
    arr = _support(x)
    lx = np.log(arr)
    return _out(-lx - math.log(p.s) - _LOG_SQRT_2PI - (lx - p.mu) ** 2 / (2.0 * p.s**2), x)


def lognormal_cdf(x, p: LogNormalParams):
    arr = _support(x)
    return _out(0.5 * erfc(-(np.log(arr) - p.mu) / (p.s * _SQRT2)), x)


def lognormal_sf(x, p: LogNormalParams):
    arr = _support(x)
    return _out(0.5 * erfc((np.log(arr) - p.mu) / (p.s * _SQRT2)), x)


def gamma_rayleigh_logpdf(x, p: GammaRayleighParams):
    arr = _support(x)
    y = arr * arr / (2.0 * p.s**2)
    with np.errstate(divide="ignore"):
        val = -ln_gamma(p.a) + (p.a - 1.0) * np.log(y) + np.log(arr / p.s**2) - y
    return _out(val, x)


def gamma_rayleigh_cdf(x, p: GammaRayleighParams):
    arr = _support(x)
    return _out(reg_lower_incomplete_gamma(p.a, arr * arr / (2.0 * p.s**2)), x)


def gamma_rayleigh_sf(x, p: GammaRayleighParams):
    return _out(1.0 - np.asarray(gamma_rayleigh_cdf(x, p)), x)


@dataclass(frozen=True)
class Model:
    """One entry of the model zoo.

    ``kinds`` describes each parameter's constraint for the optimizer:
    ``"pos"`` (strictly positive), ``"unit"`` (in [0, 1]) or ``"real"``.
    """

    tag: str
    label: str
    params_cls: type
    kinds: tuple[str, ...]
    logpdf: Callable
    cdf: Callable
    sf: Callable

    @property
    def k(self) -> int:
        return len(self.kinds)

    def pdf(self, x, params):
        return _out(np.exp(self.logpdf(x, params)), x)


MODELS: dict[str, Model] = {
    m.tag: m
    for m in (
        Model("eephnd", "EEPHND", EephndParams, ("pos",) * 5 + ("unit",),
              eephnd_logpdf, eephnd_cdf, eephnd_sf),
        Model("eep", "EEP", EepParams, ("pos",) * 4, eep_logpdf, eep_cdf, eep_sf),
        Model("hn", "HN", HalfNormalParams, ("pos",), hn_logpdf, hn_cdf, hn_sf),
        Model("lognormal", "Log-Normal", LogNormalParams, ("real", "pos"),
              lognormal_logpdf, lognormal_cdf, lognormal_sf),
        Model("gamma-rayleigh", "Gamma-Rayleigh", GammaRayleighParams, ("pos", "pos"),
              gamma_rayleigh_logpdf, gamma_rayleigh_cdf, gamma_rayleigh_sf),
    )
}

_ALIASES = {"ln": "lognormal", "log-normal": "lognormal", "gr": "gamma-rayleigh",
            "gammarayleigh": "gamma-rayleigh", "halfnormal": "hn", "half-normal": "hn"}


def get_model(tag: str) -> Model:
    key = tag.strip().lower()
    key = _ALIASES.get(key, key)
    try:
        return MODELS[key]
    except KeyError:
        raise DomainError(f"unknown model tag {tag!r}; expected one of {sorted(MODELS)}") from None


def model_of(params) -> Model:
    for m in MODELS.values():
        if type(params) is m.params_cls:
            return m
    raise DomainError(f"no model for parameter type {type(params).__name__}")


def zoo_pdf(x, tag: str, params):
    return get_model(tag).pdf(x, params)


def zoo_cdf(x, tag: str, params):
    return get_model(tag).cdf(x, params)


# --- Generic reliability quantities -----------------------------------------

def pdf(x, params):
    if isinstance(params, EephndParams):
        return eephnd_pdf(x, params)
    return model_of(params).pdf(x, params)


def cdf(x, params):
    return model_of(params).cdf(x, params)


def survival(x, params):
    """Reliability ``R(x) = P(X > x)``, evaluated from the complementary
    component forms so the upper tail keeps relative precision."""
    return model_of(params).sf(x, params)


def _guarded_ratio(num, s, x, what):
    s = np.asarray(s)
    if np.any(s == 0.0):
        raise SaturationError(f"survival probability underflowed to 0; {what} undefined")
    with np.errstate(over="ignore"):
        r = np.asarray(num) / s
    if not np.all(np.isfinite(r)):
        raise SaturationError(f"{what} overflows double precision")
    return _out(r, x)


def hazard(x, params):
    return _guarded_ratio(pdf(x, params), survival(x, params), x, "hazard")


def odds(x, params):
    return _guarded_ratio(cdf(x, params), survival(x, params), x, "odds")


def quantile(q, params, max_iter: int = 200):
    """Inverse cdf by bracketing then Brent's method on the monotone cdf."""
    qs = np.asarray(q, dtype=float)
    if not np.all((qs > 0) & (qs < 1)):
        raise DomainError("quantile level must lie in (0, 1)")
    F = model_of(params).cdf
    out = np.empty(qs.shape)
    for idx in np.ndindex(qs.shape):
        level = float(qs[idx])
        lo, hi = 1.0, 1.0
        for _ in range(2000):
            if F(lo, params) < level:
                break
            lo *= 0.5
        else:
            raise ConvergenceError("could not bracket quantile from below")
        for _ in range(2000):
            if F(hi, params) > level:
                break
            hi *= 2.0
        else:
            raise ConvergenceError("could not bracket quantile from above")
        try:
            out[idx] = brentq(lambda t: F(t, params) - level, lo, hi,
                              xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
        except RuntimeError as exc:
            raise ConvergenceError(str(exc)) from exc
    return _out(out, q)
