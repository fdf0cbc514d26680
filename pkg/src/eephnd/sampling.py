"""Random variates from EEPHND and its components.

Draw order within one mixture call, on a single stream:

1. ``n`` selection uniforms (skipped when ``p1`` is exactly 0 or 1);
2. one uniform per EEP draw, in index order;
3. one standard normal per half-normal draw, in index order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import EephndParams, EepParams, HalfNormalParams
from .errors import DomainError
from .rng import RngStream, standard_normal, uniform01

EEP, HN = "EEP", "HN"


@dataclass
class SampleBatch:
    values: np.ndarray
    seed_metadata: dict
    component_labels: list[str] | None = field(default=None)

    def __len__(self) -> int:
        return len(self.values)


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    return int(n)


def eep_inverse_transform(v, p: EepParams):
    """``beta * (-(1/lam) * ln(1 - v**(1/alpha)))**(1/theta)`` for v in (0, 1)."""
    v = np.asarray(v, dtype=float)
    u = -np.log(-np.expm1(np.log(v) / p.alpha)) / p.lam
    return p.beta * u ** (1.0 / p.theta)


def _eep_values(n, p, stream):
    return eep_inverse_transform(uniform01(stream, n), p)


def _hn_values(n, p, stream):
    return np.abs(p.sigma * standard_normal(stream, n))


def sample_eep(n: int, p: EepParams, stream: RngStream) -> SampleBatch:
    n = _check_n(n)
    return SampleBatch(_eep_values(n, p, stream), stream.metadata)


def sample_half_normal(n: int, p: HalfNormalParams, stream: RngStream) -> SampleBatch:
    n = _check_n(n)
    return SampleBatch(_hn_values(n, p, stream), stream.metadata)


def sample_eephnd(n: int, p: EephndParams, stream: RngStream, labels: bool = False) -> SampleBatch:
    n = _check_n(n)
    meta = stream.metadata
    if p.p1 == 1.0:
        is_eep = np.ones(n, dtype=bool)
    elif p.p1 == 0.0:
        is_eep = np.zeros(n, dtype=bool)
    else:
        is_eep = uniform01(stream, n) < p.p1
    values = np.empty(n)
    n_eep = int(is_eep.sum())
    if n_eep:
        values[is_eep] = _eep_values(n_eep, p.eep, stream)
    if n - n_eep:
        values[~is_eep] = _hn_values(n - n_eep, p.hn, stream)
    lab = [EEP if e else HN for e in is_eep] if labels else None
    return SampleBatch(values, meta, lab)


def sample(n: int, params, stream: RngStream, labels: bool = False) -> SampleBatch:
    """Dispatch on the parameter type."""
    if isinstance(params, EephndParams):
        return sample_eephnd(n, params, stream, labels)
    if isinstance(params, EepParams):
        return sample_eep(n, params, stream)
    if isinstance(params, HalfNormalParams):
        return sample_half_normal(n, params, stream)
    raise DomainError(f"no sampler for {type(params).__name__}")
