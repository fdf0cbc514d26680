import math

import numpy as np
import pytest

from eephnd.distributions import EephndParams, cdf
from eephnd.errors import DegenerateDataError, DomainError, SeparationError
from eephnd.survival import (CONCORDANCE_PROTOCOL, SurvivalSample, as_arrays, concordance_counts,
                             concordance_index, cox_ph_fit, kaplan_meier, model_concordance_protocol,
                             parametric_survival_predict)
from eephnd.dataio import rescale_time


def test_km_hand_cases():
    km = kaplan_meier([1, 2, 3], [1, 1, 1])
    np.testing.assert_allclose(km.survival, [2 / 3, 1 / 3, 0.0], atol=1e-15)
    km = kaplan_meier([1, 2], [1, 0])
    assert km.survival_at(1.0) == 0.5
    assert km.survival_at(5.0) == 0.5
    assert km.survival_at(0.5) == 1.0


def test_km_no_censoring_is_empirical():
    rng = np.random.default_rng(1)
    t = np.round(rng.exponential(size=60), 2) + 0.01
    km = kaplan_meier(t, np.ones_like(t))
    for u in km.event_times:
        assert km.survival_at(u) == pytest.approx(np.mean(t > u), abs=1e-14)


def test_km_structure_and_greenwood():
    rng = np.random.default_rng(2)
    t = rng.exponential(size=80) + 1e-3
    e = rng.random(80) < 0.7
    km = kaplan_meier(t, e)
    assert np.all(np.diff(km.survival) <= 0)
    live = km.survival > 0
    assert np.all(km.lower[live] <= km.survival[live]) and np.all(km.survival[live] <= km.upper[live])
    assert np.all((km.lower >= 0) & (km.upper <= 1))
    # Greenwood for the first step is S^2 d/(n(n-d))
    n, dd, s = km.n_at_risk[0], km.n_events[0], km.survival[0]
    assert km.greenwood_var[0] == pytest.approx(s * s * dd / (n * (n - dd)), rel=1e-14)


def test_km_errors():
    with pytest.raises(DegenerateDataError):
        kaplan_meier([1, 2], [0, 0])
    with pytest.raises(DomainError):
        kaplan_meier([0, 2], [1, 1])
    with pytest.raises(DomainError):
        SurvivalSample(-1.0, True)


def test_survival_sample_arrays():
    t, e = as_arrays([SurvivalSample(2.0, True), SurvivalSample(3.0, False)])
    assert t.tolist() == [2.0, 3.0] and e.tolist() == [True, False]


def test_lung_km_reference_value(lung_rescaled):
    km = kaplan_meier(lung_rescaled.time, lung_rescaled.event)
    assert km.survival_at(0.012) == pytest.approx(0.9781, abs=1e-4)
    lo, hi = km.band_at(0.012)
    assert lo == pytest.approx(0.9481, abs=1e-4)
    assert hi == pytest.approx(0.9908, abs=1e-4)


def _efron_ll(b, x, t, e):
    # independent scalar Efron partial likelihood
    ll = 0.0
    for u in np.unique(t[e]):
        dead = (t == u) & e
        risk = t >= u
        m = int(dead.sum())
        rs = np.exp(b * x[risk]).sum()
        ds = np.exp(b * x[dead]).sum()
        ll += b * x[dead].sum()
        for l in range(m):
            ll -= math.log(rs - l / m * ds)
    return ll


def test_cox_grid_oracle():
    x = np.array([1.0, 0.0, 1.0, 0.0])
    t = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.ones(4, dtype=bool)
    grid = np.arange(-5, 5, 1e-4)
    vals = np.array([_efron_ll(b, x, t, e) for b in grid[::10]])
    coarse = grid[::10][np.argmax(vals)]
    fine = np.arange(coarse - 2e-3, coarse + 2e-3, 1e-4)
    best = fine[np.argmax([_efron_ll(b, x, t, e) for b in fine])]
    fit = cox_ph_fit(x, t, e, names=["g"])
    assert fit.coefficients["g"].coef == pytest.approx(best, abs=1e-4)
    assert fit.loglik == pytest.approx(_efron_ll(fit.coefficients["g"].coef, x, t, e), abs=1e-12)


def test_cox_two_subjects_separate():
    with pytest.raises(SeparationError):
        cox_ph_fit([1.0, 0.0], [1.0, 2.0], [1, 1])


def test_cox_efron_ties_oracle():
    rng = np.random.default_rng(5)
    x = rng.integers(0, 2, 40).astype(float)
    t = rng.integers(1, 8, 40).astype(float)
    e = rng.random(40) < 0.8
    fit = cox_ph_fit(x, t, e)
    b = fit.coefficients["x0"].coef
    assert fit.loglik == pytest.approx(_efron_ll(b, x, t, e), abs=1e-10)
    h = 1e-5
    assert (_efron_ll(b + h, x, t, e) - _efron_ll(b - h, x, t, e)) / (2 * h) == pytest.approx(0, abs=1e-6)
    assert fit.loglik >= fit.loglik_null


@pytest.fixture(scope="module")
def lung_cox(lung_rescaled):
    X = lung_rescaled.covariates(["age", "sex"])
    return cox_ph_fit(X, lung_rescaled.time, lung_rescaled.event, names=["age", "sex"])


def test_lung_cox_reference_values(lung_cox):
    sex, age = lung_cox.coefficients["sex"], lung_cox.coefficients["age"]
    assert sex.coef == pytest.approx(-0.5132, abs=0.02)
    assert sex.hazard_ratio == pytest.approx(0.599, abs=0.01)
    assert sex.p_value == pytest.approx(0.0022, abs=0.001)
    assert age.coef == pytest.approx(0.0170, abs=0.002)
    assert age.p_value == pytest.approx(0.0646, abs=0.01)
    for c in (sex, age):
        assert c.hazard_ratio == math.exp(c.coef)
        assert c.ci95[0] == pytest.approx(c.coef - 1.959964 * c.se, abs=1e-6)
        assert c.ci95[1] == pytest.approx(c.coef + 1.959964 * c.se, abs=1e-6)


def test_cox_time_rescaling_invariance(lung, lung_cox):
    X = lung.covariates(["age", "sex"])
    for transform in (lambda u: u, np.sqrt, lambda u: np.log1p(u) * 7.0):
        fit = cox_ph_fit(X, transform(lung.time), lung.event, names=["age", "sex"])
        np.testing.assert_allclose(fit.beta, lung_cox.beta, atol=1e-6)


def _brute_c(scores, t, e):
    num = den = 0.0
    n = len(t)
    for i in range(n):
        for j in range(n):
            if e[i] and t[i] < t[j]:
                den += 1
                if scores[i] > scores[j]:
                    num += 1
                elif scores[i] == scores[j]:
                    num += 0.5
    return num / den


def test_concordance_examples():
    t = np.arange(1.0, 6.0)
    assert concordance_index(-t, t, np.ones(5)) == 1.0
    assert concordance_index(np.zeros(5), t, np.ones(5)) == 0.5
    with pytest.raises(DegenerateDataError):
        concordance_index([1, 2], [1, 2], [0, 0])


def test_concordance_brute_force_oracle():
    rng = np.random.default_rng(9)
    t = rng.integers(1, 30, 50).astype(float)
    e = rng.random(50) < 0.6
    s = np.round(rng.normal(size=50), 1)
    assert concordance_index(s, t, e) == _brute_c(s, t, e)
    assert concordance_counts(s, t, e, threads=1) == concordance_counts(s, t, e, threads=4)


def test_concordance_invariances():
    rng = np.random.default_rng(10)
    t = rng.exponential(size=70) + 0.01
    e = rng.random(70) < 0.7
    s = rng.normal(size=70)
    c = concordance_index(s, t, e)
    assert concordance_index(np.exp(3 * s) + 1, t, e) == c
    assert concordance_index(-s, t, e) == pytest.approx(1 - c, abs=1e-15)


def test_predict():
    p = EephndParams(2, 2, 2, 2, 1, 0.5)
    assert parametric_survival_predict(p, 1e-12) == pytest.approx(1.0, abs=1e-12)
    assert parametric_survival_predict(p, 0.012) + cdf(0.012, p) == pytest.approx(1.0, abs=1e-15)


def test_lung_eephnd_survival(lung_eephnd_fit):
    assert parametric_survival_predict(lung_eephnd_fit.params, 0.012) == pytest.approx(0.979, abs=0.005)


def test_protocol_decreasing_survival_no_censoring():
    rng = np.random.default_rng(12)
    t = rng.exponential(size=30) + 0.01
    p = EephndParams(1.5, 1, 1.2, 1, 0.7, 0.4)
    assert model_concordance_protocol(p, t, np.ones(30)) == 1.0


def test_protocol_matches_oracle():
    rng = np.random.default_rng(13)
    t = rng.integers(1, 12, 20).astype(float) / 10
    e = rng.random(20) < 0.6
    e[0] = True
    p = EephndParams(1.5, 1, 1.2, 1, 0.7, 0.4)
    from eephnd.distributions import survival
    risk = survival(t, p)
    assert model_concordance_protocol(p, t, e) == _brute_c(risk, t, e)
    km = kaplan_meier(t, e)
    assert model_concordance_protocol(km, t, e) == _brute_c(km.survival_at(t), t, e)
    assert "S_model(t_i)" in CONCORDANCE_PROTOCOL


def test_lung_protocol_values(lung_rescaled, lung_eephnd_fit):
    c = model_concordance_protocol(lung_eephnd_fit, lung_rescaled.time, lung_rescaled.event)
    assert 0.99 <= c <= 1.0
    km = kaplan_meier(lung_rescaled.time, lung_rescaled.event)
    assert model_concordance_protocol(km, lung_rescaled.time, lung_rescaled.event) == pytest.approx(0.9982, abs=0.003)


def test_lung_cox_concordance(lung_rescaled, lung_cox):
    X = lung_rescaled.covariates(["age", "sex"])
    c = concordance_index(lung_cox.linear_predictor(X), lung_rescaled.time, lung_rescaled.event)
    assert c == pytest.approx(0.6029, abs=0.01)
