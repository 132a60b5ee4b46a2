import json
import math

import numpy as np
import pytest
from scipy import integrate, optimize, special

from tailcor.errors import InvalidInputError, NotPositiveDefiniteError, TooShortError, UnsupportedError
from tailcor.quantiles import inv_norm_cdf, s_g
from tailcor.simulation import (
    EllipticalModel,
    McDesign,
    Step1,
    equicorrelated,
    kde_grid,
    population_quantile,
    positive_stable,
    run_mc,
    sample,
)
import tailcor.simulation as simulation


def t_quantile_by_inversion(p: float, nu: float) -> float:
    """Student-t quantile from numerical integration of the density and root finding."""
    c = special.gamma((nu + 1) / 2) / (math.sqrt(nu * math.pi) * special.gamma(nu / 2))

    def cdf(x):
        val, _ = integrate.quad(lambda t: c * (1 + t * t / nu) ** (-(nu + 1) / 2), 0.0, x,
                                epsabs=1e-14, epsrel=1e-13)
        return 0.5 + val

    return optimize.brentq(lambda x: cdf(x) - p, 0.0, 100.0, xtol=1e-14)


# ---------------------------------------------------------------- models

def test_model_validation():
    with pytest.raises(NotPositiveDefiniteError):
        EllipticalModel("gaussian", [0, 0], [[1, 2], [2, 1]])
    with pytest.raises(NotPositiveDefiniteError):
        EllipticalModel("gaussian", [0, 0], [[1, 0.5], [0.4, 1]])
    with pytest.raises(InvalidInputError):
        EllipticalModel("cauchy", [0], [[1]])
    with pytest.raises(InvalidInputError):
        EllipticalModel("student-t", [0], [[1]])
    with pytest.raises(InvalidInputError):
        EllipticalModel("stable", [0], [[1]], alpha=2.0)
    with pytest.raises(InvalidInputError):
        EllipticalModel("student-t", [0], [[1]], alpha=-1.0)
    with pytest.raises(InvalidInputError):
        EllipticalModel("gaussian", [0], [[1]], gamma=0.3)
    with pytest.raises(InvalidInputError):
        EllipticalModel("gaussian", [0, 0], [[1]])
    m = equicorrelated("nmvm-t", 3, 0.2, alpha=5.0, gamma=0.1)
    assert m.n == 3 and m.sigma[0, 1] == 0.2 and m.sigma[1, 1] == 1.0


# ---------------------------------------------------------------- samplers

def test_gaussian_sample_correlation():
    x = sample(equicorrelated("gaussian", 2, 0.5), 100_000, 1).data
    assert np.corrcoef(x.T)[0, 1] == pytest.approx(0.5, abs=0.01)
    assert x.mean(axis=0) == pytest.approx([0, 0], abs=0.02)


def test_gaussian_location_and_dispersion():
    mu = [1.0, -2.0]
    sigma = [[4.0, 1.0], [1.0, 0.5]]
    x = sample(EllipticalModel("gaussian", mu, sigma), 200_000, 2).data
    np.testing.assert_allclose(x.mean(axis=0), mu, atol=0.02)
    np.testing.assert_allclose(np.cov(x.T), sigma, rtol=0.03)


def test_student_t_variance():
    a = 5.0
    x = sample(equicorrelated("student-t", 2, 0.5, alpha=a), 100_000, 3).data
    assert np.var(x[:, 0]) == pytest.approx(a / (a - 2), rel=0.02)


def test_student_t_non_integer_df_quantile():
    x = sample(equicorrelated("student-t", 2, 0.0, alpha=2.5), 200_000, 4).data[:, 0]
    assert np.quantile(x, 0.95) == pytest.approx(t_quantile_by_inversion(0.95, 2.5), rel=0.02)


def test_positive_stable_laplace_transform():
    a = 0.75
    draws = positive_stable(a, 400_000, np.random.default_rng(5))
    assert np.all(draws > 0)
    for s in (0.3, 1.0, 2.5):
        assert np.mean(np.exp(-s * draws)) == pytest.approx(math.exp(-s ** a), abs=3e-3)


def test_positive_stable_index_checked():
    with pytest.raises(InvalidInputError):
        positive_stable(1.0, 10, np.random.default_rng(0))


def test_stable_near_two_is_near_gaussian():
    x = sample(equicorrelated("stable", 2, 0.5, alpha=1.99), 100_000, 6).data[:, 0]
    assert np.quantile(x, 0.75) == pytest.approx(inv_norm_cdf(0.75), rel=0.02)


def test_stable_heavier_tails_than_gaussian():
    x = sample(equicorrelated("stable", 2, 0.5, alpha=1.5), 100_000, 7).data[:, 0]
    g = sample(equicorrelated("gaussian", 2, 0.5), 100_000, 7).data[:, 0]
    ratio = lambda v: np.quantile(v, 0.95) / np.quantile(v, 0.75)
    assert ratio(x) > ratio(g) + 0.3


def test_nmvm_mean_shift():
    a, gamma = 6.0, 0.4
    x = sample(equicorrelated("nmvm-t", 2, 0.3, alpha=a, gamma=gamma), 200_000, 8).data
    # E[W] = alpha / (alpha - 2)
    np.testing.assert_allclose(x.mean(axis=0), gamma * a / (a - 2), atol=0.02)


def test_nmvm_without_skew_matches_student_t_in_law():
    a = 4.0
    x = sample(equicorrelated("nmvm-t", 2, 0.0, alpha=a), 200_000, 9).data[:, 0]
    assert np.quantile(x, 0.9) == pytest.approx(t_quantile_by_inversion(0.9, a), rel=0.02)


def test_sample_is_seeded():
    m = equicorrelated("student-t", 3, 0.1, alpha=3.0)
    np.testing.assert_array_equal(sample(m, 50, 11).data, sample(m, 50, 11).data)
    assert sample(m, 50, 11).labels == ("X1", "X2", "X3")
    with pytest.raises(InvalidInputError):
        sample(m, 0, 1)


# ---------------------------------------------------------------- population quantiles

def test_population_quantiles():
    g = equicorrelated("gaussian")
    assert population_quantile(g, 0, 0.75) == pytest.approx(0.67449, abs=1e-5)
    t = EllipticalModel("student-t", [0.3, 0.0], [[4.0, 0.0], [0.0, 1.0]], alpha=2.5)
    assert population_quantile(t, 0, 0.5) == 0.3
    assert population_quantile(t, 0, 0.9) == pytest.approx(0.3 + 2 * t_quantile_by_inversion(0.9, 2.5), rel=1e-9)


def test_student_t_nonlinear_truth():
    t = equicorrelated("student-t", alpha=2.5)
    ratio = population_quantile(t, 0, 0.95) / population_quantile(t, 0, 0.75)
    oracle = t_quantile_by_inversion(0.95, 2.5) / t_quantile_by_inversion(0.75, 2.5)
    assert ratio == pytest.approx(oracle, rel=1e-10)
    assert ratio == pytest.approx(3.259, abs=5e-4)
    assert s_g() * ratio * math.sqrt(1.5) == pytest.approx(1.637, abs=5e-4)


def test_population_quantiles_unsupported():
    for m in (equicorrelated("stable", alpha=1.5), equicorrelated("nmvm-t", alpha=4.0, gamma=0.1)):
        with pytest.raises(UnsupportedError):
            population_quantile(m, 0, 0.75)


# ---------------------------------------------------------------- harness

def test_design_validation():
    g = equicorrelated("gaussian")
    with pytest.raises(InvalidInputError):
        McDesign(g, T=39, H=10)
    with pytest.raises(InvalidInputError):
        McDesign(g, T=100, H=0)
    with pytest.raises(InvalidInputError):
        McDesign(g, T=100, H=10, step1=("bogus",))
    with pytest.raises(InvalidInputError):
        McDesign(g, T=100, H=10, pair=(0, 0))
    with pytest.raises(UnsupportedError):
        McDesign(equicorrelated("stable", alpha=1.5), T=100, H=10, step1=(Step1.POPULATION,))


def test_run_mc_deterministic_and_schedule_independent():
    d = McDesign(equicorrelated("student-t", alpha=3.0), T=500, H=12, step1=("sample", "population"), seed=5)
    a = run_mc(d)
    b = run_mc(d, chunk=5)
    c = run_mc(d, jobs=2, chunk=4)
    ja = json.dumps(a.to_dict(kde_points=16, include_values=True))
    assert ja == json.dumps(b.to_dict(kde_points=16, include_values=True))
    assert ja == json.dumps(c.to_dict(kde_points=16, include_values=True))
    assert a["sample"].failed == 0


def test_run_mc_replicates_are_prefix_stable():
    g = equicorrelated("gaussian")
    short = run_mc(McDesign(g, T=300, H=5, seed=9))
    long = run_mc(McDesign(g, T=300, H=9, seed=9))
    np.testing.assert_array_equal(short["sample"].values["tailcor"], long["sample"].values["tailcor"][:5])


def test_run_mc_gaussian_short():
    r = run_mc(McDesign(equicorrelated("gaussian"), T=10_000, H=100, seed=3))
    s = r["sample"].summary("tailcor")
    assert s.mean == pytest.approx(1.2247, abs=4 * 0.011 / 10)
    assert 0.007 <= s.sd <= 0.016
    assert r["sample"].summary("linear").mean == pytest.approx(1.2247, abs=0.002)


def test_run_mc_counts_failures(monkeypatch):
    real = simulation.tailcor
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] % 3 == 0:
            raise TooShortError("injected")
        return real(*args, **kwargs)

    monkeypatch.setattr(simulation, "tailcor", flaky)
    r = run_mc(McDesign(equicorrelated("gaussian"), T=200, H=9, seed=1))
    assert r["sample"].failed == 3
    assert r["sample"].kept("tailcor").size == 6
    assert np.isnan(r["sample"].values["tailcor"][2])


def test_kde_grid_integrates_to_one():
    v = np.random.default_rng(0).standard_normal(1000)
    g = kde_grid(v, 256)
    assert len(g["x"]) == 256
    assert np.trapezoid(g["density"], g["x"]) == pytest.approx(1.0, abs=0.01)
    assert kde_grid(np.ones(5)) == {"x": [], "density": []}
