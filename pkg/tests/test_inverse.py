from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from scipy.special import gamma

from tfdinv.errors import (
    ConditioningWarning,
    DomainError,
    HypothesisViolationError,
    PreconditionError,
    ShapeError,
)
from tfdinv.forward import build_cache
from tfdinv.fracalc import caputo_l1, rl_integral, rl_integral_values
from tfdinv.grids import SpaceGrid, SpaceProfile, SpaceTimeField, TimeGrid, TimeSeries
from tfdinv.inverse import (
    CauchyData,
    LaplaceIdentityConfig,
    LaplaceScenario,
    ReconstructionConfig,
    SourceSpec,
    UniquenessScenario,
    compute_F_entire,
    duhamel_convolve,
    entire_growth_exponent,
    generate_synthetic_data,
    homogeneous_solution,
    laplace_identity_residual,
    mu_convolve,
    mu_from_rho,
    reconstruct_f,
    singular_exponents,
    smallest_m,
    uniqueness_gap,
    volterra_deconvolve,
)
from tfdinv.mittag_leffler import mittag_leffler
from tfdinv.sturm_liouville import Potential, eigen_neumann, eigensystem


def rho_series(tgrid, func):
    return TimeSeries.from_function(tgrid, func)


def smooth_w(t):
    return np.sin(2.0 * t) + t**2


# {{{ kernel mu


def test_mu_of_constant_rho():
    tg = TimeGrid(1.0, 64)
    mu = mu_from_rho(rho_series(tg, lambda t: 2.0 + 0 * t), 0.4)
    assert mu.singular_coeff == pytest.approx(2.0 / gamma(0.4), rel=1e-15)
    assert np.all(mu.regular.values == 0.0)
    np.testing.assert_allclose(mu.evaluate(tg.nodes[1:]), 2.0 * tg.nodes[1:] ** -0.6 / gamma(0.4), rtol=1e-14)


def test_mu_regular_part_recovers_known_kernel():
    # rho = 1 + J^{1-a} t  has  mu = t^{a-1} / Gamma(a) + t
    a = 0.5
    tg = TimeGrid(1.0, 1024)
    rho = rho_series(tg, lambda t: 1.0 + t ** (2.0 - a) / gamma(3.0 - a))
    mu = mu_from_rho(rho, a, correction_exponents=(1.0 - a + 1.0,))
    assert mu.singular_coeff == pytest.approx(1.0 / gamma(a))
    np.testing.assert_allclose(mu.regular.values, tg.nodes, rtol=0, atol=1e-4)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_rho_is_reproduced(alpha):
    # the L1 roundtrip converges like dt^(1 + alpha), so small alpha needs a finer grid
    defects = []
    for steps in (1024, 2048):
        tg = TimeGrid(1.0, steps)
        spec = SourceSpec(rho_series(tg, lambda t: 1.0 + t + 0.5 * np.sin(3 * t)), None, alpha)
        assert spec.rho0 == 1.0
        defects.append(spec.rho_defect())
    assert defects[1] <= 1e-4
    assert math.log2(defects[0] / defects[1]) >= 1.0 + alpha - 0.1


def test_mu_requires_nonzero_start():
    tg = TimeGrid(1.0, 16)
    with pytest.raises(HypothesisViolationError):
        mu_from_rho(rho_series(tg, lambda t: t), 0.5)
    with pytest.raises(HypothesisViolationError):
        SourceSpec(rho_series(tg, lambda t: t), None, 0.5)
    with pytest.raises(DomainError):
        mu_from_rho(rho_series(tg, lambda t: 1 + t), 1.0).evaluate(0.0)


def test_singular_exponents():
    assert singular_exponents(0.5) == (0.5,)
    assert singular_exponents(0.4) == (0.4, 0.8)
    assert singular_exponents(0.7) == (0.7,)
    assert singular_exponents(0.3, limit=2.0) == (0.3, 0.6, 0.9, 1.2)


def test_mu_convolution_of_constant_rho_is_rl_integral():
    tg = TimeGrid(1.0, 128)
    w = smooth_w(tg.nodes)
    out = mu_convolve(rho_series(tg, lambda t: 1.0 + 0 * t), 0.6, w)
    np.testing.assert_allclose(out, rl_integral_values(0.6, w, tg.dt), rtol=0, atol=1e-14)


# }}}


# {{{ Duhamel


def _duhamel_setup(alpha=0.5, steps=256):
    g = SpaceGrid(0.0, 1.0, 64)
    p = Potential.from_function(g, lambda x: 1.0 + np.cos(2 * np.pi * x))
    tg = TimeGrid(1.0, steps)
    return g, p, tg


def test_duhamel_of_zero_field():
    g, p, tg = _duhamel_setup()
    spec = SourceSpec(rho_series(tg, lambda t: 1.0 + t), None, 0.5)
    assert np.all(duhamel_convolve(spec, SpaceTimeField.zeros(g, tg)).values == 0.0)


def test_duhamel_single_mode_closed_form():
    # the mode starts like 1 - c t^alpha, so the worst error sits in the initial layer
    a = 0.5
    errs = []
    for steps in (512, 1024):
        g, p, tg = _duhamel_setup(a, steps)
        eig = eigen_neumann(p, g, 4)
        cache = build_cache(eig, a, tg)
        u = SpaceTimeField(g, tg, np.outer(eig.matrix[1], cache.e1[1]))
        spec = SourceSpec(rho_series(tg, lambda t: 1.0 + 0 * t), None, a)
        y = duhamel_convolve(spec, u).values
        lam = eig.lambdas[1]
        exact = tg.nodes**a * mittag_leffler(a, a + 1.0, -lam * tg.nodes**a)
        errs.append(np.max(np.abs(eig.project(y)[1] - exact)) / np.max(np.abs(exact)))
    assert errs[1] <= 1e-3
    assert math.log2(errs[0] / errs[1]) >= 1.5


def test_duhamel_grid_mismatch():
    g, p, tg = _duhamel_setup()
    spec = SourceSpec(rho_series(tg, lambda t: 1.0 + t), None, 0.5)
    with pytest.raises(ShapeError):
        duhamel_convolve(spec, SpaceTimeField.zeros(g, TimeGrid(1.0, 10)))


# }}}


# {{{ Volterra


def test_volterra_zero_data_gives_zero():
    tg = TimeGrid(1.0, 64)
    w = volterra_deconvolve(TimeSeries(tg, np.zeros(65)), rho_series(tg, lambda t: 1 + t / 2), 0.5)
    assert np.all(w.values == 0.0)


def test_volterra_constant_rho_is_caputo():
    tg = TimeGrid(1.0, 1024)
    w_true = smooth_w(tg.nodes)
    h = rl_integral(0.5, TimeSeries(tg, w_true))
    w = volterra_deconvolve(h, rho_series(tg, lambda t: 1.0 + 0 * t), 0.5)
    assert np.max(np.abs(w.values - w_true)) <= 1e-3


def test_volterra_roundtrip_converges():
    errs = []
    for steps in (256, 512, 1024):
        tg = TimeGrid(1.0, steps)
        rho = rho_series(tg, lambda t: 1.0 + t / 2.0)
        w_true = smooth_w(tg.nodes)
        h = TimeSeries(tg, mu_convolve(rho, 0.5, w_true))
        w = volterra_deconvolve(h, rho, 0.5)
        errs.append(np.linalg.norm(w.values - w_true) / np.linalg.norm(w_true))
    assert errs[-1] <= 1e-3
    assert math.log2(errs[0] / errs[1]) >= 1.0
    assert math.log2(errs[1] / errs[2]) >= 1.0


def test_volterra_preconditions():
    tg = TimeGrid(1.0, 16)
    h = rho_series(tg, lambda t: t)
    with pytest.raises(HypothesisViolationError):
        volterra_deconvolve(h, rho_series(tg, lambda t: np.sin(t)), 0.5)
    with pytest.raises(PreconditionError):
        volterra_deconvolve(rho_series(tg, lambda t: 1 + t), rho_series(tg, lambda t: 1 + t), 0.5)
    with pytest.raises(ShapeError):
        volterra_deconvolve(h, rho_series(TimeGrid(1.0, 8), lambda t: 1 + t), 0.5)


# }}}


# {{{ synthetic data


def _data_setup(bc="dirichlet", cells=40, steps=200):
    g = SpaceGrid(0.0, 1.0, cells)
    p = Potential.constant(g, 1.0)
    tg = TimeGrid(1.0, steps)
    rho = rho_series(tg, lambda t: 1.0 + t)
    eig = eigensystem(p, g, 6, bc)
    return g, p, tg, rho, eig


def test_zero_source_gives_zero_traces():
    g, p, tg, rho, _ = _data_setup()
    f = SpaceProfile(g, np.zeros(g.size))
    d = generate_synthetic_data(p, SourceSpec(rho, f, 0.5), "dirichlet", g, tg, 0.6)
    assert np.all(d.trace0.values == 0.0)
    assert np.all(d.trace1.values == 0.0)


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_data_are_linear_in_source(bc):
    g, p, tg, rho, eig = _data_setup(bc)
    f1 = SpaceProfile(g, eig.matrix[0] + 0.2 * eig.matrix[3])
    f2 = SpaceProfile.from_function(g, lambda x: x * (1 - x) * np.exp(x))
    f12 = SpaceProfile(g, f1.values + f2.values)
    d1, d2, d12 = (
        generate_synthetic_data(p, SourceSpec(rho, f, 0.5), bc, g, tg, 0.6) for f in (f1, f2, f12)
    )
    np.testing.assert_allclose(d12.trace0.values, d1.trace0.values + d2.trace0.values, rtol=0, atol=1e-10)
    np.testing.assert_allclose(d12.trace1.values, d1.trace1.values + d2.trace1.values, rtol=0, atol=1e-10)
    assert d1.trace0.values[0] == 0.0


def test_trace_and_its_integral_vanish_together():
    g, p, tg, rho, eig = _data_setup()
    f = SpaceProfile(g, eig.matrix[0])
    d = generate_synthetic_data(p, SourceSpec(rho, f, 0.5), "dirichlet", g, tg, 0.6)
    J = rl_integral(0.5, d.trace0, singular_exponents(0.5))
    assert np.max(np.abs(J.values)) > 1e-3
    back = caputo_l1(0.5, J, (1.5,))
    assert np.max(np.abs(back.values - d.trace0.values)) <= 1e-2 * np.max(np.abs(d.trace0.values))
    zero = TimeSeries(tg, np.zeros(tg.size))
    assert np.all(rl_integral(0.5, zero).values == 0.0)


def test_noise_is_seeded():
    g, p, tg, rho, eig = _data_setup()
    spec = SourceSpec(rho, SpaceProfile(g, eig.matrix[0]), 0.5)
    a = generate_synthetic_data(p, spec, "dirichlet", g, tg, 0.6, noise_level=0.01, seed=3)
    b = generate_synthetic_data(p, spec, "dirichlet", g, tg, 0.6, noise_level=0.01, seed=3)
    c = generate_synthetic_data(p, spec, "dirichlet", g, tg, 0.6, noise_level=0.01, seed=4)
    np.testing.assert_array_equal(a.stacked(), b.stacked())
    assert np.any(a.stacked() != c.stacked())
    assert a.trace0.values[0] == 0.0


def test_observation_point_must_be_interior():
    g, p, tg, rho, eig = _data_setup()
    spec = SourceSpec(rho, SpaceProfile(g, eig.matrix[0]), 0.5)
    with pytest.raises(PreconditionError):
        generate_synthetic_data(p, spec, "dirichlet", g, tg, 1.0)
    with pytest.raises(DomainError):
        CauchyData(TimeSeries(tg, np.zeros(tg.size)), TimeSeries(tg, np.zeros(tg.size)), 0.5, -1.0)


def test_homogeneous_solution_relaxes_modes():
    g, p, tg, rho, eig = _data_setup()
    u = homogeneous_solution(p, SpaceProfile(g, eig.matrix[1]), "dirichlet", tg, 0.5, 6)
    e1 = mittag_leffler(0.5, 1.0, -eig.lambdas[1] * tg.nodes**0.5)
    np.testing.assert_allclose(u.values, np.outer(eig.matrix[1], e1), rtol=0, atol=1e-10)


# }}}


# {{{ reconstruction


def _recon_setup(steps=2048, cells=128):
    g = SpaceGrid(0.0, 1.0, cells)
    p = Potential.from_function(g, lambda x: 1.0 + np.cos(2 * np.pi * x))
    tg = TimeGrid(1.0, steps)
    rho = rho_series(tg, lambda t: 1.0 + t)
    eig = eigensystem(p, g, 4, "dirichlet")
    return g, p, tg, rho, eig


def test_reconstruction_of_zero_data():
    g, p, tg, rho, _ = _recon_setup(steps=256, cells=64)
    zero = TimeSeries(tg, np.zeros(tg.size))
    data = CauchyData(zero, zero, 0.375)
    for lam in (1e-10, 1e-4, 1.0):
        rec = reconstruct_f(data, p, rho, ReconstructionConfig(mode_count=4, tikhonov_lambda=lam), 0.5)
        assert np.all(rec.f.values == 0.0)


def test_single_mode_recovery():
    g, p, tg, rho, eig = _recon_setup()
    f = SpaceProfile(g, eig.matrix[0])
    data = generate_synthetic_data(p, SourceSpec(rho, f, 0.5), "dirichlet", g, tg, 0.375)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        rec = reconstruct_f(data, p, rho, ReconstructionConfig(mode_count=4, tikhonov_lambda=1e-10), 0.5)
    err = SpaceProfile(g, rec.f.values - f.values).norm() / f.norm()
    assert err <= 1e-2


def test_error_monotone_as_regularization_vanishes():
    g, p, tg, rho, eig = _recon_setup()
    f = SpaceProfile(g, eig.matrix[0])
    data = generate_synthetic_data(p, SourceSpec(rho, f, 0.5), "dirichlet", g, tg, 0.375)
    errs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        for lam in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10):
            rec = reconstruct_f(data, p, rho, ReconstructionConfig(mode_count=4, tikhonov_lambda=lam), 0.5)
            errs.append(SpaceProfile(g, rec.f.values - f.values).norm())
    assert all(b <= a * (1.0 + 1e-9) for a, b in zip(errs, errs[1:]))


def test_conditioning_flag():
    g, p, tg, rho, eig = _recon_setup(steps=256, cells=64)
    f = SpaceProfile(g, eig.matrix[0])
    data = generate_synthetic_data(p, SourceSpec(rho, f, 0.5), "dirichlet", g, tg, 0.375)
    cfg = ReconstructionConfig(mode_count=8, tikhonov_lambda=1e-16)
    with pytest.warns(ConditioningWarning):
        rec = reconstruct_f(data, p, rho, cfg, 0.5)
    assert rec.ill_conditioned
    assert rec.condition > 1e12


# }}}


# {{{ entire function and Laplace identity


def test_F_of_zero_profile():
    g = SpaceGrid(0.0, 1.0, 50)
    p = Potential.constant(g, 1.0)
    assert compute_F_entire(SpaceProfile(g, np.zeros(51)), p, 2.0 + 1.0j) == 0.0


def test_F_free_case_is_sinc():
    g = SpaceGrid(0.0, 1.0, 2000)
    p = Potential.constant(g, 0.0)
    one = SpaceProfile(g, np.ones(g.size))
    assert abs(compute_F_entire(one, p, math.pi)) <= 1e-8
    z = 1.3 + 0.7j
    assert abs(compute_F_entire(one, p, z) - np.sin(z) / z) <= 1e-6


def test_F_vanishes_at_other_eigenparameters():
    p0 = 10.0
    vals = []
    for cells in (500, 1000):
        g = SpaceGrid(0.1, 0.9, cells)
        p = Potential.from_function(g, lambda x: 2.0 * np.cos(2 * np.pi * x))
        eig = eigen_neumann(p.shifted(p0), g, 4)
        psi2 = SpaceProfile(g, eig.matrix[1] / eig.matrix[1][0])
        z = math.sqrt(eig.lambdas[2] - p0)
        vals.append(abs(compute_F_entire(psi2, p, z)))
    assert vals[1] <= 1e-4
    assert vals[1] < vals[0]


def test_smallest_m_and_config_checks():
    assert smallest_m(0.5) == 7
    assert smallest_m(0.9) == 4
    cfg = LaplaceIdentityConfig(7, (5.0, 10.0))
    cfg.check_alpha(0.5)
    with pytest.raises(PreconditionError):
        LaplaceIdentityConfig(6, (5.0,)).check_alpha(0.5)
    with pytest.raises(DomainError):
        LaplaceIdentityConfig(7, (10.0, 5.0))
    with pytest.raises(DomainError):
        LaplaceIdentityConfig(7, (5.0,), branches=(2,))


def _laplace_scenario(a_values=None, g_func=None):
    sg = SpaceGrid(0.1, 0.6, 200)
    p = Potential.from_function(sg, lambda x: 1.0 + np.cos(2 * np.pi * x))
    tg = TimeGrid(1.0, 400)
    a = SpaceProfile(sg, eigen_neumann(p, sg, 4).matrix[0] if a_values is None else a_values)
    g = TimeSeries.from_function(tg, (lambda t: t**2) if g_func is None else g_func)
    return LaplaceScenario(p, a, g, 0.5, 8.0, mode_count=32)


def test_laplace_zero_scenario():
    sc = _laplace_scenario(np.zeros(201), lambda t: 0 * t)
    rows = laplace_identity_residual(sc, LaplaceIdentityConfig(7, (5.0, 20.0)))
    assert all(r.r_general == 0.0 and r.r_special == 0.0 for r in rows)


def test_laplace_residuals_and_branch_symmetry():
    sc = _laplace_scenario()
    s = tuple(np.geomspace(5.0, 40.0, 4))
    rows = laplace_identity_residual(sc, LaplaceIdentityConfig(7, s))
    assert len(rows) == 8
    good = [r for r in rows if not r.truncation_flag]
    assert good
    assert max(r.r_special for r in good) <= 5e-2
    assert max(r.r_general for r in good) <= 5e-2
    by_s = {}
    for r in rows:
        by_s.setdefault(r.s, {})[r.branch] = r
    for pair in by_s.values():
        assert abs(pair[1].r_special - pair[-1].r_special) <= 1e-10
        assert abs(pair[1].r_general - pair[-1].r_general) <= 1e-10


def test_growth_exponent_is_finite():
    g = SpaceGrid(0.0, 1.0, 400)
    p = Potential.constant(g, 1.0)
    a = SpaceProfile.from_function(g, lambda x: x**2 * (1 - x))
    assert math.isfinite(entire_growth_exponent(a, p, np.geomspace(5, 40, 6), 0.5))


# }}}


# {{{ uniqueness


def _uniqueness_scenario(bc="dirichlet"):
    g = SpaceGrid(0.0, 1.0, 40)
    p = Potential.constant(g, 1.0)
    tg = TimeGrid(1.0, 200)
    return UniquenessScenario(p, rho_series(tg, lambda t: 1.0 + t), 0.5, 0.6, bc)


def test_identical_sources_have_zero_gap():
    sc = _uniqueness_scenario()
    f = SpaceProfile.from_function(sc.sgrid, lambda x: np.sin(np.pi * x))
    rep = uniqueness_gap(f, f, sc)
    assert rep.delta == 0.0
    assert "alpha=0.5" in rep.descriptor


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_distinct_modes_have_stable_positive_gap(bc):
    sc = _uniqueness_scenario(bc)
    eig = eigensystem(sc.p, sc.sgrid, 4, bc)
    r1 = uniqueness_gap(SpaceProfile(sc.sgrid, eig.matrix[0]), SpaceProfile(sc.sgrid, eig.matrix[1]), sc)
    fine = sc.refined()
    efine = eigensystem(fine.p, fine.sgrid, 4, bc)
    r2 = uniqueness_gap(SpaceProfile(fine.sgrid, efine.matrix[0]), SpaceProfile(fine.sgrid, efine.matrix[1]), fine)
    assert r1.delta > 1e-6
    assert abs(r2.delta - r1.delta) <= 0.2 * r1.delta


def test_separation_requirement():
    sc = _uniqueness_scenario()
    f1 = SpaceProfile.from_function(sc.sgrid, lambda x: np.sin(np.pi * x))
    f2 = SpaceProfile(sc.sgrid, 1.001 * f1.values)
    with pytest.raises(PreconditionError):
        uniqueness_gap(f1, f2, sc, min_separation=0.5)


# }}}
