from __future__ import annotations

import math

import numpy as np
import pytest

from tfdinv.errors import DomainError, GrowthOverflowError, PreconditionError, ResolutionError
from tfdinv.grids import SpaceGrid, SpaceProfile
from tfdinv.sturm_liouville import (
    Potential,
    asymptotic_report,
    eigen_dirichlet,
    eigen_neumann,
    eigensystem,
    solve_phi,
    solve_phi_many,
    verify_phi_eigen_link,
)


def cosine_potential(grid):
    return Potential.from_function(grid, lambda x: 2.0 * np.cos(2.0 * np.pi * x))


# {{{ potential


def test_potential_bound_is_checked():
    g = SpaceGrid(0.0, 1.0, 10)
    with pytest.raises(DomainError):
        Potential(SpaceProfile(g, np.full(11, 2.0)), 1.0)


def test_potential_resampling_and_shift():
    g = SpaceGrid(0.0, 1.0, 10)
    p = cosine_potential(g)
    fine = SpaceGrid(0.0, 1.0, 40)
    np.testing.assert_allclose(p.on(fine).profile.values, 2 * np.cos(2 * np.pi * fine.nodes), atol=1e-14)
    q = p.shifted(3.0)
    np.testing.assert_allclose(q.profile.values, p.profile.values + 3.0)
    assert q.sup_bound == pytest.approx(5.0)


# }}}


# {{{ phi


def test_phi_initial_values():
    g = SpaceGrid(0.2, 0.9, 50)
    for z in (0.0, 3.0, 2.0 + 1.5j, 7j):
        sol = solve_phi(cosine_potential(g), z, g)
        assert sol.phi.values[0] == 1.0
        assert sol.phi_prime.values[0] == 0.0


def test_phi_zero_potential_is_cosine():
    g = SpaceGrid(0.0, 1.0, 2000)
    sol = solve_phi(Potential.constant(g, 0.0), 2.0, g)
    np.testing.assert_allclose(sol.phi.values, np.cos(2.0 * g.nodes), rtol=0, atol=1e-8)


def test_phi_constant_potential_shifted_start():
    g = SpaceGrid(0.1, 1.0, 2000)
    sol = solve_phi(Potential.constant(g, 3.0), math.sqrt(7.0), g)
    np.testing.assert_allclose(sol.phi.values, np.cos(2.0 * (g.nodes - 0.1)), rtol=0, atol=1e-8)


def test_phi_even_in_z():
    g = SpaceGrid(0.0, 1.0, 300)
    p = cosine_potential(g)
    for z in (1.7, 2.0 + 3.0j, 9j):
        a, b = solve_phi_many(p, [z, -z], g)
        np.testing.assert_allclose(a.phi.values, b.phi.values, rtol=1e-13, atol=0)


def test_phi_is_analytic_in_z():
    # mean value over a circle reproduces the centre value
    g = SpaceGrid(0.0, 1.0, 400)
    p = cosine_potential(g)
    z0, r, n = 2.0 + 1.0j, 0.5, 32
    zs = z0 + r * np.exp(2j * np.pi * np.arange(n) / n)
    sols = solve_phi_many(p, list(zs) + [z0], g)
    ring = np.mean([s.phi.values[-1] for s in sols[:-1]])
    assert abs(ring - sols[-1].phi.values[-1]) <= 1e-6 * abs(sols[-1].phi.values[-1])


def test_phi_overflow_guard():
    g = SpaceGrid(0.0, 1.0, 4000)
    with pytest.raises(GrowthOverflowError):
        solve_phi(Potential.constant(g, 0.0), 800j, g)


# }}}


# {{{ eigensystem


def test_neumann_free_spectrum():
    g = SpaceGrid(0.1, 0.9, 4000)
    eig = eigen_neumann(Potential.constant(g, 0.0), g, 10)
    exact = (np.arange(10) * math.pi / 0.8) ** 2
    assert abs(eig.lambdas[0]) <= 1e-9
    np.testing.assert_allclose(eig.lambdas[1:], exact[1:], rtol=1e-6)
    assert eig.lambdas[1] == pytest.approx(15.421257, rel=1e-6)


def test_neumann_orthonormal_and_signed():
    g = SpaceGrid(0.0, 1.0, 400)
    eig = eigen_neumann(cosine_potential(g), g, 12)
    assert eig.orthonormality_defect() <= 1e-10
    assert np.all(np.diff(eig.lambdas) > 0.0)
    assert np.all(eig.matrix[:, 0] >= 0.0)
    assert np.all(eig.fd_residuals() <= 1e-10)


def test_constant_shift_identity():
    g = SpaceGrid(0.0, 1.0, 200)
    e0 = eigen_neumann(cosine_potential(g), g, 8)
    e1 = eigen_neumann(cosine_potential(g).shifted(2.5), g, 8)
    np.testing.assert_allclose(e1.lambdas, e0.lambdas + 2.5, rtol=0, atol=1e-9)
    np.testing.assert_allclose(e1.matrix, e0.matrix, rtol=0, atol=1e-8)


def test_negative_eigenvalue_index():
    g = SpaceGrid(0.0, 1.0, 400)
    eig = eigen_neumann(Potential.constant(g, -5.0), g, 5)
    assert eig.lambdas[0] == pytest.approx(-5.0, abs=1e-10)
    assert eig.n0 == 2
    assert eig.lambdas[eig.n0 - 2] < 0.0 <= eig.lambdas[eig.n0 - 1]


def test_dirichlet_free_spectrum_and_boundary_values():
    g = SpaceGrid(0.0, 1.0, 2000)
    eig = eigen_dirichlet(Potential.constant(g, 0.0), g, 6)
    np.testing.assert_allclose(eig.lambdas, (np.arange(1, 7) * math.pi) ** 2, rtol=1e-8)
    assert np.all(eig.matrix[:, [0, -1]] == 0.0)
    assert eig.orthonormality_defect() <= 1e-10


def test_raw_eigenvalues_converge_at_second_order():
    errs = []
    for cells in (200, 400):
        g = SpaceGrid(0.0, 1.0, cells)
        eig = eigen_neumann(Potential.constant(g, 0.0), g, 6, corrected=False)
        errs.append(np.abs(eig.lambdas[1:] - (np.arange(1, 6) * math.pi) ** 2))
    np.testing.assert_allclose(np.log2(errs[0] / errs[1]), 2.0, atol=0.05)


def test_completeness():
    g = SpaceGrid(0.0, 1.0, 2000)
    eig = eigen_neumann(cosine_potential(g), g, 40)
    a = SpaceProfile.from_function(g, lambda x: np.exp(x) * (1 + x**2))
    assert eig.tail_indicator(a) <= 1e-2


def test_resolution_guard_and_closure_name():
    g = SpaceGrid(0.0, 1.0, 20)
    p = Potential.constant(g, 0.0)
    with pytest.raises(ResolutionError):
        eigen_neumann(p, g, 6)
    with pytest.raises(ResolutionError):
        eigen_dirichlet(p, g, 0)
    with pytest.raises(DomainError):
        eigensystem(p, g, 2, bc="robin")


def test_projection_roundtrip():
    g = SpaceGrid(0.0, 1.0, 200)
    eig = eigen_neumann(cosine_potential(g), g, 10)
    c = np.arange(1.0, 11.0)
    np.testing.assert_allclose(eig.project(eig.synthesize(c)), c, rtol=1e-10)


# }}}


# {{{ phi / eigen link


def test_link_constant_mode_is_exact():
    # only the rounding of the computed eigenvalue remains
    g = SpaceGrid(0.0, 1.0, 100)
    res = verify_phi_eigen_link(Potential.constant(g, 0.0), g, 1.0, 1)
    assert res[0] <= 1e-10


def test_link_second_mode():
    # the corrected eigenvalues are exact for a constant potential, so the
    # residual sits at the RK4 / rounding floor on every grid
    for cells in (500, 1000):
        g = SpaceGrid(0.0, 1.0, cells)
        assert verify_phi_eigen_link(Potential.constant(g, 0.0), g, 1.0, 2)[1] <= 1e-8


def test_link_cosine_potential_order():
    res = []
    for cells in (1000, 2000):
        g = SpaceGrid(0.0, 1.0, cells)
        res.append(verify_phi_eigen_link(cosine_potential(g), g, 10.0, 5))
    assert np.all(res[1] <= 1e-4)
    assert np.all(np.log2(res[0] / res[1]) >= 1.8)


def test_link_rejects_insufficient_shift():
    g = SpaceGrid(0.0, 1.0, 100)
    with pytest.raises(PreconditionError):
        verify_phi_eigen_link(Potential.constant(g, -5.0), g, 1.0, 3)


# }}}


# {{{ asymptotics


def test_report_zero_potential_real_z():
    g = SpaceGrid(0.0, 1.0, 2000)
    rows = asymptotic_report(Potential.constant(g, 0.0), g, [1.0, 3.0, 10.0])
    assert all(r.r1 <= 1e-8 for r in rows)
    assert all(math.isnan(r.r2) for r in rows)


def test_report_bounded_along_imaginary_axis():
    g = SpaceGrid(0.0, 1.0, 4000)
    rows = asymptotic_report(Potential.constant(g, 1.0), g, [10j, 20j, 40j, 80j])
    for name in ("r0", "r1", "r2"):
        vals = np.array([getattr(r, name) for r in rows])
        assert np.all(vals > 0.0)
        assert vals.max() / vals.min() <= 3.0


def test_report_input_checks():
    g = SpaceGrid(0.0, 1.0, 100)
    p = Potential.constant(g, 0.0)
    with pytest.raises(DomainError):
        asymptotic_report(p, g, [])
    with pytest.raises(DomainError):
        asymptotic_report(p, g, [0.5j])


# }}}
