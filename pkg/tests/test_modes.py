"""Assumed-modes basis families and their integral caches."""

import numpy as np
import pytest

from flexchain import modes
from flexchain.modes import LinkBasis, ModalCache, ModalField
from conftest import canonical_params


def test_clamped_free_roots():
    bl = modes.bending_roots("clamped-free", 3)
    assert abs(bl[0] - 1.875104) < 1e-5
    assert abs(bl[1] - 4.694091) < 1e-3
    assert abs(bl[2] - 7.854757) < 1e-3
    # characteristic equation is actually satisfied
    for b in bl:
        assert abs(np.cos(b) * np.cosh(b) + 1.0) < 1e-9


def test_free_free_roots():
    bl = modes.bending_roots("free-free-elastic", 2)
    assert abs(bl[0] - 4.730041) < 1e-5
    for b in bl:
        assert abs(np.cos(b) * np.cosh(b) - 1.0) < 1e-6


def test_orthonormality_up_to_ten_modes():
    params = canonical_params()
    for kind in modes.KINDS:
        basis = LinkBasis(kind, 10, 0.0, 1.0)
        gram = ModalCache(basis, params).Gram
        assert np.max(np.abs(gram - np.eye(30))) < 1e-9


def test_axial_shapes():
    basis = LinkBasis("clamped-free", 2, 0.0, 1.0)
    phi = basis.evaluate(1.0, 0)
    # first axial mode at the free end: sqrt(2/l) * sin(pi/2)
    assert abs(phi[0, 0] - np.sqrt(2.0)) < 1e-12
    assert abs(phi[0, 3] + np.sqrt(2.0)) < 1e-12

    free = LinkBasis("free-free-elastic", 1, 0.0, 1.0)
    d1 = free.evaluate(0.0, 1)
    d2 = free.evaluate(1.0, 1)
    assert abs(d1[0, 0]) < 1e-10      # rod ends are strain-free
    assert abs(d2[0, 0]) < 1e-10


def test_bending_boundary_conditions():
    basis = LinkBasis("clamped-free", 2, 0.0, 1.0)
    for order in (0, 1):
        root = basis.evaluate(0.0, order)
        assert abs(root[1, 1]) < 1e-10        # clamp: value and slope zero
        assert abs(root[2, 2]) < 1e-10
    tip2 = basis.evaluate(1.0, 2)
    assert abs(tip2[1, 1]) < 1e-6             # moment-free tip
    assert abs(tip2[2, 2]) < 1e-6


def test_eigenfunction_fourth_derivative_identity():
    basis = LinkBasis("clamped-free", 3, 0.0, 1.0)
    xi = np.linspace(0.05, 0.95, 7)
    p0 = basis.evaluate_nodes(xi, 0)
    p4 = basis.evaluate_nodes(xi, 4)
    for p in range(3):
        col = 3 * p + 1                        # y-bending column of mode p+1
        beta = basis.beta[p]
        num = p4[:, 1, col] - beta ** 4 * p0[:, 1, col]
        assert np.max(np.abs(num)) < 1e-8 * beta ** 4


def test_cache_stiffness_and_mean():
    params = canonical_params()
    basis = LinkBasis("clamped-free", 2, 0.0, 1.0)
    cache = ModalCache(basis, params)
    # bending diagonal of K equals E*Iz*beta^4 (unit-norm eigenfunctions)
    for p in range(2):
        col = 3 * p + 1
        expected = params.E * params.Iz * basis.beta[p] ** 4
        assert abs(cache.K[col, col] - expected) < 1e-6 * expected
    # the literal fourth-derivative form agrees with the symmetric form
    assert np.max(np.abs(cache.K - cache.K_literal)) < 1e-6 * np.max(cache.K)

    free = ModalCache(LinkBasis("free-free-elastic", 2, 0.0, 1.0), params)
    # elastic free-free modes carry no mean displacement
    for p in range(2):
        assert np.max(np.abs(free.Phi0[:, 3 * p + 1])) < 1e-9
        assert np.max(np.abs(free.Phi0[:, 3 * p + 2])) < 1e-9


def test_zero_mode_basis():
    basis = LinkBasis("clamped-free", 0, 0.0, 1.0)
    cache = ModalCache(basis, canonical_params())
    assert cache.Gram.shape == (0, 0)
    assert cache.phi[0].shape[2] == 0
    with pytest.raises(ValueError):
        LinkBasis("clamped-free", -1, 0.0, 1.0)


def test_reconstruct_deformation():
    basis = LinkBasis("clamped-free", 2, 0.0, 1.0)
    field = modes.reconstruct_deformation(basis, np.zeros(6))
    xi = np.linspace(0.0, 1.0, 5)
    assert np.all(field.r_xi(xi) == 0.0)

    eta = np.zeros(6)
    eta[1] = 1.0                               # unit first y-bending mode
    field = modes.reconstruct_deformation(basis, eta)
    disp = field.r_xi(xi)
    shape = basis.evaluate_nodes(xi, 0)[:, 1, 1]
    assert np.allclose(disp[:, 1], shape, atol=1e-12)
    assert np.all(disp[:, [0, 2]] == 0.0)


def test_modal_field_dimension_check():
    basis = LinkBasis("clamped-free", 2, 0.0, 1.0)
    with pytest.raises(ValueError):
        ModalField(basis, np.zeros(5))


def test_projection_error_decreases():
    # spectral projection of a smooth non-polynomial deflection improves
    # monotonically with mode count
    target = lambda xi: np.stack(
        [np.zeros_like(xi), xi ** 2 * (3.0 - xi) / 6.0,
         np.zeros_like(xi)], axis=-1)
    errs = []
    xi = np.linspace(0.0, 1.0, 401)
    for r in range(1, 7):
        basis = LinkBasis("clamped-free", r, 0.0, 1.0)
        eta = modes.project_field(basis, target)
        rec = modes.reconstruct_deformation(basis, eta).r_xi(xi)
        errs.append(np.sqrt(np.trapezoid(
            np.sum((rec - target(xi)) ** 2, axis=1), xi)))
    for a, b in zip(errs, errs[1:]):
        assert b < a


def test_natural_frequencies_closed_form():
    params = canonical_params()
    basis = LinkBasis("clamped-free", 2, 0.0, 1.0)
    wx, wy, wz = modes.natural_frequencies(basis, params)
    stiff = np.sqrt(params.E * params.Iz / (params.rho * params.A))
    assert abs(wy[0] - basis.beta[0] ** 2 * stiff) < 1e-6 * wy[0]
    # axial rod: odd quarter-wave frequencies
    wave = np.sqrt(params.E / params.rho)
    assert abs(wx[0] - 0.5 * np.pi * wave) < 1e-6 * wx[0]
    assert abs(wx[1] - 1.5 * np.pi * wave) < 1e-6 * wx[1]
