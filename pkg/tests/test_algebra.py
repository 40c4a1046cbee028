import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidves.algebra import (
    AlgebraElement,
    AlgebraSection,
    alg_conj,
    alg_inv,
    alg_mul,
    alg_norm,
    cr_apply,
    homogeneity_check,
    leibniz_residual,
    obstruction_field,
)
from rigidves.errors import DegenerateFiberError, NotInvertibleError
from rigidves.grids import ComplexGridField, GridSpec, convergence_order, \
    max_norm, partial_x, partial_y, physical_margin_mask
from rigidves.structures import (
    AffineLambdaStructure,
    ConstantStructure,
    DeltaFamilyStructure,
)

SPEC = GridSpec(-0.5, 2.0, -1.0, 1.0, 61, 61)


def test_mul_examples():
    assert alg_mul(AlgebraElement(0, 1), AlgebraElement(0, 1), 1, 0) == \
        AlgebraElement(-1, 0)
    w = AlgebraElement(3.0, -2.0)
    assert alg_mul(AlgebraElement(1, 0), w, 5, 1) == AlgebraElement(3.0, -2.0)
    # i^2 = -beta i - alpha = 2i - 2 for (alpha, beta) = (2, -2)
    assert alg_mul(AlgebraElement(0, 1), AlgebraElement(0, 1), 2, -2) == \
        AlgebraElement(-2, 2)


def test_conj_examples():
    assert alg_conj(AlgebraElement(1, 1), 0) == AlgebraElement(1, -1)
    assert alg_conj(AlgebraElement(1, 1), -2) == AlgebraElement(3, -1)


def test_norm_examples():
    assert alg_norm(AlgebraElement(3, 4), 1, 0) == 25
    assert alg_norm(AlgebraElement(1, 1), 2, -2) == 5


def test_inv_examples():
    assert alg_inv(AlgebraElement(1, 0), 7, 3) == AlgebraElement(1, 0)
    inv_i = alg_inv(AlgebraElement(0, 1), 1, 0)
    assert inv_i.u == 0 and inv_i.v == -1


def test_degenerate_and_zero_errors():
    with pytest.raises(DegenerateFiberError):
        alg_mul(AlgebraElement(1, 1), AlgebraElement(1, 1), 1, 2)
    with pytest.raises(NotInvertibleError):
        alg_inv(AlgebraElement(0, 0), 1, 0)


finite = st.floats(-10, 10, allow_nan=False)
disc_st = st.floats(0.1, 10)
beta_st = st.floats(-3, 3)


@given(finite, finite, beta_st, disc_st)
@settings(max_examples=200, deadline=None)
def test_conjugation_involution_and_norm_via_product(u, v, beta, disc):
    alpha = (disc + beta * beta) / 4.0
    w = AlgebraElement(u, v)
    back = alg_conj(alg_conj(w, beta), beta)
    assert back.u == pytest.approx(u, rel=1e-13, abs=1e-13)
    assert back.v == v
    prod = alg_mul(w, alg_conj(w, beta), alpha, beta)
    n = alg_norm(w, alpha, beta)
    assert prod.u == pytest.approx(n, rel=1e-12, abs=1e-12)
    assert abs(prod.v) <= 1e-12 * max(1.0, abs(n))


def test_norm_multiplicativity_bulk():
    rng = np.random.default_rng(11)
    n = 1000
    u1, v1, u2, v2 = (rng.uniform(-10, 10, n) for _ in range(4))
    beta = rng.uniform(-2, 2, n)
    alpha = (rng.uniform(0.1, 10, n) + beta ** 2) / 4.0
    w, t = AlgebraElement(u1, v1), AlgebraElement(u2, v2)
    lhs = alg_norm(alg_mul(w, t, alpha, beta), alpha, beta)
    rhs = alg_norm(w, alpha, beta) * alg_norm(t, alpha, beta)
    assert np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-30)) < 1e-12


def test_inversion_roundtrip_bulk():
    rng = np.random.default_rng(12)
    n = 1000
    u = rng.uniform(-10, 10, n)
    v = rng.uniform(-10, 10, n)
    beta = rng.uniform(-2, 2, n)
    alpha = (rng.uniform(0.1, 10, n) + beta ** 2) / 4.0
    keep = alg_norm(AlgebraElement(u, v), alpha, beta) >= 1e-6
    w = AlgebraElement(u[keep], v[keep])
    unit = alg_mul(w, alg_inv(w, alpha[keep], beta[keep]),
                   alpha[keep], beta[keep])
    assert np.max(np.hypot(unit.u - 1.0, unit.v)) < 1e-12


def test_obstruction_constant_structure_is_zero():
    gs = ConstantStructure(2.0, -2.0).on_grid(SPEC)
    g = obstruction_field(gs)
    assert max_norm(g.spectral_image()) < 1e-13


def test_obstruction_delta_family_analytic_and_fd():
    gs = DeltaFamilyStructure(1.0).on_grid(SPEC)
    g = obstruction_field(gs)
    assert g.route == "analytic"
    assert max_norm(g.spectral_image()) < 1e-12

    # FD fallback: strip the analytic partials
    gs.alpha_x = gs.alpha_y = gs.beta_x = gs.beta_y = None
    g_fd = obstruction_field(gs)
    assert g_fd.route == "fd"
    assert max_norm(g_fd.spectral_image()) < 10 * SPEC.h ** 2 * 50


def test_obstruction_control_lambda_image_is_one():
    # lambda = x + i has transport defect lambda_x + lambda lambda_y = 1
    gs = AffineLambdaStructure(1.0, 0.0, 1j).on_grid(SPEC)
    g = obstruction_field(gs)
    img = g.spectral_image()
    assert np.max(np.abs(img.values[img.mask] - 1.0)) < 1e-12


def test_obstruction_matches_fd_transport_defect():
    # Transport-law cross-check via FD on both structures
    for structure in (DeltaFamilyStructure(0.7), AffineLambdaStructure(1.0, 0.0, 1j)):
        gs = structure.on_grid(SPEC)
        g = obstruction_field(gs)
        img = g.spectral_image()
        lam = ComplexGridField(SPEC, gs.lam, gs.mask)
        lx = partial_x(lam)
        ly = partial_y(lam)
        T = lx.values + gs.lam * ly.values
        mask = lx.mask & ly.mask & img.mask
        diff = np.abs(T - img.values)[mask]
        assert diff.max() < 100 * SPEC.h ** 2


def test_cr_apply_standard_structure():
    gs = ConstantStructure(1.0, 0.0).on_grid(SPEC)
    hol = AlgebraSection.sample(gs, lambda X, Y: X, lambda X, Y: Y)
    dec = cr_apply(hol)
    assert np.max(np.abs(dec.p[dec.mask])) < 1e-13
    assert np.max(np.abs(dec.q[dec.mask])) < 1e-13

    anti = AlgebraSection.sample(gs, lambda X, Y: X, lambda X, Y: -Y)
    dec = cr_apply(anti)
    assert np.max(np.abs(dec.p[dec.mask] - 2.0)) < 1e-12
    assert np.max(np.abs(dec.q[dec.mask])) < 1e-13


def test_cr_apply_vg_terms_vanish_on_rigid_structure():
    gs = DeltaFamilyStructure(1.0).on_grid(SPEC)
    sec = AlgebraSection.sample(gs, lambda X, Y: X * Y, lambda X, Y: X + Y)
    dec = cr_apply(sec)
    assert np.max(np.abs(dec.vg_p[dec.mask])) < 1e-12
    assert np.max(np.abs(dec.vg_q[dec.mask])) < 1e-12
    # and the principal part is everything
    assert np.allclose(dec.principal_p, dec.p - dec.vg_p)


def test_leibniz_constant_sections():
    gs = ConstantStructure(2.0, -2.0).on_grid(SPEC)
    w = AlgebraSection.sample(gs, lambda X, Y: 1.0 + 0 * X, lambda X, Y: 2.0 + 0 * X)
    t = AlgebraSection.sample(gs, lambda X, Y: -0.5 + 0 * X, lambda X, Y: 3.0 + 0 * X)
    assert leibniz_residual(w, t) < 1e-13


@pytest.mark.parametrize("structure", [
    DeltaFamilyStructure(1.0),
    AffineLambdaStructure(1.0, 0.0, 1j),  # Leibniz needs no rigidity
])
def test_leibniz_two_grid_order(structure):
    base = GridSpec(-0.5, 2.0, -1.0, 1.0, 51, 51)
    margin = 3 * base.h
    pairs = []
    for k in (1, 2):
        spec = base.refined(k)
        gs = structure.on_grid(spec)
        w = AlgebraSection.sample(
            gs, lambda X, Y: X ** 2 - Y ** 2 + 0.3 * np.sin(2 * Y),
            lambda X, Y: 2 * X * Y + 0.3 * np.cos(2 * X))
        t = AlgebraSection.sample(
            gs, lambda X, Y: 1.0 + X * Y,
            lambda X, Y: Y - 0.5 * X + 0.2 * np.sin(X + Y))
        pairs.append((spec.h, leibniz_residual(
            w, t, extra_mask=physical_margin_mask(spec, margin))))
    order = convergence_order(pairs)
    assert 1.8 <= order <= 2.2


def test_homogeneity_verdicts():
    rigid = homogeneity_check(DeltaFamilyStructure(1.0).on_grid(SPEC))
    assert rigid.rigid and rigid.max_rho_g < 1e-12

    const = homogeneity_check(ConstantStructure(1.0, 0.0).on_grid(SPEC))
    assert const.rigid and const.max_abs_g < 1e-13

    control = homogeneity_check(
        AffineLambdaStructure(1.0, 0.0, 1j).on_grid(SPEC))
    assert not control.rigid
    assert control.max_abs_g == pytest.approx(1.0, abs=1e-12)
