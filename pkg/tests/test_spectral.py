import numpy as np
import pytest

from rigidves.algebra import AlgebraSection
from rigidves.errors import EllipticityError, StructureMismatchError
from rigidves.grids import (
    ComplexGridField,
    GridSpec,
    convergence_order,
    max_norm,
    physical_margin_mask,
)
from rigidves.spectral import (
    SpectralField,
    divergence_form_residual,
    intertwining_residual,
    lambda_from_structure,
    structure_from_lambda,
    transport,
    transport_residual,
    untransport,
)
from rigidves.structures import (
    AffineLambdaStructure,
    ConstantStructure,
    DeltaFamilyStructure,
)

SPEC = GridSpec(-0.5, 2.0, -1.0, 1.0, 61, 61)


def test_lambda_from_structure_examples():
    lam = lambda_from_structure(ConstantStructure(1.0, 0.0).on_grid(SPEC))
    assert np.allclose(lam.lam.values, 1j)
    lam = lambda_from_structure(ConstantStructure(2.0, -2.0).on_grid(SPEC))
    assert np.allclose(lam.lam.values, 1 + 1j)
    # and the root actually solves lambda^2 + beta lambda + alpha = 0
    val = complex(lam.lam.values[0, 0])
    assert abs(val * val - 2 * val + 2) < 1e-14


def test_lambda_delta_family_closed_form():
    sf = lambda_from_structure(DeltaFamilyStructure(0.25).on_grid(SPEC))
    X, Y = SPEC.mesh()
    assert np.max(np.abs(sf.lam.values - (Y + 0.25j) / (1 + X))) < 1e-13
    assert sf.has_analytic_partials


def test_root_residual_invariant():
    # generic sqrt route: strip closed forms by using a sampled structure
    gs = DeltaFamilyStructure(1.0).on_grid(SPEC)
    sf = lambda_from_structure(gs)
    st2 = structure_from_lambda(sf)
    sf2 = lambda_from_structure(st2.on_grid(SPEC))
    lam = sf2.lam.values
    res = np.abs(lam ** 2 + st2.beta_values * lam + st2.alpha_values)
    assert np.max(res / (1 + np.abs(lam) ** 2)) < 1e-12


def test_structure_from_lambda_vieta():
    lam = ComplexGridField.constant(SPEC, 1j)
    st = structure_from_lambda(SpectralField(lam, "user_supplied"))
    assert np.allclose(st.alpha_values, 1.0)
    assert np.allclose(st.beta_values, 0.0)

    lam = ComplexGridField.constant(SPEC, 1 + 1j)
    st = structure_from_lambda(SpectralField(lam, "user_supplied"))
    assert np.allclose(st.alpha_values, 2.0)
    assert np.allclose(st.beta_values, -2.0)


def test_vieta_roundtrip_random():
    rng = np.random.default_rng(3)
    vals = (rng.uniform(-5, 5, (SPEC.nx, SPEC.ny))
            + 1j * np.exp(rng.uniform(np.log(0.01), np.log(100),
                                      (SPEC.nx, SPEC.ny))))
    sf = SpectralField(ComplexGridField(SPEC, vals), "user_supplied")
    back = lambda_from_structure(structure_from_lambda(sf).on_grid(SPEC))
    err = np.abs(back.lam.values - vals) / (1 + np.abs(vals))
    assert np.max(err) < 1e-14


def test_ellipticity_validation():
    bad = ComplexGridField.constant(SPEC, 1.0 - 0.5j)
    with pytest.raises(EllipticityError):
        SpectralField(bad, "user_supplied")


def test_transport_examples_and_homomorphism():
    gs = DeltaFamilyStructure(1.0).on_grid(SPEC)
    sf = lambda_from_structure(gs)
    one = AlgebraSection.sample(gs, lambda X, Y: 1 + 0 * X, lambda X, Y: 0 * X)
    gen = AlgebraSection.sample(gs, lambda X, Y: 0 * X, lambda X, Y: 1 + 0 * X)
    assert np.max(np.abs(transport(one, sf).values - 1.0)) < 1e-15
    assert np.max(np.abs(transport(gen, sf).values - sf.lam.values)) < 1e-15

    rng = np.random.default_rng(5)
    shape = (SPEC.nx, SPEC.ny)
    w = AlgebraSection(gs, rng.uniform(-3, 3, shape), rng.uniform(-3, 3, shape))
    t = AlgebraSection(gs, rng.uniform(-3, 3, shape), rng.uniform(-3, 3, shape))
    lhs = transport(w.product(t), sf).values
    rhs = transport(w, sf).values * transport(t, sf).values
    assert np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))) < 1e-12

    # injectivity: solve back componentwise
    back = untransport(transport(w, sf), sf, gs)
    assert np.max(np.abs(back.u - w.u)) < 1e-10
    assert np.max(np.abs(back.v - w.v)) < 1e-10


def test_transport_structure_mismatch():
    gs = DeltaFamilyStructure(1.0).on_grid(SPEC)
    w = AlgebraSection.sample(gs, lambda X, Y: X, lambda X, Y: Y)
    other = lambda_from_structure(ConstantStructure(1.0, 0.0).on_grid(SPEC))
    with pytest.raises(StructureMismatchError):
        transport(w, other)


def test_transport_residual_routes():
    const = lambda_from_structure(ConstantStructure(1.0, 0.0).on_grid(SPEC))
    assert transport_residual(const).max_rho_T < 1e-14

    sf = lambda_from_structure(DeltaFamilyStructure(1.0).on_grid(SPEC))
    diag = transport_residual(sf)
    assert diag.route == "analytic" and diag.max_rho_T < 1e-13 and diag.rigid

    fd = SpectralField(sf.lam, sf.provenance)  # no partials -> FD route
    diag_fd = transport_residual(fd)
    assert diag_fd.route == "fd"
    assert diag_fd.max_rho_T < 50 * SPEC.h ** 2

    control = lambda_from_structure(
        AffineLambdaStructure(1.0, 0.0, 1j).on_grid(SPEC))
    diag_c = transport_residual(control)
    assert diag_c.max_rho_T == pytest.approx(1.0, abs=1e-13)
    assert not diag_c.rigid


def test_intertwining_constant_structure_is_exact():
    gs = ConstantStructure(2.0, -2.0).on_grid(SPEC)
    sec = AlgebraSection.sample(gs, lambda X, Y: 3.0 + 0 * X,
                                lambda X, Y: -1.0 + 0 * X)
    res = intertwining_residual(sec)
    assert res["max"] < 1e-13


@pytest.mark.parametrize("structure", [
    DeltaFamilyStructure(1.0),
    AffineLambdaStructure(1.0, 0.0, 1j),  # identity is universal
])
def test_intertwining_two_grid_order(structure):
    base = GridSpec(-0.5, 2.0, -1.0, 1.0, 51, 51)
    margin = 3 * base.h
    pairs = []
    for k in (1, 2):
        spec = base.refined(k)
        gs = structure.on_grid(spec)
        sec = AlgebraSection.sample(
            gs, lambda X, Y: X ** 2 - Y ** 2 + 0.3 * np.sin(2 * Y),
            lambda X, Y: 2 * X * Y + 0.3 * np.cos(2 * X))
        res = intertwining_residual(
            sec, extra_mask=physical_margin_mask(spec, margin))
        pairs.append((spec.h, res["max"]))
    assert 1.8 <= convergence_order(pairs) <= 2.2


def test_divergence_form_simple_cases():
    sf = lambda_from_structure(DeltaFamilyStructure(1.0).on_grid(SPEC))
    one = ComplexGridField.constant(SPEC, 1.0)
    res = divergence_form_residual(one, sf)
    assert max_norm(res) < 1e-12

    const = lambda_from_structure(ConstantStructure(2.0, -2.0).on_grid(SPEC))
    X, Y = SPEC.mesh()
    f = ComplexGridField(SPEC, np.exp(X) * np.cos(Y))
    assert max_norm(divergence_form_residual(f, const)) < 1e-12


def test_divergence_form_order():
    base = GridSpec(-0.5, 2.0, -1.0, 1.0, 51, 51)
    margin = 3 * base.h
    pairs = []
    for k in (1, 2):
        spec = base.refined(k)
        sf = lambda_from_structure(DeltaFamilyStructure(1.0).on_grid(spec))
        X, Y = spec.mesh()
        xi2 = ComplexGridField(spec, ((Y - 1j * X) / (1 + X)) ** 2)
        res = divergence_form_residual(xi2, sf)
        pairs.append((spec.h, max_norm(
            res, extra_mask=physical_margin_mask(spec, margin))))
    assert 1.8 <= convergence_order(pairs) <= 2.2
