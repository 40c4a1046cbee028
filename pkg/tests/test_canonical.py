import numpy as np
import pytest

from rigidves.burgers import burgers_field
from rigidves.canonical import (
    StructureProvider,
    build_chart,
    injectivity_scan,
    invert_xi,
    jacobian_check,
    phi_burgers_form,
    phi_factored,
)
from rigidves.errors import InversionError, NearSingularChartError
from rigidves.grids import (
    ComplexGridField,
    GridSpec,
    convergence_order,
    max_norm,
    partial_x,
    partial_y,
    physical_margin_mask,
)
from rigidves.seedlang import make_builtin_seed
from rigidves.spectral import SpectralField, lambda_from_structure
from rigidves.structures import (
    AffineLambdaStructure,
    ConstantStructure,
    DeltaFamilyStructure,
)

SPEC = GridSpec(-0.5, 2.0, -1.0, 1.0, 61, 61)


def test_chart_constant_structure():
    sf = lambda_from_structure(ConstantStructure(1.0, 0.0).on_grid(SPEC))
    chart = build_chart(sf)
    X, Y = SPEC.mesh()
    assert np.max(np.abs(chart.xi.values - (Y - 1j * X))) < 1e-14
    assert np.max(np.abs(chart.phi.values - 2j)) < 1e-14
    assert np.max(np.abs(chart.jac_det - 1.0)) < 1e-14
    assert chart.jac_imag_contamination < 1e-12


def test_chart_delta_family_closed_forms():
    st = DeltaFamilyStructure(0.3)
    sf = lambda_from_structure(st.on_grid(SPEC))
    chart = build_chart(sf)
    X, Y = SPEC.mesh()
    assert np.max(np.abs(chart.xi.values - st.xi_exact(X, Y))) < 1e-13
    assert np.max(np.abs(chart.phi.values - st.phi_exact(X, Y))) < 1e-13
    assert np.max(np.abs(chart.jac_det - st.jac_det_exact(X, Y))) < 1e-13


def test_axis_normalization_any_structure():
    # at x = 0: xi = y, Phi = 2i Im(lambda), det = Im(lambda)
    for structure in (DeltaFamilyStructure(0.5),
                      AffineLambdaStructure(0.3, 0.2j, 2j)):
        sf = lambda_from_structure(structure.on_grid(SPEC))
        chart = build_chart(sf)
        i0 = SPEC.axis_column()
        ys = SPEC.ys()
        assert np.max(np.abs(chart.xi.values[i0] - ys)) < 1e-13
        im_lam = np.imag(sf.lam.values[i0])
        assert np.max(np.abs(chart.phi.values[i0] - 2j * im_lam)) < 1e-13
        assert np.max(np.abs(chart.jac_det[i0] - im_lam)) < 1e-13


def test_xi_is_structure_holomorphic():
    st = DeltaFamilyStructure(1.0)
    sf = lambda_from_structure(st.on_grid(SPEC))
    chart = build_chart(sf)
    # analytic partials: xi_x + lambda xi_y = -x * T = 0 to rounding
    xi_x, xi_y, route = chart.xi_partials()
    assert route == "analytic"
    residual = xi_x.values + sf.lam.values * xi_y.values
    assert np.max(np.abs(residual)) < 1e-13
    # FD route: O(h^2)
    fx = partial_x(chart.xi)
    fy = partial_y(chart.xi)
    res = ComplexGridField(SPEC, fx.values + sf.lam.values * fy.values,
                           fx.mask & fy.mask)
    assert max_norm(res) < 100 * SPEC.h ** 2


def test_phi_factored_routes_agree():
    st = DeltaFamilyStructure(1.0)
    sf = lambda_from_structure(st.on_grid(SPEC))
    chart = build_chart(sf)
    fact = phi_factored(sf)
    assert not fact.rigidity_warning
    assert np.max(np.abs(fact.values.values - chart.phi.values)) < 1e-13

    sol = burgers_field(make_builtin_seed("delta", {"delta": 1.0}), SPEC)
    burg = phi_burgers_form(sol.field, sol.J)
    fact_b = phi_factored(sol.field)
    m = burg.mask & fact_b.values.mask
    assert np.max(np.abs(burg.values - fact_b.values.values)[m]) < 1e-13


def test_phi_factored_warns_on_non_rigid():
    sf = lambda_from_structure(
        AffineLambdaStructure(1.0, 0.0, 1j).on_grid(SPEC))
    fact = phi_factored(sf)
    assert fact.rigidity_warning
    assert fact.max_rho_T == pytest.approx(1.0, abs=1e-12)


def test_phi_factored_constant():
    sf = lambda_from_structure(ConstantStructure(1.0, 0.0).on_grid(SPEC))
    fact = phi_factored(sf)
    assert np.max(np.abs(fact.values.values - 2j)) < 1e-14


def test_jacobian_check_three_routes():
    seed = make_builtin_seed("delta", {"delta": 1.0})
    base = GridSpec(-0.5, 2.0, -1.0, 1.0, 51, 51)
    margin = 3 * base.h
    pairs = []
    for k in (1, 2):
        spec = base.refined(k)
        sol = burgers_field(seed, spec)
        chart = build_chart(sol.field)
        rep = jacobian_check(chart, J=sol.J,
                             extra_mask=physical_margin_mask(spec, margin))
        pairs.append((spec.h, rep.max_fd_vs_formula))
        assert rep.max_formula_vs_burgers < 1e-13
        assert rep.min_jac_det > 0
        assert rep.zero_set_consistent
        assert rep.axis_residual < 1e-13
    assert 1.8 <= convergence_order(pairs) <= 2.2


def test_invert_xi_linear_one_step():
    provider = StructureProvider(ConstantStructure(1.0, 0.0))
    res = invert_xi(provider, complex(0.4, -0.7), (0.0, 0.0))
    assert res.x == pytest.approx(0.7, abs=1e-12)
    assert res.y == pytest.approx(0.4, abs=1e-12)
    assert res.iterations <= 2


def test_invert_xi_delta_family_against_closed_form():
    st = DeltaFamilyStructure(1.0)
    provider = StructureProvider(st)
    res = invert_xi(provider, 0.5 - 0.5j, (0.1, 0.1))
    assert res.x == pytest.approx(1.0, abs=1e-10)
    assert res.y == pytest.approx(1.0, abs=1e-10)

    rng = np.random.default_rng(17)
    for _ in range(100):
        x = rng.uniform(-0.4, 1.9)
        y = rng.uniform(-0.9, 0.9)
        target = complex((y - 1j * x) / (1 + x))
        got = invert_xi(provider, target, (0.0, float(np.clip(target.real,
                                                              -1, 1))),
                        tol=1e-13)
        xe, ye = st.invert_xi_exact(target)
        assert abs(got.x - xe) < 1e-10 and abs(got.y - ye) < 1e-10


def test_invert_xi_failure_modes():
    st = DeltaFamilyStructure(1.0)
    provider = StructureProvider(st)
    # q = -delta x/(1+x) > -delta on the domain: q = -2 is unreachable
    with pytest.raises((InversionError, NearSingularChartError)):
        invert_xi(provider, complex(0.0, -2.0), (0.5, 0.0), max_iter=30)


def test_injectivity_scan_builtins_and_fold():
    st = DeltaFamilyStructure(1.0)
    chart = build_chart(lambda_from_structure(st.on_grid(SPEC)))
    assert injectivity_scan(chart).injective

    lin = ComplexGridField.sample(SPEC, lambda X, Y: Y - 1j * X)
    assert injectivity_scan(lin).injective

    fold = ComplexGridField.sample(SPEC, lambda X, Y: Y - 1j * X ** 2)
    rep = injectivity_scan(fold)
    assert not rep.injective
    assert rep.verdict == "collisions_found"
    (p1, p2, dist) = rep.collisions[0]
    # reported pairs are mirror images across x = 0 at the same height
    assert p1[0] == pytest.approx(-p2[0], abs=1e-12)
    assert p1[1] == pytest.approx(p2[1], abs=1e-12)
    assert dist < 1e-12


def test_injectivity_scan_explicit_tolerance():
    lin = ComplexGridField.sample(SPEC, lambda X, Y: Y - 1j * X)
    # a huge explicit tolerance makes everything collide: the reporting
    # contract (grid distance > 2 cells) still applies
    rep = injectivity_scan(lin, bucket_tol=10.0)
    assert not rep.injective
    for (a, b, _) in rep.collisions:
        di = abs(a[0] - b[0]) / SPEC.hx
        dj = abs(a[1] - b[1]) / SPEC.hy
        assert max(di, dj) > 2 - 1e-9
