import json

import numpy as np
import pytest

from rigidves.errors import DegenerateFiberError, DomainError
from rigidves.grids import ComplexGridField, GridSpec
from rigidves.io import read_field_csv, write_field_csv, write_report_json
from rigidves.structures import (
    AffineLambdaStructure,
    ConstantStructure,
    DeltaFamilyStructure,
    SampledStructure,
    structure_from_json,
)

SPEC = GridSpec(-0.5, 2.0, -1.0, 1.0, 21, 17)


def test_constant_structure_validation():
    with pytest.raises(DegenerateFiberError):
        ConstantStructure(0.0, 0.0)
    with pytest.raises(DegenerateFiberError):
        ConstantStructure(1.0, 2.0)
    gs = ConstantStructure(2.0, -2.0).on_grid(SPEC)
    assert np.allclose(gs.disc, 4.0)
    assert np.allclose(gs.lam, 1 + 1j)


def test_delta_family_domain_is_enforced():
    st = DeltaFamilyStructure(1.0)
    with pytest.raises(DomainError):
        st.on_grid(GridSpec(-1.5, 1.0, -1.0, 1.0, 11, 11))
    with pytest.raises(ValueError):
        DeltaFamilyStructure(0.0)


def test_custom_lambda_requires_upper_half_plane():
    st = AffineLambdaStructure(1.0, 0.0, 0.5)  # real c0: Im(lambda) = 0
    with pytest.raises(DegenerateFiberError):
        st.on_grid(SPEC)


def test_sampled_structure_round_trip():
    X, Y = SPEC.mesh()
    alpha = 1.0 + 0.1 * X ** 2
    beta = 0.2 * Y
    st = SampledStructure(SPEC, alpha, beta)
    gs = st.on_grid(SPEC)
    assert np.allclose(gs.disc, 4 * alpha - beta ** 2)
    assert not gs.has_analytic_partials
    with pytest.raises(DomainError):
        st.on_grid(SPEC.refined(2))
    with pytest.raises(DegenerateFiberError):
        SampledStructure(SPEC, 0.0 * X, 0.0 * Y + 1.0)


def test_structure_json_named_round_trip():
    for st in (ConstantStructure(2.0, -2.0), DeltaFamilyStructure(0.3),
               AffineLambdaStructure(1.0, 0.0, 1j)):
        doc = st.to_json()
        rebuilt = structure_from_json(doc)
        g1 = st.on_grid(SPEC)
        g2 = rebuilt.on_grid(SPEC)
        assert np.allclose(g1.alpha, g2.alpha)
        assert np.allclose(g1.beta, g2.beta)
    with pytest.raises(DomainError):
        structure_from_json({"kind": "named", "name": "mystery"})


def test_structure_json_sampled_via_csv(tmp_path):
    X, Y = SPEC.mesh()
    alpha = ComplexGridField(SPEC, 1.0 + 0.1 * X ** 2)
    beta = ComplexGridField(SPEC, 0.2 * Y)
    write_field_csv(tmp_path / "alpha.csv", alpha)
    write_field_csv(tmp_path / "beta.csv", beta)
    st = structure_from_json(
        {"kind": "sampled",
         "files": {"alpha": str(tmp_path / "alpha.csv"),
                   "beta": str(tmp_path / "beta.csv")}},
        csv_reader=read_field_csv)
    gs = st.on_grid(SPEC)
    assert np.allclose(gs.alpha, 1.0 + 0.1 * X ** 2)


def test_csv_round_trip_preserves_everything(tmp_path):
    X, Y = SPEC.mesh()
    mask = np.ones_like(X, dtype=bool)
    mask[3:5, 2:9] = False
    field = ComplexGridField(SPEC, np.exp(X) * np.cos(Y) + 1j * X * Y / 3,
                             mask)
    path = tmp_path / "field.csv"
    write_field_csv(path, field)
    back = read_field_csv(path)
    assert back.spec == SPEC
    assert np.array_equal(back.mask, mask)
    assert np.array_equal(back.values, field.values)


def test_csv_layout_is_row_major_over_y_then_x(tmp_path):
    field = ComplexGridField.sample(SPEC, lambda X, Y: X + 1j * Y)
    path = tmp_path / "f.csv"
    write_field_csv(path, field)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,re,im,mask"
    # first block sweeps x at the lowest y
    first = lines[1].split(",")
    second = lines[2].split(",")
    assert float(first[1]) == float(second[1]) == SPEC.y_min
    assert float(second[0]) > float(first[0])


def test_csv_header_and_uniformity_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_field_csv(path)


def test_report_json_deterministic_modulo_timestamp(tmp_path):
    payload = {"b": 1.5, "a": {"nested": [1, 2, 3]}, "flag": np.bool_(True)}
    p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
    write_report_json(p1, payload)
    write_report_json(p2, payload)
    d1 = json.loads(p1.read_text())
    d2 = json.loads(p2.read_text())
    d1.pop("generated_at")
    d2.pop("generated_at")
    assert d1 == d2
