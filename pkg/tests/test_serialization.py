"""
Tests for model files and report bundles.
"""

import json
import math

import numpy as np
import pytest

from ergocert.certify import verify_proof_chain
from ergocert.errors import ValidationError
from ergocert.lattice import StateSpace
from ergocert.lower_bounds import certify_uniform_convergence
from ergocert.models import CtmcModel, DtmcModel, PdmpModel, build_ctmc
from ergocert.serialization import (
    SERIES_HEADER,
    SeriesRow,
    canonical_model_json,
    certificate_to_dict,
    dump_json,
    load_model,
    parse_model_spec,
    proof_chain_to_dict,
    read_series_csv,
    series_csv,
    spectral_to_dict,
    write_bundle,
)
from ergocert.spectral import spectral_report

from .oracles import LN2_HALF, TWO_STATE_RATES

CTMC_DOC = {"kind": "ctmc", "weights": [1.0, 1.0], "rates": TWO_STATE_RATES}


def test_parse_ctmc():
    model = parse_model_spec(CTMC_DOC)
    assert isinstance(model, CtmcModel)
    np.testing.assert_array_equal(model.rates, TWO_STATE_RATES)


def test_parse_dtmc_and_pdmp():
    dtmc = parse_model_spec(
        {"kind": "dtmc", "weights": [1, 1], "step": [[0.5, 0.5], [0.5, 0.5]]}
    )
    assert isinstance(dtmc, DtmcModel)

    pdmp = parse_model_spec({"kind": "pdmp", "pdmp": {"n": 4, "jump_rate": 1.0}})
    assert isinstance(pdmp, PdmpModel)
    np.testing.assert_allclose(pdmp.jump_target.values, 0.25)


@pytest.mark.parametrize(
    "document, where",
    [
        ({"kind": "ctmc", "weights": [1, 1]}, "<root>"),
        ({"kind": "sde", "weights": [1]}, "kind"),
        ({"kind": "ctmc", "weights": [1, 1], "rates": [[0, "x"], [0, 0]]}, "rates/0/1"),
        ({"kind": "pdmp", "pdmp": {"n": 0, "jump_rate": 1.0}}, "pdmp/n"),
        ({**CTMC_DOC, "colour": "red"}, "<root>"),
        ({**CTMC_DOC, "step": [[1.0]]}, "<root>"),
    ],
)
def test_schema_violations(document, where):
    with pytest.raises(ValidationError, match=where):
        parse_model_spec(document)


def test_model_validation_errors_surface():
    with pytest.raises(ValidationError, match="column"):
        parse_model_spec({"kind": "ctmc", "weights": [1, 1], "rates": [[-1, 0], [0, 0]]})
    with pytest.raises(ValidationError, match="shift"):
        parse_model_spec(
            {"kind": "pdmp", "pdmp": {"n": 4, "jump_rate": 1.0, "jump_target": [1, 0, 0, 0]}}
        )
    with pytest.raises(ValidationError, match="unit mass"):
        parse_model_spec(
            {"kind": "pdmp", "weights": [2, 2], "pdmp": {"n": 2, "jump_rate": 1.0}}
        )


def test_load_model_errors(tmp_path, model_file):
    with pytest.raises(ValidationError, match="cannot read"):
        load_model(tmp_path / "missing.json")

    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValidationError, match="not valid JSON"):
        load_model(bad)

    with pytest.raises(ValidationError, match="JSON object"):
        load_model(model_file([1, 2, 3]))


def test_canonical_model_json_reparses(tmp_path):
    model = build_ctmc(StateSpace(np.array([2.0, 1.0])), [[-0.5, 2.0], [1.0, -4.0]])
    text = canonical_model_json(model)
    path = tmp_path / "m.json"
    path.write_text(text, encoding="utf-8")
    again = load_model(path)
    np.testing.assert_array_equal(again.rates, model.rates)
    assert canonical_model_json(again) == text


def test_dump_json_is_canonical():
    assert dump_json({"b": 1, "a": [0.1, 2]}) == '{\n  "a": [\n    0.1,\n    2\n  ],\n  "b": 1\n}\n'
    with pytest.raises(ValueError):
        dump_json({"x": math.nan})


def test_certificate_dicts(two_state, rotation4):
    cert = certify_uniform_convergence(two_state, LN2_HALF, [1.0, 2.0])
    data = certificate_to_dict(cert)
    assert data["certified"]
    assert data["eta"] == pytest.approx(0.5)
    assert data["rate_bound"]["c"] == 2.0
    assert [row["t"] for row in data["audit"]] == [1.0, 2.0]
    json.loads(dump_json(data))

    none = certificate_to_dict(certify_uniform_convergence(rotation4, 1.0, [1.0]))
    assert none == {"certified": False, "t0": 1.0, "eta": 0.0, "reason": "maximal lower bound has zero mass"}


def test_proof_chain_dict_is_json_safe(rotation4, pdmp4):
    for model in (rotation4, pdmp4):
        report = verify_proof_chain(model, 1.0, [1.0, 2.0, 3.0])
        data = proof_chain_to_dict(report)
        text = dump_json(data)
        assert json.loads(text)["t0"] == 1.0


def test_spectral_dict_encodes_complex_values(rotation4):
    data = spectral_to_dict(spectral_report(rotation4))
    assert all(len(pair) == 2 for pair in data["eigenvalues"])
    assert data["one_step"] is True


def test_series_csv_format():
    rows = [
        SeriesRow(t=2.0, op_distance_to_P=0.1, cesaro_distance=0.2, doeblin_mass=0.9),
        SeriesRow(t=1.0, op_distance_to_P=1 / 3, cesaro_distance=0.5, doeblin_mass=0.0),
    ]
    text = series_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(SERIES_HEADER)
    assert lines[1].startswith("1,0.33333333333333331,")
    assert lines[2].startswith("2,")
    assert text.endswith("\n")


def test_write_bundle(tmp_path):
    rows = [SeriesRow(1.0, 0.5, 0.25, 0.5)]
    out = write_bundle(tmp_path / "bundle", {"command": "test"}, rows)
    assert json.loads((out / "report.json").read_text()) == {"command": "test"}
    assert read_series_csv(out / "series.csv") == rows

    only_report = write_bundle(tmp_path / "plain", {"x": 1})
    assert not (only_report / "series.csv").exists()
