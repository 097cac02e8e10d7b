import json

import numpy as np
import pytest

from nlwit import matcore, serialization as ser
from nlwit.covariance import default_basis, optimize_q
from nlwit.nonlinear import improve_f2
from nlwit.states import bell_states, random_density, singlet
from nlwit.witness import witness_from_npt


def roundtrip(obj):
    return json.loads(json.dumps(obj))


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (2, 2, 2)])
def test_state_round_trip(dims):
    rho = random_density(dims, 4)
    back = ser.state_from_json(roundtrip(ser.state_to_json(rho)))
    assert back.dims == rho.dims and np.array_equal(back.mat, rho.mat)


def test_state_schema():
    obj = ser.state_to_json(singlet())
    assert set(obj) == {"dims", "re", "im"} and obj["dims"] == [2, 2]


@pytest.mark.parametrize(
    "obj,msg",
    [
        ({"dims": [2, 2], "re": np.eye(4).tolist()}, "trace"),
        ({"dims": [2, 2], "re": np.diag([1.5, -0.5, 0, 0]).tolist()}, "positive semidefinite"),
        ({"dims": [2, 2], "re": np.eye(4).tolist(), "im": np.triu(np.ones((4, 4))).tolist()}, "Hermitian"),
        ({"dims": [2, 3], "re": (np.eye(4) / 4).tolist()}, "dims"),
        ({"dims": "2x2", "re": (np.eye(4) / 4).tolist()}, "dims"),
        ({"dims": [2, 2]}, "re"),
        ({"dims": [2, 2], "re": [[1, 0], [0]]}, "numeric"),
        ([1, 2], "object"),
    ],
)
def test_state_parser_names_violations(obj, msg):
    with pytest.raises(ValueError, match=msg):
        ser.state_from_json(obj)


def test_witness_round_trip():
    wit = witness_from_npt(singlet())[0]
    back = ser.witness_from_json(roundtrip(ser.witness_to_json(wit)))
    assert back.provenance == "npt-eigenvector" and matcore.allclose(back.W, wit.W, 0)


def test_nonlinear_round_trip():
    F = improve_f2(bell_states()[0], bell_states())
    back = ser.nonlinear_from_json(roundtrip(ser.nonlinear_to_json(F)))
    assert back.family == "F2" and len(back.terms) == len(F.terms)
    for seed in range(5):
        rho = random_density((2, 2), seed)
        assert abs(back(rho) - F(rho)) < 1e-14


def test_nonlinear_rejects_non_hermitian_parts():
    obj = ser.nonlinear_to_json(improve_f2(bell_states()[0], bell_states()))
    obj["terms"][0]["H"]["im"][0][1] = 0.3
    with pytest.raises(ValueError, match="Hermitian"):
        ser.nonlinear_from_json(obj)


def test_certificate_round_trip_and_revalidation():
    cert, _ = optimize_q(singlet(), bell_states()[0].projector(), budget=50, refine=10)
    obj = roundtrip(ser.certificate_to_json(cert, (2, 2)))
    assert obj["basis"] == "pauli"
    back = ser.certificate_from_json(obj)
    assert matcore.allclose(back.Q, cert.Q, 1e-14)
    obj["alpha"]["re"][3] += 0.1
    with pytest.raises(ValueError, match="residual"):
        ser.certificate_from_json(obj)
    obj["basis"] = "gell-mann"
    with pytest.raises(ValueError, match="basis"):
        ser.certificate_from_json(obj)


def test_certificate_in_higher_dimension():
    rho = random_density((2, 3), 1)
    cert, _ = optimize_q(rho, rho.mat, default_basis((2, 3)), budget=20, refine=5)
    back = ser.certificate_from_json(roundtrip(ser.certificate_to_json(cert, (2, 3))))
    assert back.alpha.shape == (36,)


def test_load_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ValueError, match="malformed JSON"):
        ser.load_json(p)
    with pytest.raises(ValueError, match="cannot read"):
        ser.load_json(tmp_path / "missing.json")
