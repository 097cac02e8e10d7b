"""JSON round-tripping for states, witnesses, nonlinear witnesses and certificates.

Matrices are stored row-major as separate ``"re"`` and ``"im"`` nested lists.
Every loader re-validates the object it builds and raises ``ValueError``
naming what failed.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .covariance import QCertificate, default_basis, validate_certificate
from .nonlinear import FAMILIES, NonlinearWitness, QuadraticTerm
from .states import DensityOperator, density_violations
from .witness import LinearWitness


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def matrix_from_json(obj: dict, what: str = "matrix") -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except KeyError:
        raise ValueError(f"{what}: missing field 're'") from None
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{what}: entries are not numeric arrays ({exc})") from None
    if re.ndim != 2 or re.shape != im.shape or re.shape[0] != re.shape[1]:
        raise ValueError(f"{what}: 're' and 'im' must be square arrays of equal shape")
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise ValueError(f"{what}: non-finite entries")
    return re + 1j * im


def _dims(obj: dict, what: str) -> tuple[int, ...]:
    if not isinstance(obj, dict):
        raise ValueError(f"{what}: expected a JSON object")
    dims = obj.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 2 for d in dims):
        raise ValueError(f"{what}: 'dims' must be a list of integers >= 2")
    return tuple(dims)


def state_to_json(rho: DensityOperator) -> dict:
    return {"dims": list(rho.dims), **matrix_to_json(rho.mat)}


def state_from_json(obj: dict) -> DensityOperator:
    dims = _dims(obj, "state")
    mat = matrix_from_json(obj, "state")
    bad = density_violations(mat, dims)
    if bad:
        raise ValueError("invalid state: " + "; ".join(bad))
    return DensityOperator(mat, dims)


def witness_to_json(wit: LinearWitness) -> dict:
    return {"dims": list(wit.dims), **matrix_to_json(wit.W), "provenance": wit.provenance}


def witness_from_json(obj: dict) -> LinearWitness:
    dims = _dims(obj, "witness")
    W = matrix_from_json(obj, "witness")
    return LinearWitness(W, dims, obj.get("provenance", "user"))


def nonlinear_to_json(F: NonlinearWitness) -> dict:
    return {
        "family": F.family,
        "linear": witness_to_json(F.linear),
        "terms": [
            {"H": matrix_to_json(t.H), "A": matrix_to_json(t.A), "weight": t.weight} for t in F.terms
        ],
    }


def nonlinear_from_json(obj: dict) -> NonlinearWitness:
    lin = witness_from_json(obj.get("linear", {}))
    family = obj.get("family", "custom")
    if family not in FAMILIES:
        raise ValueError(f"nonlinear witness: unknown family {family!r}")
    terms = []
    for k, t in enumerate(obj.get("terms", [])):
        H = matrix_from_json(t["H"], f"term {k} H")
        A = matrix_from_json(t["A"], f"term {k} A")
        for name, M in (("H", H), ("A", A)):
            if np.max(np.abs(M - M.conj().T)) > 1e-10:
                raise ValueError(f"term {k}: {name} is not Hermitian")
        terms.append(QuadraticTerm(H + 1j * A, float(t["weight"])))
    return NonlinearWitness(lin, tuple(terms), family)


def certificate_to_json(cert: QCertificate, dims) -> dict:
    basis = default_basis(dims)
    alpha = np.asarray(cert.alpha, dtype=complex)
    return {
        "dims": list(dims),
        "basis": basis.name,
        "alpha": {"re": alpha.real.tolist(), "im": alpha.imag.tolist()},
        "P": matrix_to_json(cert.P),
    }


def certificate_from_json(obj: dict, validate: bool = True) -> QCertificate:
    """Rebuild ``Q = alpha alpha^dag``; with ``validate`` re-check it against ``P``."""
    dims = _dims(obj, "certificate")
    if len(dims) != 2:
        raise ValueError("certificate: 'dims' must have two entries")
    basis = default_basis(dims)
    if obj.get("basis") != basis.name:
        raise ValueError(f"certificate: basis {obj.get('basis')!r} is not the default {basis.name!r} basis for dims {list(dims)}")
    try:
        alpha = np.asarray(obj["alpha"]["re"], float) + 1j * np.asarray(obj["alpha"].get("im", 0.0), float)
    except (KeyError, TypeError):
        raise ValueError("certificate: missing or malformed 'alpha'") from None
    if alpha.shape != (basis.size,):
        raise ValueError(f"certificate: expected {basis.size} alpha coefficients, got {alpha.shape}")
    P = matrix_from_json(obj.get("P", {}), "certificate P")
    cert = QCertificate(np.outer(alpha, alpha.conj()), alpha, P)
    bad = validate_certificate(cert, basis) if validate else []
    if bad:
        raise ValueError("invalid certificate: " + "; ".join(bad))
    return cert


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValueError(f"{path}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None


def dump_json(obj: dict, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
