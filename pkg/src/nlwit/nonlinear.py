"""Nonlinear improvements of linear witnesses.

A nonlinear witness has the shape

    F(rho) = Tr(W rho) - sum_i w_i |Tr(K_i rho)|^2 ,   w_i > 0,

and is evaluated through the Hermitian split ``K = H + iA`` so that it only
depends on expectation values of observables:
``|Tr(K rho)|^2 = Tr(H rho)^2 + Tr(A rho)^2``.

For ``W = |phi><phi|^{T_B}`` the operators are ``K_i = (|phi><psi_i|)^{T_B}``.
With one partner ``psi`` and weight ``1/s(psi)`` (``s`` = largest squared
Schmidt coefficient) the result is the single-term witness built by
:func:`improve_f1`; with a full orthonormal basis and unit weights it is
:func:`improve_f2`.  Witnesses obtained from positive maps or from the
operator/map correspondence are handled by :func:`improve`, which replaces the
partial transpose by the adjoint map stored on the witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .states import DensityOperator, PureState, max_schmidt_sq, schmidt_decompose
from .witness import LinearWitness, form_of, pauli_vector, pauli_words, witness_from_phi

FAMILIES = ("F1", "F2", "covariance", "custom")

# strict inequalities in the detection conditions
DETECT_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class QuadraticTerm:
    xtb: np.ndarray
    weight: float

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"quadratic weight must be positive, got {self.weight}")
        object.__setattr__(self, "xtb", matcore.as_cmatrix(self.xtb))

    @property
    def H(self) -> np.ndarray:
        return (self.xtb + self.xtb.conj().T) / 2

    @property
    def A(self) -> np.ndarray:
        return (self.xtb - self.xtb.conj().T) / 2j

    def value(self, rho) -> float:
        """``weight * (<H>^2 + <A>^2)``."""
        mat = rho.mat if isinstance(rho, DensityOperator) else rho
        h = matcore.expect(self.H, mat).real
        a = matcore.expect(self.A, mat).real
        return self.weight * (h * h + a * a)


@dataclass(frozen=True, eq=False)
class NonlinearWitness:
    linear: LinearWitness
    terms: tuple[QuadraticTerm, ...] = field(default_factory=tuple)
    family: str = "custom"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def dims(self):
        return self.linear.dims

    def __call__(self, rho: DensityOperator) -> float:
        return evaluate_nl(self, rho)


def evaluate_nl(F: NonlinearWitness, rho: DensityOperator) -> float:
    if tuple(F.dims) != tuple(rho.dims):
        raise ValueError(f"witness dims {F.dims} do not match state dims {rho.dims}")
    value = matcore.expect(F.linear.W, rho.mat).real
    for t in F.terms:
        value -= t.value(rho)
    return value


def _pt(X, dims):
    return matcore.partial_transpose(X, dims)


def improve_f1(phi: PureState, psi: PureState) -> NonlinearWitness:
    """``<W> - |<(|phi><psi|)^{T_B}>|^2 / s(psi)`` for ``W = |phi><phi|^{T_B}``."""
    if tuple(phi.dims) != tuple(psi.dims):
        raise ValueError("phi and psi live on different spaces")
    X = np.outer(phi.vec, psi.vec.conj())
    term = QuadraticTerm(_pt(X, phi.dims), 1.0 / max_schmidt_sq(psi))
    return NonlinearWitness(witness_from_phi(phi), (term,), "F1")


def _check_orthonormal(vecs, n, tol=1e-10):
    V = np.column_stack([np.asarray(v, dtype=complex).ravel() for v in vecs])
    if V.shape != (n, n):
        raise ValueError(f"basis needs {n} vectors of length {n}, got shape {V.shape}")
    err = np.max(np.abs(V.conj().T @ V - np.eye(n)))
    if err > tol:
        raise ValueError(f"basis is not orthonormal (max Gram deviation {err:.3e})")
    return V


def improve_f2(phi: PureState, basis) -> NonlinearWitness:
    """``<W> - sum_i |<(|phi><psi_i|)^{T_B}>|^2`` over a complete orthonormal basis."""
    vecs = [b.vec if isinstance(b, PureState) else b for b in basis]
    V = _check_orthonormal(vecs, phi.vec.size)
    terms = tuple(
        QuadraticTerm(_pt(np.outer(phi.vec, V[:, i].conj()), phi.dims), 1.0) for i in range(V.shape[1])
    )
    return NonlinearWitness(witness_from_phi(phi), terms, "F2")


def completion_basis(phi: PureState) -> list[np.ndarray]:
    """An orthonormal basis whose first element is ``phi``."""
    n = phi.vec.size
    M = np.column_stack([phi.vec, np.eye(n, dtype=complex)])
    Q, R = np.linalg.qr(M)
    Q = Q[:, :n] * (np.sign(R[0, 0].real) or 1.0)
    Q[:, 0] = phi.vec
    return [Q[:, i] for i in range(n)]


def optimal_f1_partner(rho: DensityOperator, phi: PureState) -> PureState:
    """Partner ``psi`` that makes the single-term correction as large as possible on ``rho``.

    Writing ``v = rho^{T_B} |phi>`` with Schmidt form ``sum_k s_k |a_k b_k>``, the
    ratio ``|<psi|v>|^2 / s(psi)`` is maximized by the flat superposition
    ``sum_{s_k > 0} |a_k b_k>``, where it equals ``(sum_k s_k)^2``.
    """
    v = rho.pt @ phi.vec
    if np.linalg.norm(v) < 1e-15:
        return phi
    sf = schmidt_decompose(v, rho.pair)
    keep = sf.coefficients > 1e-12 * sf.coefficients[0]
    vec = np.einsum("as,bs->ab", sf.left[:, keep], sf.right[:, keep]).ravel()
    return PureState.normalized(vec, rho.pair)


def improve(wit: LinearWitness, kind: str = "F2", psi=None, basis=None) -> NonlinearWitness:
    """Attach quadratic corrections to any bipartite witness.

    The witness is written as ``W = c * L^+(|phi><phi|)`` (see
    :func:`nlwit.witness.form_of`); the corrections are
    ``c * w_i |<L^+(|phi><psi_i|)>|^2`` with ``w = 1/s(psi)`` for ``kind="F1"``
    and ``w = 1`` over a full basis (default: completion of ``phi``) for
    ``kind="F2"``.  The linear part of the result is ``wit`` itself.
    """
    form = form_of(wit)
    phi = form.phi
    if kind == "F1":
        if psi is None:
            raise ValueError("F1 improvement needs a partner state psi")
        psi = psi if isinstance(psi, PureState) else PureState.normalized(psi, phi.dims)
        partners = [psi.vec]
        weights = [1.0 / max_schmidt_sq(psi)]
    elif kind == "F2":
        vecs = basis if basis is not None else completion_basis(phi)
        vecs = [b.vec if isinstance(b, PureState) else b for b in vecs]
        V = _check_orthonormal(vecs, phi.vec.size)
        partners = [V[:, i] for i in range(V.shape[1])]
        weights = [1.0] * len(partners)
    else:
        raise ValueError(f"kind must be 'F1' or 'F2', not {kind!r}")
    terms = []
    for p, w in zip(partners, weights):
        K = form.adjoint(np.outer(phi.vec, np.conj(p)))
        if np.max(np.abs(K)) > 1e-15:
            terms.append(QuadraticTerm(K, form.scale * w))
    return NonlinearWitness(wit, tuple(terms), kind)


# detection conditions


def _condition_inputs(rho: DensityOperator, phi: PureState):
    if tuple(rho.dims) != tuple(phi.dims):
        raise ValueError(f"state dims {rho.dims} do not match phi dims {phi.dims}")
    sigma = rho.pt
    v = sigma @ phi.vec
    lhs = float(np.vdot(phi.vec, v).real)
    return sigma, v, lhs


def detect_condition_f1(rho: DensityOperator, phi: PureState):
    """``<phi|rho^{T_B}|phi> < [Tr sqrt(Tr_A(rho^{T_B}|phi><phi|rho^{T_B}))]^2``.

    Returns ``(detected, lhs, rhs)``.
    """
    sigma, v, lhs = _condition_inputs(rho, phi)
    # Tr sqrt(Tr_A |v><v|) is the sum of the Schmidt coefficients of v; the SVD
    # avoids square roots of round-off eigenvalues when Tr_A |v><v| is singular
    dA, dB = rho.pair
    rhs = float(np.linalg.svd(v.reshape(dA, dB), compute_uv=False).sum()) ** 2
    return bool(lhs < rhs - DETECT_MARGIN), lhs, rhs


def detect_condition_f2(rho: DensityOperator, phi: PureState):
    """``<phi|rho^{T_B}|phi> < <phi|(rho^{T_B})^2|phi>``; returns ``(detected, lhs, rhs)``."""
    sigma, v, lhs = _condition_inputs(rho, phi)
    rhs = float(np.vdot(v, v).real)
    return bool(lhs < rhs - DETECT_MARGIN), lhs, rhs


# Pauli-level description for qubit systems


@dataclass(frozen=True, eq=False)
class PauliForm:
    """``sum_w lin[w] <s_w> - sum_k weight_k (sum_w v_k[w] <s_w>)^2`` on ``n`` qubits.

    ``quad`` is the real symmetric matrix of the subtracted sum of squares; it
    is what two forms are compared on, since a sum of squares can be grouped
    in more than one way.
    """

    n: int
    lin: np.ndarray
    squares: tuple = ()

    @property
    def words(self):
        return pauli_words(self.n)

    @property
    def quad(self) -> np.ndarray:
        q = np.zeros((4**self.n, 4**self.n))
        for weight, v in self.squares:
            q += weight * np.outer(v, v)
        return q

    def evaluate(self, rho: DensityOperator) -> float:
        e = pauli_vector(rho.mat, self.n).real * 2**self.n
        return float(self.lin @ e - sum(w * (v @ e) ** 2 for w, v in self.squares))


def _qubit_count(dims) -> int:
    n = int(round(np.log2(np.prod(dims))))
    if 2**n != int(np.prod(dims)) or any(d & (d - 1) for d in dims):
        raise ValueError(f"Pauli forms need qubit subsystems, got dims {list(dims)}")
    return n


def pauli_form(F: NonlinearWitness) -> PauliForm:
    """Collect a qubit witness into linear Pauli coefficients and weighted squares."""
    n = _qubit_count(F.dims)
    lin = pauli_vector(F.linear.W, n).real
    squares = []
    for t in F.terms:
        for part in (t.H, t.A):
            h = pauli_vector(part, n).real
            if np.max(np.abs(h)) > 1e-14:
                squares.append((t.weight, h))
    return PauliForm(n, lin, tuple(squares))


def form_from_squares(linear: dict, squares, n: int = 2) -> PauliForm:
    """Build a :class:`PauliForm` from ``{word: coeff}`` and ``[(weight, {word: coeff}), ...]``."""
    words = pauli_words(n)
    idx = {w: i for i, w in enumerate(words)}

    def vec(d):
        v = np.zeros(len(words))
        for w, c in d.items():
            v[idx[w]] += c
        return v

    return PauliForm(n, vec(linear), tuple((weight, vec(d)) for weight, d in squares))


# The two published two-qubit examples, typed in from their printed form.
# phi = (|00> + |11>)/sqrt(2); W = (1 + sx sx + sy sy + sz sz)/4.
_W_TERMS = {"II": 0.25, "XX": 0.25, "YY": 0.25, "ZZ": 0.25}

# partner psi = (|01> + |10>)/sqrt(2)
BELL_PAIR_FORM = form_from_squares(
    _W_TERMS,
    [
        (1 / 8, {"XI": 1, "IX": 1}),
        (1 / 8, {"YZ": 1, "ZY": -1}),
    ],
)

# partners = the four Bell states; the printed prefactor 1/16 covers <W>^2 too
BELL_BASIS_FORM = form_from_squares(
    _W_TERMS,
    [
        (1 / 16, {"XI": 1, "IX": 1}),
        (1 / 16, {"YZ": 1, "ZY": -1}),
        (1 / 16, {"YI": 1, "IY": 1}),
        (1 / 16, {"XZ": 1, "ZX": -1}),
        (1 / 16, {"ZI": 1, "IZ": 1}),
        (1 / 16, {"XY": 1, "YX": -1}),
        (1 / 16, _W_TERMS),
    ],
)


def compare_forms(built: PauliForm, reference: PauliForm, tol: float = 1e-12) -> dict:
    """Coefficient-level comparison.  ``mismatches`` lists ``(kind, words, built, ref)``."""
    words = built.words
    mismatches = []
    dl = built.lin - reference.lin
    for i in np.flatnonzero(np.abs(dl) > tol):
        mismatches.append(("linear", words[i], float(built.lin[i]), float(reference.lin[i])))
    dq = built.quad - reference.quad
    for i, j in zip(*np.nonzero(np.abs(dq) > tol)):
        if i <= j:
            mismatches.append(
                ("quadratic", f"{words[i]}*{words[j]}", float(built.quad[i, j]), float(reference.quad[i, j]))
            )
    max_err = float(max(np.max(np.abs(dl)), np.max(np.abs(dq))))
    return {"match": not mismatches, "max_error": max_err, "mismatches": mismatches}


def format_form(form: PauliForm, digits: int = 6) -> str:
    """Render as ``<W> - c1 <O1>^2 - ...`` with each observable scaled to a unit leading coefficient."""
    words = form.words

    def obs(v):
        parts = [f"{c:+.{digits}g} {w}" for c, w in zip(v, words) if abs(c) > 1e-12]
        return " ".join(parts) if parts else "0"

    lines = [f"linear: {obs(form.lin)}"]
    for weight, v in form.squares:
        k = int(np.argmax(np.abs(v)))
        lines.append(f"  - {weight * v[k] ** 2:.{digits}g} * <{obs(v / v[k])}>^2")
    return "\n".join(lines)
