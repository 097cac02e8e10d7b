"""Linear entanglement witnesses.

Three constructions are provided:

* from a state with a non-positive partial transpose (``W = |phi><phi|^{T_B}``),
* from a positive map ``Lambda`` that detects a state
  (``W = (I (x) Lambda)^+ (|phi><phi|)``),
* from an arbitrary witness operator, through the operator/map correspondence
  ``eps(X) = Tr_B(E (X^T (x) I))``.

Every witness built here carries a :class:`WitnessForm` recording how it was
obtained.  :mod:`nlwit.nonlinear` reads that form to attach quadratic
corrections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import matcore
from .matcore import PSD_TOL
from .states import DensityOperator, PureState

PROVENANCES = ("npt-eigenvector", "positive-map", "user")


@dataclass(frozen=True, eq=False)
class WitnessForm:
    """``W = scale * adjoint(|phi><phi|)``.

    ``adjoint`` maps operators on the space of ``phi`` back to operators on the
    state space.  It is the adjoint of a positive, trace non-increasing map, so
    quadratic terms ``adjoint(|phi><psi|)`` give valid corrections.
    """

    adjoint: Callable[[np.ndarray], np.ndarray]
    phi: PureState
    scale: float = 1.0


@dataclass(frozen=True, eq=False)
class LinearWitness:
    W: np.ndarray
    dims: tuple[int, ...]
    provenance: str = "user"
    form: WitnessForm | None = None
    eigenvalue: float | None = None

    def __post_init__(self):
        W = matcore.as_cmatrix(self.W)
        n = int(np.prod(self.dims))
        if W.shape != (n, n):
            raise ValueError(f"witness of shape {W.shape} does not match dims {list(self.dims)}")
        W = matcore.hermitize(W)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def phi(self) -> PureState | None:
        return None if self.form is None else self.form.phi


def evaluate(wit: LinearWitness, rho: DensityOperator) -> float:
    """``Tr(W rho)`` (imaginary round-off discarded)."""
    if tuple(wit.dims) != tuple(rho.dims):
        raise ValueError(f"witness dims {wit.dims} do not match state dims {rho.dims}")
    return matcore.expect(wit.W, rho.mat).real


def pt_form(phi: PureState) -> WitnessForm:
    dims = phi.dims
    return WitnessForm(lambda X: matcore.partial_transpose(X, dims), phi, 1.0)


def witness_from_phi(phi: PureState, provenance: str = "npt-eigenvector") -> LinearWitness:
    """``W = |phi><phi|^{T_B}``."""
    W = matcore.partial_transpose(phi.projector(), phi.dims)
    return LinearWitness(W, phi.dims, provenance, pt_form(phi))


def witness_from_npt(rho: DensityOperator, tol: float = PSD_TOL):
    """Witness from the most negative eigenvector of the partial transpose.

    Returns
    -------
    (LinearWitness, float, PureState)
        The witness, the eigenvalue ``lambda_-`` (equal to ``Tr(W rho)``) and
        the eigenvector ``phi``.
    """
    lam, vec = matcore.min_eig(rho.pt)
    if lam >= -tol:
        raise ValueError("no NPT witness exists for this state (partial transpose is PSD)")
    phi = PureState.normalized(vec, rho.pair)
    wit = witness_from_phi(phi)
    wit = LinearWitness(wit.W, wit.dims, "npt-eigenvector", wit.form, lam)
    return wit, lam, phi


# Pauli readout


def pauli_decompose(M, tol: float = 1e-12):
    """Expand a Hermitian operator on ``n`` qubits in Pauli words.

    Returns a list of ``(coefficient, word)`` pairs such as ``(0.25, "XX")``,
    in lexicographic ``I < X < Y < Z`` order, omitting ``|coefficient| < tol``.
    """
    M = matcore.hermitize(M)
    n = int(round(np.log2(M.shape[0])))
    if 2**n != M.shape[0]:
        raise ValueError(f"dimension {M.shape[0]} is not a power of two")
    terms = []
    for word in itertools.product("IXYZ", repeat=n):
        op = matcore.kron(*(matcore.PAULI[c] for c in word))
        c = matcore.expect(op, M).real / 2**n
        if abs(c) >= tol:
            terms.append((c, "".join(word)))
    return terms


def pauli_vector(M, n: int) -> np.ndarray:
    """All ``4**n`` Pauli coefficients of ``M`` (complex for non-Hermitian ``M``)."""
    M = matcore.as_cmatrix(M)
    return np.array(
        [
            matcore.expect(matcore.kron(*(matcore.PAULI[c] for c in word)), M) / 2**n
            for word in itertools.product("IXYZ", repeat=n)
        ]
    )


def pauli_words(n: int) -> list[str]:
    return ["".join(w) for w in itertools.product("IXYZ", repeat=n)]


def pauli_reconstruct(terms) -> np.ndarray:
    out = None
    for c, word in terms:
        op = c * matcore.kron(*(matcore.PAULI[ch] for ch in word))
        out = op if out is None else out + op
    return out


def format_pauli(terms, digits: int = 6) -> str:
    parts = []
    for c, word in terms:
        label = " x ".join({"I": "1", "X": "sx", "Y": "sy", "Z": "sz"}[ch] for ch in word)
        parts.append(f"{c:+.{digits}g} {label}")
    return " ".join(parts) if parts else "0"


# operator/map correspondence


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Linear map ``B(C^d_in) -> B(C^d_out)`` stored through its operator ``E``.

    ``E`` acts on ``C^d_in (x) C^d_out`` and the map is
    ``eps(X) = Tr_in(E (X^T (x) I_out))``.
    """

    choi: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        choi = matcore.as_cmatrix(self.choi)
        n = self.d_in * self.d_out
        if choi.shape != (n, n):
            raise ValueError(f"operator of shape {choi.shape} is not {n}x{n}")
        object.__setattr__(self, "choi", choi)

    def __call__(self, X) -> np.ndarray:
        X = matcore.as_cmatrix(X)
        if X.shape != (self.d_in, self.d_in):
            raise ValueError(f"map expects {self.d_in}x{self.d_in} input, got {X.shape}")
        E = self.choi.reshape(self.d_in, self.d_out, self.d_in, self.d_out)
        return np.einsum("bcBC,bB->cC", E, X)

    @property
    def hermiticity_preserving(self) -> bool:
        return matcore.hermiticity_defect(self.choi) <= matcore.HERM_TOL

    def matrix(self) -> np.ndarray:
        """Matrix of the map in the Hermitian orthonormal bases of input and output."""
        G_in = matcore.gell_mann_basis(self.d_in)
        G_out = matcore.gell_mann_basis(self.d_out)
        images = [self(G) for G in G_in]
        return np.array([[matcore.trace_inner(H, Y) for Y in images] for H in G_out])

    def adjoint(self) -> "LinearMap":
        """Adjoint with respect to ``Tr(X^dag Y)``: conjugate transpose of :meth:`matrix`."""
        Mh = self.matrix().conj().T
        G_in = matcore.gell_mann_basis(self.d_in)
        G_out = matcore.gell_mann_basis(self.d_out)

        def adj(Y):
            y = np.array([matcore.trace_inner(H, Y) for H in G_out])
            return sum(c * G for c, G in zip(Mh @ y, G_in))

        return LinearMap(operator_from_map(adj, self.d_out), self.d_out, self.d_in)

    def scaled(self, factor: float) -> "LinearMap":
        return LinearMap(self.choi * factor, self.d_in, self.d_out)


def map_from_operator(E, d_in: int, d_out: int | None = None) -> LinearMap:
    E = matcore.as_cmatrix(E)
    if d_out is None:
        d_out = E.shape[0] // d_in
    return LinearMap(E, d_in, d_out)


def operator_from_map(eps: Callable, d_in: int) -> np.ndarray:
    """``E = (I (x) eps)(sum_ij |ii><jj|)``, i.e. ``E[(i,k),(j,l)] = eps(|i><j|)[k,l]``."""
    blocks = {}
    for i in range(d_in):
        for j in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[i, j] = 1.0
            blocks[i, j] = matcore.as_cmatrix(eps(unit))
    d_out = blocks[0, 0].shape[0]
    E = np.zeros((d_in, d_out, d_in, d_out), dtype=complex)
    for (i, j), Y in blocks.items():
        E[i, :, j, :] = Y
    return E.reshape(d_in * d_out, d_in * d_out)


def apply_local(eps: Callable, X, dA: int, d_in: int) -> np.ndarray:
    """``(I_A (x) eps)(X)`` for ``X`` on ``C^dA (x) C^d_in``."""
    X = matcore.as_cmatrix(X).reshape(dA, d_in, dA, d_in)
    blocks = [[matcore.as_cmatrix(eps(X[i, :, j, :])) for j in range(dA)] for i in range(dA)]
    d_out = blocks[0][0].shape[0]
    out = np.zeros((dA, d_out, dA, d_out), dtype=complex)
    for i in range(dA):
        for j in range(dA):
            out[i, :, j, :] = blocks[i][j]
    return out.reshape(dA * d_out, dA * d_out)


def _as_linear_map(eps, d_in: int) -> LinearMap:
    if isinstance(eps, LinearMap):
        if eps.d_in != d_in:
            raise ValueError(f"map acts on dimension {eps.d_in}, state factor has {d_in}")
        return eps
    E = operator_from_map(eps, d_in)
    return LinearMap(E, d_in, E.shape[0] // d_in)


def trace_normalized(lm: LinearMap) -> LinearMap:
    """Rescale so the map is trace non-increasing on positive inputs.

    For a positive map ``Tr eps(X) = Tr(eps^+(I) X)``, so dividing by the largest
    eigenvalue of ``eps^+(I)`` is the tight normalization.
    """
    c = np.linalg.norm(lm.adjoint()(np.eye(lm.d_out)), 2)
    if c <= 1e-14:
        raise ValueError("map annihilates the identity; cannot normalize")
    return lm.scaled(1 / c)


def witness_from_positive_map(eps, rho: DensityOperator, tol: float = PSD_TOL) -> LinearWitness:
    """Witness ``(I_A (x) Lambda)^+ (|phi><phi|)`` for a positive map acting on Bob's side.

    ``eps`` is a :class:`LinearMap` or any callable on ``dB x dB`` matrices.
    The map is first normalized with :func:`trace_normalized`; ``phi`` is the
    eigenvector for the smallest eigenvalue ``lambda_-`` of
    ``(I (x) Lambda)(rho)``, and ``Tr(W rho) = lambda_-``.
    """
    dA, dB = rho.pair
    lm = trace_normalized(_as_linear_map(eps, dB))
    image = apply_local(lm, rho.mat, dA, dB)
    lam, vec = matcore.min_eig(image)
    if lam >= -tol:
        raise ValueError("map does not detect this state ((I x Lambda)(rho) is PSD)")
    adj = lm.adjoint()
    out_dims = (dA, lm.d_out)
    phi = PureState.normalized(vec, out_dims)

    def adjoint(Y):
        return apply_local(adj, Y, dA, lm.d_out)

    W = adjoint(phi.projector())
    return LinearWitness(W, rho.pair, "positive-map", WitnessForm(adjoint, phi, 1.0), lam)


def correspondence_form(W, dims) -> WitnessForm:
    """Write an arbitrary bipartite witness as ``scale * adjoint(|phi><phi|)``.

    With ``eps`` the map of ``W`` (so ``W = (I (x) eps)(sum |ii><jj|)``) and
    ``Lambda = eps^+``, the adjoint of ``I (x) Lambda`` is ``I (x) eps``; ``phi``
    is the normalized maximally entangled state on ``A (x) A``.
    """
    dA, dB = dims
    eps = map_from_operator(W, dA, dB)
    # Lambda = eps^+ is trace non-increasing iff eps(I) <= I
    c = np.linalg.norm(eps(np.eye(dA)), 2)
    if c <= 1e-14:
        raise ValueError("witness has vanishing partial trace; cannot normalize its map")
    eps = eps.scaled(1 / c)
    phi = PureState(np.eye(dA, dtype=complex).ravel() / np.sqrt(dA), (dA, dA))

    def adjoint(Y):
        return apply_local(eps, Y, dA, dA)

    return WitnessForm(adjoint, phi, dA * c)


def pt_rank_one(W, dims, tol: float = 1e-9):
    """If ``W = c |phi><phi|^{T_B}`` with ``c > 0`` return ``(c, phi)``, else ``None``."""
    Wpt = matcore.partial_transpose(W, dims)
    w, v = matcore.herm_eig(Wpt)
    if w[0] <= tol or np.any(np.abs(w[1:]) > tol * max(1.0, w[0])):
        return None
    return float(w[0]), PureState.normalized(v[:, 0], dims)


def form_of(wit: LinearWitness) -> WitnessForm:
    """The stored form, or one derived from the operator (partial-transpose form preferred)."""
    if wit.form is not None:
        return wit.form
    if len(wit.dims) != 2:
        raise ValueError("only bipartite witnesses can be put in map form")
    hit = pt_rank_one(wit.W, wit.dims)
    if hit is not None:
        c, phi = hit
        f = pt_form(phi)
        return WitnessForm(f.adjoint, phi, c)
    return correspondence_form(wit.W, wit.dims)


# standard maps


def transposition(X) -> np.ndarray:
    return matcore.as_cmatrix(X).T.copy()


def reduction(X) -> np.ndarray:
    """``Tr(X) I - X``; positive but not completely positive."""
    X = matcore.as_cmatrix(X)
    return np.trace(X) * np.eye(X.shape[0]) - X


def identity_map(X) -> np.ndarray:
    return matcore.as_cmatrix(X).copy()


def choi_map(X) -> np.ndarray:
    """Choi's positive indecomposable map on qutrits."""
    X = matcore.as_cmatrix(X)
    if X.shape != (3, 3):
        raise ValueError("Choi map acts on 3x3 matrices")
    out = -X.copy()
    out[0, 0] = X[0, 0] + X[2, 2]
    out[1, 1] = X[1, 1] + X[0, 0]
    out[2, 2] = X[2, 2] + X[1, 1]
    return out
