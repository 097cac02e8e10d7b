"""Density operators, pure states, named families and random samplers.

All samplers take a ``seed`` that is either an integer or a
``numpy.random.Generator``; equal integer seeds give bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .matcore import PSD_TOL


def _dims_tuple(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) < 1 or any(d < 1 for d in dims):
        raise ValueError(f"invalid subsystem dimensions {dims}")
    return dims


def density_violations(mat, dims, herm_tol=1e-10, trace_tol=1e-10, psd_tol=PSD_TOL) -> list[str]:
    """Names of the density-operator invariants that ``mat`` breaks (empty if valid)."""
    mat = np.asarray(mat)
    n = int(np.prod(dims))
    if mat.ndim != 2 or mat.shape != (n, n):
        return [f"shape {mat.shape} does not match dims {list(dims)}"]
    problems = []
    defect = matcore.hermiticity_defect(mat)
    if defect > herm_tol:
        problems.append(f"not Hermitian (max |M - M^dag| = {defect:.3e})")
    tr = np.trace(mat)
    if abs(tr - 1) > trace_tol:
        problems.append(f"trace is {tr.real:.12g}{tr.imag:+.3g}j, not 1")
    if defect <= herm_tol:
        lo = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2)[0])
        if lo < -psd_tol:
            problems.append(f"not positive semidefinite (min eigenvalue {lo:.3e})")
    return problems


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A quantum state on ``C^d1 (x) C^d2 (x) ...``; validated on construction."""

    mat: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _dims_tuple(self.dims)
        mat = np.array(self.mat, dtype=complex)
        problems = density_violations(mat, dims)
        if problems:
            raise ValueError("invalid density operator: " + "; ".join(problems))
        mat = (mat + mat.conj().T) / 2
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def pair(self) -> tuple[int, int]:
        """``(dA, dB)`` of a bipartite state."""
        if len(self.dims) != 2:
            raise ValueError(f"state has {len(self.dims)} parties, expected 2")
        return self.dims

    @property
    def pt(self) -> np.ndarray:
        return matcore.partial_transpose(self.mat, self.pair)

    def expect(self, op) -> complex:
        return matcore.expect(op, self.mat)


@dataclass(frozen=True, eq=False)
class PureState:
    vec: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _dims_tuple(self.dims)
        vec = np.array(self.vec, dtype=complex).ravel()
        if vec.size != int(np.prod(dims)):
            raise ValueError(f"vector of length {vec.size} does not match dims {list(dims)}")
        norm = np.linalg.norm(vec)
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"state vector has norm {norm:.15g}, expected 1")
        vec.setflags(write=False)
        object.__setattr__(self, "vec", vec)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, vec, dims):
        vec = np.asarray(vec, dtype=complex).ravel()
        return cls(vec / np.linalg.norm(vec), dims)

    def projector(self) -> np.ndarray:
        return matcore.projector(self.vec)

    def density(self) -> DensityOperator:
        return DensityOperator(self.projector(), self.dims)


@dataclass(frozen=True, eq=False)
class SchmidtForm:
    coefficients: np.ndarray
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("s,as,bs->ab", self.coefficients, self.left, self.right).ravel()


def _vec_and_dims(psi, dims=None):
    if isinstance(psi, PureState):
        return psi.vec, psi.dims
    if dims is None:
        raise ValueError("dims are required for a bare vector")
    return np.asarray(psi, dtype=complex).ravel(), _dims_tuple(dims)


def schmidt_decompose(psi, dims=None) -> SchmidtForm:
    """Schmidt decomposition via the SVD of the ``dA x dB`` coefficient matrix.

    Left vectors are the columns of ``left``; right vectors the columns of ``right``.
    """
    vec, dims = _vec_and_dims(psi, dims)
    dA, dB = dims
    U, s, Vh = np.linalg.svd(vec.reshape(dA, dB))
    r = len(s)
    return SchmidtForm(s, U[:, :r], Vh[:r, :].T)


def max_schmidt_sq(psi, dims=None) -> float:
    vec, dims = _vec_and_dims(psi, dims)
    dA, dB = dims
    s = np.linalg.svd(vec.reshape(dA, dB), compute_uv=False)
    return float(s[0] ** 2 / np.vdot(vec, vec).real)


def is_ppt(rho: DensityOperator, tol: float = PSD_TOL) -> bool:
    return matcore.is_psd(rho.pt, tol)


def min_pt_eigenvalue(rho: DensityOperator) -> float:
    return matcore.min_eig(rho.pt)[0]


# named states

_S = 1 / np.sqrt(2)


def bell_states() -> tuple[PureState, PureState, PureState, PureState]:
    """``(phi+, phi-, psi+, psi-)``."""
    k = matcore.ket
    vecs = [
        _S * (k(0, 0) + k(1, 1)),
        _S * (k(0, 0) - k(1, 1)),
        _S * (k(0, 1) + k(1, 0)),
        _S * (k(0, 1) - k(1, 0)),
    ]
    return tuple(PureState(v, (2, 2)) for v in vecs)


def max_entangled(d: int) -> PureState:
    """``sum_i |ii> / sqrt(d)`` on ``d x d``."""
    v = np.eye(d, dtype=complex).ravel() / np.sqrt(d)
    return PureState(v, (d, d))


def singlet() -> DensityOperator:
    return bell_states()[3].density()


def maximally_mixed(dims) -> DensityOperator:
    n = int(np.prod(dims))
    return DensityOperator(np.eye(n) / n, dims)


def werner(p: float) -> DensityOperator:
    """``p |psi-><psi-| + (1 - p) I/4``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner parameter must lie in [0, 1], got {p}")
    return DensityOperator(p * bell_states()[3].projector() + (1 - p) * np.eye(4) / 4, (2, 2))


# samplers


def rng_from(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _ginibre(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_pure(dims, seed=None) -> PureState:
    rng = rng_from(seed)
    dims = _dims_tuple(dims)
    return PureState.normalized(_ginibre(rng, int(np.prod(dims))), dims)


def random_density(dims, seed=None) -> DensityOperator:
    """Hilbert-Schmidt random state ``G G^dag / Tr(G G^dag)`` for square Ginibre ``G``."""
    rng = rng_from(seed)
    dims = _dims_tuple(dims)
    n = int(np.prod(dims))
    G = _ginibre(rng, (n, n))
    rho = G @ G.conj().T
    return DensityOperator(rho / np.trace(rho).real, dims)


def random_product_pure(dims, seed=None) -> PureState:
    rng = rng_from(seed)
    dims = _dims_tuple(dims)
    vec = np.ones(1, dtype=complex)
    for d in dims:
        local = _ginibre(rng, d)
        vec = np.kron(vec, local / np.linalg.norm(local))
    return PureState.normalized(vec, dims)


def default_terms(dims) -> int:
    dims = _dims_tuple(dims)
    return 8 if dims == (2, 2) else 2 * int(np.prod(dims))


def random_separable(dims, terms: int | None = None, seed=None) -> DensityOperator:
    """Mixture of ``terms`` random product projectors with Dirichlet(1, ..., 1) weights.

    Works for any number of parties, so it doubles as the fully-separable
    oracle for three qubits.
    """
    dims = _dims_tuple(dims)
    terms = default_terms(dims) if terms is None else int(terms)
    if terms < 1:
        raise ValueError("terms must be >= 1")
    rng = rng_from(seed)
    p = rng.dirichlet(np.ones(terms))
    n = int(np.prod(dims))
    rho = np.zeros((n, n), dtype=complex)
    for pk in p:
        v = random_product_pure(dims, rng).vec
        rho += pk * np.outer(v, v.conj())
    return DensityOperator(rho, dims)


def random_mixture(states, seed=None):
    """Random convex combination of the given density operators; returns ``(rho, weights)``."""
    rng = rng_from(seed)
    p = rng.dirichlet(np.ones(len(states)))
    mat = sum(pk * s.mat for pk, s in zip(p, states))
    return DensityOperator(mat, states[0].dims), p


def haar_unitary(d: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    Z = _ginibre(rng, (d, d))
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph
