"""Second-moment (covariance-type) matrices and Q certificates.

For local operator bases ``{A_k}``, ``{B_k}`` the matrices are indexed by pairs
``(i1, i2)`` flattened as ``r = i1 * nB + i2`` with ``nB = len(B_ops)``:

* ``eta[(i1,i2),(j1,j2)]    = <A_i1 A_j1 (x) B_i2 B_j2>``
* ``eta_pt[(i1,i2),(j1,j2)] = <A_i1 A_j1 (x) B_j2 B_i2>``
* ``chi[(i1,i2),(j1,j2)]    = <A_i1 (x) B_i2> <A_j1 (x) B_j2>``
* ``gamma = eta_pt - chi``

A certificate ``Q >= 0`` reconstructs a target ``P >= 0`` as
``P = sum Q[i,j] O_i O_j`` with ``O_i = A_i1 (x) B_i2^T``.  The functional is
the entrywise pairing ``sum_ij Q[i,j] gamma[i,j]``, which equals
``Tr(P^{T_B} rho) - sum_ij Q[i,j] chi[i,j]`` and is nonnegative on PPT states.

Rank-one certificates ``Q = alpha alpha^dag`` come from ``X = sqrt(P) V`` with
``V`` unitary and ``X = sum_i alpha_i O_i``; :func:`optimize_q` searches this
family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import matcore
from .matcore import PSD_TOL, RECON_TOL
from .states import DensityOperator, rng_from

DEFAULT_BUDGET = 2000
DEFAULT_REFINE = 200


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    A_ops: tuple
    B_ops: tuple
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "A_ops", tuple(matcore.as_cmatrix(a) for a in self.A_ops))
        object.__setattr__(self, "B_ops", tuple(matcore.as_cmatrix(b) for b in self.B_ops))

    @property
    def dims(self) -> tuple[int, int]:
        return self.A_ops[0].shape[0], self.B_ops[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.A_ops) * len(self.B_ops)

    def stacks(self):
        return np.array(self.A_ops), np.array(self.B_ops)

    def products(self) -> np.ndarray:
        """``O_i = A_i1 (x) B_i2^T`` stacked in flattened order."""
        A, B = self.stacks()
        return np.array([np.kron(a, b.T) for a in A for b in B])

    def is_orthonormal(self, tol: float = 1e-10) -> bool:
        return all(_gram_error(ops) <= tol for ops in (self.A_ops, self.B_ops))

    def transformed(self, C, D) -> "OperatorBasis":
        """``A'_k = sum_l C[k,l] A_l``, ``B'_k = sum_l D[k,l] B_l``."""
        C = np.asarray(C)
        D = np.asarray(D)
        for M, ops, tag in ((C, self.A_ops, "C"), (D, self.B_ops, "D")):
            if M.shape != (len(ops), len(ops)):
                raise ValueError(f"{tag} must be {len(ops)}x{len(ops)}")
            if np.linalg.cond(M) > 1e12:
                raise ValueError(f"{tag} is singular")
        A, B = self.stacks()
        return OperatorBasis(np.einsum("kl,lab->kab", C, A), np.einsum("kl,lab->kab", D, B), self.name + "'")


def _gram_error(ops) -> float:
    G = np.array([[matcore.trace_inner(a, b) for b in ops] for a in ops])
    return float(np.max(np.abs(G - np.eye(len(ops)))))


def default_basis(dims) -> OperatorBasis:
    """Normalized Pauli (qubits) or generalized Gell-Mann operators, identity first."""
    dA, dB = dims
    name = "pauli" if (dA, dB) == (2, 2) else "gell-mann"
    return OperatorBasis(matcore.gell_mann_basis(dA), matcore.gell_mann_basis(dB), name)


def _matrix_of(rho):
    return rho.mat if isinstance(rho, DensityOperator) else matcore.as_cmatrix(rho)


def _check_dims(mat, basis):
    dA, dB = basis.dims
    if mat.shape != (dA * dB, dA * dB):
        raise ValueError(f"state of shape {mat.shape} does not match basis dims {dA}x{dB}")


def _second_moments(rho, basis, swap_b: bool) -> np.ndarray:
    mat = _matrix_of(rho)
    _check_dims(mat, basis)
    dA, dB = basis.dims
    A, B = basis.stacks()
    AA = np.einsum("iab,jbc->ijac", A, A)
    BB = np.einsum("iab,jbc->ijac", B, B)
    if swap_b:
        BB = BB.transpose(1, 0, 2, 3)
    R = mat.reshape(dA, dB, dA, dB)
    # Tr(rho (M (x) N)) = sum R[a,b,c,d] M[c,a] N[d,b]
    eta = np.einsum("abcd,ijca,kldb->ikjl", R, AA, BB, optimize=True)
    n = basis.size
    return eta.reshape(n, n)


def eta(rho, basis: OperatorBasis) -> np.ndarray:
    """``<A_i1 A_j1 (x) B_i2 B_j2>``; ``rho`` may be a raw matrix (e.g. a partial transpose)."""
    return _second_moments(rho, basis, swap_b=False)


def eta_pt(rho, basis: OperatorBasis) -> np.ndarray:
    return _second_moments(rho, basis, swap_b=True)


def first_moments(rho, basis: OperatorBasis) -> np.ndarray:
    """``<A_i1 (x) B_i2>`` in flattened order."""
    mat = _matrix_of(rho)
    _check_dims(mat, basis)
    dA, dB = basis.dims
    A, B = basis.stacks()
    R = mat.reshape(dA, dB, dA, dB)
    return np.einsum("abcd,ica,kdb->ik", R, A, B).ravel()


def chi(rho, basis: OperatorBasis) -> np.ndarray:
    m = first_moments(rho, basis)
    return np.outer(m, m)


def gamma(rho, basis: OperatorBasis) -> np.ndarray:
    return eta_pt(rho, basis) - chi(rho, basis)


def symmetrized_min_eig(M) -> float:
    M = np.asarray(M)
    return float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])


# certificates


@dataclass(frozen=True, eq=False)
class QCertificate:
    Q: np.ndarray
    alpha: np.ndarray | None
    P: np.ndarray
    V: np.ndarray | None = None


def _coefficient_solver(basis: OperatorBasis):
    """Map ``X -> alpha`` with ``X = sum alpha_i O_i`` (Gram solve if not orthonormal)."""
    O = basis.products()
    n = O.shape[0]
    T = O.reshape(n, -1).conj()
    if basis.is_orthonormal():
        return lambda Xflat: Xflat @ T.T
    G = T @ T.conj().T
    Ginv = np.linalg.inv(G)
    return lambda Xflat: (Xflat @ T.T) @ Ginv.T


def reconstruct(Q, basis: OperatorBasis) -> np.ndarray:
    """``sum_ij Q[i,j] O_i O_j``."""
    O = basis.products()
    return np.einsum("ij,iab,jbc->ac", Q, O, O, optimize=True)


def certificate_residual(cert: QCertificate, basis: OperatorBasis) -> float:
    return float(np.max(np.abs(reconstruct(cert.Q, basis) - cert.P)))


def validate_certificate(cert: QCertificate, basis: OperatorBasis) -> list[str]:
    """Names of violated certificate invariants (empty when valid)."""
    problems = []
    if matcore.hermiticity_defect(cert.Q) > 1e-9:
        problems.append("Q is not Hermitian")
    elif symmetrized_min_eig(cert.Q) < -PSD_TOL:
        problems.append("Q is not positive semidefinite")
    res = certificate_residual(cert, basis)
    if res > RECON_TOL:
        problems.append(f"reconstruction residual {res:.3e} exceeds {RECON_TOL:g}")
    return problems


def _check_target(P):
    P = matcore.as_cmatrix(P)
    if not matcore.is_psd(P):
        raise ValueError("target P is not positive semidefinite")
    return P


def q_from_unitary(P, V, basis: OperatorBasis) -> QCertificate:
    """Rank-one certificate from ``X = sqrt(P) V``, ``Q = alpha alpha^dag``."""
    P = _check_target(P)
    V = matcore.as_cmatrix(V)
    if V.shape != P.shape or np.max(np.abs(V.conj().T @ V - np.eye(V.shape[0]))) > 1e-10:
        raise ValueError("V is not a unitary of the same size as P")
    X = matcore.psd_sqrt(P) @ V
    alpha = _coefficient_solver(basis)(X.ravel())
    cert = QCertificate(np.outer(alpha, alpha.conj()), alpha, P, V)
    res = certificate_residual(cert, basis)
    if res > RECON_TOL:
        raise ValueError(f"certificate does not reconstruct P (residual {res:.3e})")
    return cert


def q_from_expansion(P, basis: OperatorBasis) -> QCertificate:
    """Certificate from expanding ``sqrt(P)`` itself (``X = P`` when ``P`` is a projector).

    For ``P = |phi><phi|`` its functional is ``<W> - <W>^2``, no stronger than ``W``.
    """
    P = _check_target(P)
    return q_from_unitary(P, np.eye(P.shape[0]), basis)


def pairing(G, Q) -> float:
    """Entrywise ``sum_ij Q[i,j] G[i,j]`` (real part)."""
    return float(np.sum(np.asarray(Q) * np.asarray(G)).real)


def functional(rho, cert: QCertificate, basis: OperatorBasis) -> float:
    """Certificate functional evaluated through ``gamma``; nonnegative on PPT states."""
    return pairing(gamma(rho, basis), cert.Q)


def functional_parts(rho, cert: QCertificate, basis: OperatorBasis) -> tuple[float, float]:
    """``(Tr(P^{T_B} rho), sum Q chi)``; the functional is their difference."""
    mat = _matrix_of(rho)
    dA, dB = basis.dims
    lin = matcore.expect(matcore.partial_transpose(cert.P, (dA, dB)), mat).real
    return lin, pairing(chi(rho, basis), cert.Q)


def rank_one_optimum(rho, P) -> float:
    """Closed-form minimum of the functional over the rank-one family.

    For ``X = sqrt(P) V`` the functional is ``Tr(P sigma) - |Tr(sqrt(P) V sigma)|^2``
    with ``sigma = rho^{T_B}``; maximizing over unitaries gives the trace norm
    of ``sigma sqrt(P)``.
    """
    mat = _matrix_of(rho)
    dims = rho.pair if isinstance(rho, DensityOperator) else None
    if dims is None:
        raise ValueError("rank_one_optimum needs a DensityOperator")
    sigma = matcore.partial_transpose(mat, dims)
    P = _check_target(P)
    tn = np.linalg.svd(sigma @ matcore.psd_sqrt(P), compute_uv=False).sum()
    return float(np.trace(P @ sigma).real - tn**2)


def _batch_haar(rng, count, d):
    Z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2)
    Qs, Rs = np.linalg.qr(Z)
    diag = np.diagonal(Rs, axis1=1, axis2=2)
    return Qs * (diag / np.abs(diag))[:, None, :]


def optimize_q(
    rho: DensityOperator,
    P,
    basis: OperatorBasis | None = None,
    budget: int = DEFAULT_BUDGET,
    refine: int = DEFAULT_REFINE,
    seed=0,
):
    """Search rank-one certificates for the smallest functional value.

    ``budget`` Haar-random unitaries (plus ``V = I``) are scored in one batch;
    the best is refined by ``refine`` steps ``V -> V expm(i eps G)`` with random
    Hermitian ``G``, shrinking ``eps`` after a failed step.  Returns
    ``(certificate, value)``; the value never exceeds the ``V = I`` value.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    basis = basis or default_basis(rho.pair)
    P = _check_target(P)
    rng = rng_from(seed)
    d = P.shape[0]
    G = gamma(rho, basis)
    solve = _coefficient_solver(basis)
    sqrtP = matcore.psd_sqrt(P)

    def score(Vs):
        X = np.einsum("ab,nbc->nac", sqrtP, Vs).reshape(len(Vs), -1)
        al = solve(X)
        return np.einsum("ni,ij,nj->n", al, G, al.conj()).real

    Vs = np.concatenate([np.eye(d, dtype=complex)[None], _batch_haar(rng, budget, d)])
    vals = score(Vs)
    k = int(np.argmin(vals))
    best_V, best = Vs[k], float(vals[k])
    step = 0.5
    for _ in range(refine):
        H = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        H = (H + H.conj().T) / 2
        cand = best_V @ expm(1j * step * H)
        val = float(score(cand[None])[0])
        if val < best:
            best_V, best = cand, val
        else:
            step *= 0.7
            if step < 1e-4:
                step = 0.5
    cert = q_from_unitary(P, best_V, basis)
    return cert, functional(rho, cert, basis)


def default_target(rho: DensityOperator) -> np.ndarray:
    """Projector onto the most negative eigenvector of ``rho^{T_B}``."""
    _, vec = matcore.min_eig(rho.pt)
    return matcore.projector(vec)


def basis_covariance_check(
    rho: DensityOperator,
    basis: OperatorBasis,
    C,
    D,
    P=None,
    budget: int = 200,
    refine: int = 50,
    seed=0,
    tol: float = 1e-8,
) -> dict:
    """Check the transformation laws under ``A' = C A``, ``B' = D B`` (real ``C``, ``D``).

    Reports the residuals of ``eta' = (C (x) D) eta (C (x) D)^T`` and the same law
    for ``gamma``, the certificate-coefficient law ``(C^T (x) D^T) alpha' = alpha``,
    and the optimized functional with both bases (same seed).
    """
    C = np.asarray(C, dtype=float)
    D = np.asarray(D, dtype=float)
    new = basis.transformed(C, D)
    K = np.kron(C, D)
    e_res = float(np.max(np.abs(eta(rho, new) - K @ eta(rho, basis) @ K.T)))
    g_res = float(np.max(np.abs(gamma(rho, new) - K @ gamma(rho, basis) @ K.T)))
    P = default_target(rho) if P is None else P
    cert0, v0 = optimize_q(rho, P, basis, budget, refine, seed)
    cert1, v1 = optimize_q(rho, P, new, budget, refine, seed)
    same_V = q_from_unitary(P, cert0.V, new)
    a_res = float(np.max(np.abs(K.T @ same_V.alpha - cert0.alpha)))
    return {
        "eta_residual": e_res,
        "gamma_residual": g_res,
        "alpha_residual": a_res,
        "value": v0,
        "value_transformed": v1,
        "value_same_V": functional(rho, same_V, new),
        "detected": v0 < -tol,
        "detected_transformed": v1 < -tol,
        "verdict_unchanged": (v0 < -tol) == (v1 < -tol),
    }


def random_invertible(n: int, seed=None, cond_max: float = 50.0) -> np.ndarray:
    rng = rng_from(seed)
    while True:
        M = rng.standard_normal((n, n))
        if np.linalg.cond(M) < cond_max:
            return M

