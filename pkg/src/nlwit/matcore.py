"""Small dense complex linear algebra.

Matrices are plain ``numpy.ndarray`` objects.  A bipartite operator on
``C^dA (x) C^dB`` uses the row-major index ``(i, k) -> i*dB + k`` everywhere in
the package, so partial traces, partial transposes and the second-moment
matrices in :mod:`nlwit.covariance` all agree on one convention.
"""

from __future__ import annotations

import numpy as np

# eigenvalues in [-PSD_TOL, 0) are treated as zero
PSD_TOL = 1e-9
RECON_TOL = 1e-8
HERM_TOL = 1e-10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def as_cmatrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {M.shape}")
    return M


def allclose(A, B, atol: float) -> bool:
    """Entrywise comparison with an explicit absolute tolerance."""
    A = np.asarray(A)
    B = np.asarray(B)
    return A.shape == B.shape and bool(np.max(np.abs(A - B), initial=0.0) <= atol)


def kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_cmatrix(op))
    return out


def _check_square(M, dims):
    dA, dB = dims
    n = dA * dB
    if M.shape != (n, n):
        raise ValueError(f"matrix of shape {M.shape} does not act on a {dA}x{dB} system")


def partial_transpose(M, dims) -> np.ndarray:
    """Transpose the second tensor factor: entry ``(i,k; j,l)`` becomes ``M(i,l; j,k)``."""
    M = as_cmatrix(M)
    _check_square(M, dims)
    dA, dB = dims
    return M.reshape(dA, dB, dA, dB).transpose(0, 3, 2, 1).reshape(dA * dB, dA * dB)


def partial_trace(M, dims, keep: str = "B") -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    M : array_like
        Square matrix of size ``dA*dB``.
    dims : tuple of int
        ``(dA, dB)``.
    keep : {"A", "B"}
        Factor that survives.
    """
    M = as_cmatrix(M)
    _check_square(M, dims)
    dA, dB = dims
    T = M.reshape(dA, dB, dA, dB)
    if keep == "B":
        return np.einsum("ikil->kl", T)
    if keep == "A":
        return np.einsum("ikjk->ij", T)
    raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")


def hermiticity_defect(M) -> float:
    M = as_cmatrix(M)
    if M.shape[0] != M.shape[1]:
        return np.inf
    return float(np.max(np.abs(M - M.conj().T), initial=0.0))


def hermitize(M, tol: float = HERM_TOL) -> np.ndarray:
    M = as_cmatrix(M)
    defect = hermiticity_defect(M)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian (max |M - M^dag| = {defect:.3e})")
    return (M + M.conj().T) / 2


def herm_eig(M, tol: float = HERM_TOL):
    """Eigenvalues (descending) and orthonormal eigenvectors (columns) of a Hermitian matrix."""
    w, v = np.linalg.eigh(hermitize(M, tol))
    return w[::-1].copy(), v[:, ::-1].copy()


def min_eig(M, tol: float = HERM_TOL):
    """Smallest eigenvalue and its eigenvector."""
    w, v = np.linalg.eigh(hermitize(M, tol))
    return float(w[0]), v[:, 0].copy()


def psd_sqrt(M, tol: float = PSD_TOL) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(M))
    if w[0] < -tol:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w[0]:.3e})")
    # eigenvalues at round-off level are zeros; sqrt would inflate them to ~1e-8
    floor = w.size * np.finfo(float).eps * max(abs(w[-1]), 1.0)
    w = np.where(w > floor, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def svd(M):
    """``U, s, Vh`` with ``U @ diag(s) @ Vh == M`` and ``s`` descending."""
    return np.linalg.svd(as_cmatrix(M))


def is_psd(M, tol: float = PSD_TOL) -> bool:
    return float(np.linalg.eigvalsh(hermitize(M))[0]) >= -tol


def trace_inner(X, Y) -> complex:
    """Hilbert-Schmidt inner product ``Tr(X^dag Y)``."""
    X = as_cmatrix(X)
    Y = as_cmatrix(Y)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {Y.shape}")
    return complex(np.vdot(X, Y))


def expect(op, rho) -> complex:
    """``Tr(op @ rho)`` without forming the product."""
    op = np.asarray(op)
    rho = np.asarray(rho)
    return complex(np.einsum("ij,ji->", op, rho))


def ket(*digits, dims=None) -> np.ndarray:
    """Computational basis vector ``|d1 d2 ...>`` (qubits unless ``dims`` is given)."""
    dims = dims or (2,) * len(digits)
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[np.ravel_multi_index(digits, dims)] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def unitary_taking(a, b) -> np.ndarray:
    """A unitary ``V`` with ``V @ a = b`` for unit vectors ``a``, ``b``.

    Built from a phase fix followed by a Householder reflection.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-14 else 1.0
    # make <b|a'> real and nonnegative, then reflect a' onto b
    a1 = a / phase
    u = a1 - b
    n = np.linalg.norm(u)
    d = a.size
    R = np.eye(d, dtype=complex)
    if n > 1e-14:
        u = u / n
        R = R - 2 * np.outer(u, u.conj())
    return R @ (np.eye(d) / phase)


def gell_mann_basis(d: int) -> list[np.ndarray]:
    """Hermitian operator basis of ``d x d`` matrices, orthonormal under ``Tr(X^dag Y)``.

    The first element is ``I/sqrt(d)``, followed by the symmetric, antisymmetric
    and diagonal generalized Gell-Mann matrices (normalized).  For ``d = 2``
    this is ``(I, X, Y, Z) / sqrt(2)``.
    """
    if d == 2:
        return [PAULI[c] / np.sqrt(2) for c in "IXYZ"]
    ops = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            S = np.zeros((d, d), dtype=complex)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            ops.append(S)
            A = np.zeros((d, d), dtype=complex)
            A[j, k] = -1j / np.sqrt(2)
            A[k, j] = 1j / np.sqrt(2)
            ops.append(A)
    for l in range(1, d):
        D = np.zeros((d, d), dtype=complex)
        D[np.arange(l), np.arange(l)] = 1.0
        D[l, l] = -l
        ops.append(D / np.sqrt(l * (l + 1)))
    return ops
