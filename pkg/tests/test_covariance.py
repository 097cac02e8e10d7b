import itertools

import numpy as np
import pytest

from nlwit import matcore
from nlwit.covariance import (
    OperatorBasis,
    QCertificate,
    basis_covariance_check,
    certificate_residual,
    chi,
    default_basis,
    eta,
    eta_pt,
    first_moments,
    functional,
    functional_parts,
    gamma,
    optimize_q,
    q_from_expansion,
    q_from_unitary,
    random_invertible,
    rank_one_optimum,
    symmetrized_min_eig,
    validate_certificate,
)
from nlwit.nonlinear import detect_condition_f2, improve_f1
from nlwit.states import (
    bell_states,
    haar_unitary,
    is_ppt,
    maximally_mixed,
    min_pt_eigenvalue,
    random_density,
    random_pure,
    random_separable,
    singlet,
    werner,
)
from nlwit.witness import witness_from_phi

from oracles import pt_loops

PHI = bell_states()[0]
B22 = default_basis((2, 2))


def eta_loops(mat, basis, swap=False):
    A, B = basis.A_ops, basis.B_ops
    nB = len(B)
    n = len(A) * nB
    out = np.zeros((n, n), dtype=complex)
    for (i1, i2), (j1, j2) in itertools.product(itertools.product(range(len(A)), range(nB)), repeat=2):
        BB = B[j2] @ B[i2] if swap else B[i2] @ B[j2]
        out[i1 * nB + i2, j1 * nB + j2] = np.trace(mat @ np.kron(A[i1] @ A[j1], BB))
    return out


def test_default_basis():
    assert B22.size == 16 and B22.is_orthonormal() and B22.name == "pauli"
    G = np.array([[matcore.trace_inner(a, b) for b in B22.A_ops] for a in B22.A_ops])
    assert matcore.allclose(G, np.eye(4), 1e-12)
    b3 = default_basis((3, 2))
    assert len(b3.A_ops) == 9 and b3.size == 36


@pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
def test_eta_matches_loops(dims):
    basis = default_basis(dims)
    rho = random_density(dims, 1)
    assert matcore.allclose(eta(rho, basis), eta_loops(rho.mat, basis), 1e-12)
    assert matcore.allclose(eta_pt(rho, basis), eta_loops(rho.mat, basis, swap=True), 1e-12)
    m = first_moments(rho, basis)
    A, B = basis.A_ops, basis.B_ops
    oracle = [np.trace(rho.mat @ np.kron(a, b)) for a in A for b in B]
    assert matcore.allclose(m, oracle, 1e-12)
    assert matcore.allclose(chi(rho, basis), np.outer(oracle, oracle), 1e-12)
    assert matcore.allclose(gamma(rho, basis), eta_pt(rho, basis) - chi(rho, basis), 0)


def test_eta_examples():
    assert matcore.allclose(eta(maximally_mixed((2, 2)), B22), np.eye(16) / 4, 1e-14)
    prod = random_separable((2, 2), 1, 3)
    assert symmetrized_min_eig(eta(prod, B22)) >= -1e-8
    w = np.linalg.eigvalsh(chi(maximally_mixed((2, 2)), B22))
    assert abs(w[-1] - 0.25) < 1e-14 and np.all(np.abs(w[:-1]) < 1e-14)


def test_eta_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        eta(maximally_mixed((2, 3)), B22)


@pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
def test_partial_transpose_moment_identity(dims):
    basis = default_basis(dims)
    Bt = OperatorBasis(basis.A_ops, [b.T for b in basis.B_ops])
    worst = 0.0
    for seed in range(100):
        rho = random_density(dims, seed)
        raw = pt_loops(rho.mat, *dims)
        worst = max(worst, np.max(np.abs(eta_pt(rho, basis) - eta(raw, Bt))))
    assert worst <= 1e-10


def test_eta_pt_and_gamma_signs():
    assert symmetrized_min_eig(eta_pt(singlet(), B22)) < -1e-3
    assert symmetrized_min_eig(gamma(singlet(), B22)) < -1e-3
    for k in range(200):
        rho = random_separable((2, 2), 8, k)
        assert symmetrized_min_eig(eta_pt(rho, B22)) >= -1e-8
        assert symmetrized_min_eig(gamma(rho, B22)) >= -1e-8


def test_q_from_unitary_projector_identity():
    cert = q_from_unitary(PHI.projector(), np.eye(4), B22)
    X = np.einsum("i,iab->ab", cert.alpha, B22.products())
    assert matcore.allclose(X, PHI.projector(), 1e-12)
    assert certificate_residual(cert, B22) <= 1e-8
    assert validate_certificate(cert, B22) == []


@pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
def test_q_from_unitary_random_reconstruction(dims):
    basis = default_basis(dims)
    n = dims[0] * dims[1]
    for seed in range(20):
        P = random_density(dims, seed).mat * (1 + seed)
        cert = q_from_unitary(P, haar_unitary(n, seed + 7), basis)
        assert certificate_residual(cert, basis) <= 1e-8
        assert matcore.hermiticity_defect(cert.Q) <= 1e-9 and symmetrized_min_eig(cert.Q) >= -1e-9


def test_q_from_unitary_errors():
    with pytest.raises(ValueError, match="positive semidefinite"):
        q_from_unitary(np.diag([1.0, -1.0, 0, 0]), np.eye(4), B22)
    with pytest.raises(ValueError, match="unitary"):
        q_from_unitary(PHI.projector(), 2 * np.eye(4), B22)


def test_validate_certificate_flags_problems():
    bad = QCertificate(-np.eye(16), None, PHI.projector())
    problems = validate_certificate(bad, B22)
    assert any("positive" in p for p in problems) and any("residual" in p for p in problems)


def test_rank_one_certificate_reproduces_partner_term():
    for seed in range(100):
        psi = random_pure((2, 2), seed)
        V = matcore.unitary_taking(psi.vec, PHI.vec)
        cert = q_from_unitary(PHI.projector(), V, B22)
        rho = random_density((2, 2), 500 + seed)
        K = pt_loops(np.outer(PHI.vec, psi.vec.conj()), 2, 2)
        W = pt_loops(PHI.projector(), 2, 2)
        oracle = np.trace(W @ rho.mat).real - abs(np.trace(K @ rho.mat)) ** 2
        val = functional(rho, cert, B22)
        assert abs(val - oracle) <= 1e-9
        assert val >= improve_f1(PHI, psi)(rho) - 1e-12


def test_expansion_certificate_is_no_better_than_witness():
    cert = q_from_expansion(PHI.projector(), B22)
    W = witness_from_phi(PHI)
    for seed in range(20):
        rho = random_density((2, 2), seed)
        w = np.trace(W.W @ rho.mat).real
        assert abs(functional(rho, cert, B22) - (w - w * w)) < 1e-12


def test_functional_parts_sum():
    cert = q_from_unitary(PHI.projector(), haar_unitary(4, 1), B22)
    rho = random_density((2, 2), 2)
    lin, quad = functional_parts(rho, cert, B22)
    assert abs(lin - quad - functional(rho, cert, B22)) < 1e-12


def test_functional_nonnegative_on_separable_oracle():
    certs = [q_from_unitary(random_density((2, 2), s).mat, haar_unitary(4, s), B22) for s in range(3)]
    certs.append(optimize_q(singlet(), PHI.projector(), B22, budget=100, refine=20)[0])
    for k in range(1000):
        rho = random_separable((2, 2), 8, k)
        for c in certs:
            assert functional(rho, c, B22) >= -1e-8


def test_optimize_q_singlet():
    cert, val = optimize_q(singlet(), PHI.projector(), B22)
    assert val < -0.5 - 1e-3
    assert abs(val - rank_one_optimum(singlet(), PHI.projector())) < 1e-6
    assert validate_certificate(cert, B22) == []
    again = optimize_q(singlet(), PHI.projector(), B22)
    assert again[1] == val and np.array_equal(again[0].Q, cert.Q)


def test_optimize_q_no_false_detection():
    _, val = optimize_q(maximally_mixed((2, 2)), PHI.projector(), B22, budget=200, refine=50)
    assert val >= -1e-8


@pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
def test_optimize_q_reaches_closed_form(dims):
    basis = default_basis(dims)
    for seed in range(5):
        rho = random_density(dims, seed)
        P = random_pure(dims, seed + 9).projector()
        _, val = optimize_q(rho, P, basis, budget=1000, refine=300, seed=seed)
        best = rank_one_optimum(rho, P)
        assert best - 1e-9 <= val <= best + 2e-3


def test_rank_one_optimum_equals_f2_gap():
    for seed in range(50):
        rho = random_density((2, 2), seed)
        phi = random_pure((2, 2), seed + 1)
        _, lhs, rhs = detect_condition_f2(rho, phi)
        assert abs(rank_one_optimum(rho, phi.projector()) - (lhs - rhs)) < 1e-10


def test_basis_change_identity():
    rep = basis_covariance_check(random_density((2, 2), 1), B22, np.eye(4), np.eye(4), budget=50, refine=10)
    assert rep["eta_residual"] < 1e-14 and rep["value"] == rep["value_transformed"]


def test_basis_change_transformation_laws():
    for seed in range(10):
        rho = random_density((2, 3), seed)
        basis = default_basis((2, 3))
        C, D = random_invertible(4, seed), random_invertible(9, seed + 100)
        rep = basis_covariance_check(rho, basis, C, D, budget=50, refine=10, seed=seed)
        assert rep["eta_residual"] <= 1e-9 and rep["gamma_residual"] <= 1e-9
        assert rep["alpha_residual"] <= 1e-9
        assert abs(rep["value_same_V"] - rep["value"]) <= 1e-9


def test_werner_verdict_invariant_under_basis_change():
    rho = werner(0.6)
    for seed in range(10):
        C, D = random_invertible(4, seed), random_invertible(4, seed + 50)
        rep = basis_covariance_check(rho, B22, C, D, seed=seed)
        assert rep["detected"] and rep["verdict_unchanged"]


def test_basis_change_rejects_singular():
    C = np.eye(4)
    C[3] = C[2]
    with pytest.raises(ValueError, match="singular"):
        basis_covariance_check(singlet(), B22, C, np.eye(4))


def test_eta_pt_psd_iff_ppt():
    disagreements = 0
    for seed in range(300):
        rho = random_density((2, 2), seed)
        lam = min_pt_eigenvalue(rho)
        if abs(lam) < 1e-7:
            continue
        disagreements += (symmetrized_min_eig(eta_pt(rho, B22)) >= -1e-10) != is_ppt(rho)
    assert disagreements == 0
