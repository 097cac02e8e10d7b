"""Three-qubit bipartitions and the min-over-cuts improvement of full-separability witnesses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import matcore
from .nonlinear import NonlinearWitness, improve, pauli_form
from .states import DensityOperator, random_separable, rng_from
from .witness import LinearWitness

QUBITS3 = (2, 2, 2)


@dataclass(frozen=True)
class Bipartition:
    """A cut of three qubits; ``order`` lists the parties with the singleton first.

    Every ``order`` used here is an involution, so the same permutation maps
    back from the lifted ``2 x 4`` picture.
    """

    label: str
    order: tuple[int, int, int]

    @property
    def dims(self) -> tuple[int, int]:
        return (2, 4)


CUTS = (
    Bipartition("A|BC", (0, 1, 2)),
    Bipartition("AB|C", (2, 1, 0)),
    Bipartition("AC|B", (1, 0, 2)),
)
CUTS_BY_LABEL = {c.label: c for c in CUTS}


def _cut(cut) -> Bipartition:
    if isinstance(cut, Bipartition):
        return cut
    try:
        return CUTS_BY_LABEL[cut]
    except KeyError:
        raise ValueError(f"unknown bipartition {cut!r}; expected one of {list(CUTS_BY_LABEL)}") from None


def permute_operator(M, order) -> np.ndarray:
    M = matcore.as_cmatrix(M)
    if M.shape != (8, 8):
        raise ValueError(f"expected a three-qubit operator, got shape {M.shape}")
    perm = list(order) + [k + 3 for k in order]
    return M.reshape((2,) * 6).transpose(perm).reshape(8, 8)


def lift_operator(M, cut) -> np.ndarray:
    return permute_operator(M, _cut(cut).order)


def lift(rho: DensityOperator, cut) -> DensityOperator:
    """Reorder qubits so the cut's singleton is the first factor; dims become ``(2, 4)``."""
    if tuple(rho.dims) != QUBITS3:
        raise ValueError(f"expected a 2x2x2 state, got dims {rho.dims}")
    return DensityOperator(lift_operator(rho.mat, cut), (2, 4))


def unlift(rho: DensityOperator, cut) -> DensityOperator:
    if tuple(rho.dims) != (2, 4):
        raise ValueError(f"expected a 2x4 state, got dims {rho.dims}")
    return DensityOperator(lift_operator(rho.mat, cut), QUBITS3)


def random_fully_separable(seed=None, terms: int | None = None) -> DensityOperator:
    return random_separable(QUBITS3, 16 if terms is None else terms, seed)


def random_biseparable(seed=None, terms: int = 6) -> DensityOperator:
    """Mixture of pure states, each a product across a randomly chosen cut."""
    rng = rng_from(seed)
    p = rng.dirichlet(np.ones(terms))
    mat = np.zeros((8, 8), dtype=complex)
    for pk in p:
        cut = CUTS[rng.integers(3)]
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        bc = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v = np.kron(a / np.linalg.norm(a), bc / np.linalg.norm(bc))
        # v is a product across A|BC in the lifted order of `cut`
        v = v.reshape(2, 2, 2).transpose(cut.order).ravel()
        mat += pk * np.outer(v, v.conj())
    return DensityOperator(mat, QUBITS3)


def ghz_fidelity_witness() -> LinearWitness:
    """``I/2 - |GHZ><GHZ|``, nonnegative on every biseparable (hence fully separable) state."""
    ghz = (matcore.ket(0, 0, 0) + matcore.ket(1, 1, 1)) / np.sqrt(2)
    return LinearWitness(np.eye(8) / 2 - matcore.projector(ghz), QUBITS3, "user")


Builder = Callable[[LinearWitness], NonlinearWitness]


def default_builder(kind: str = "F2") -> Builder:
    return lambda wit: improve(wit, kind)


@dataclass(frozen=True, eq=False)
class FullSepWitness:
    """``F_tot(rho) = min over cuts of F_cut(lift(rho, cut))``."""

    linear: LinearWitness
    per_cut: Mapping[str, NonlinearWitness]

    def values(self, rho: DensityOperator) -> dict[str, float]:
        return {label: F(lift(rho, label)) for label, F in self.per_cut.items()}

    def __call__(self, rho: DensityOperator) -> float:
        return min(self.values(rho).values())

    def max_over_cuts(self, rho: DensityOperator) -> float:
        """The max-combination; carries no positivity guarantee on mixed biseparable states."""
        return max(self.values(rho).values())


def improve_full_sep(W: LinearWitness, builders: Builder | Mapping[str, Builder] | None = None) -> FullSepWitness:
    """Improve a witness for full separability cut by cut and combine with ``min``.

    ``builders`` is one constructor for all cuts or a mapping ``label -> constructor``;
    each receives the witness lifted to ``2 x 4`` and must return a nonlinear
    improvement of it.  Default: :func:`nlwit.nonlinear.improve` with ``kind="F2"``
    (partial-transpose form when the lifted operator has it, otherwise the
    operator/map correspondence).
    """
    if tuple(W.dims) != QUBITS3:
        raise ValueError(f"expected a three-qubit witness, got dims {W.dims}")
    per_cut = {}
    for cut in CUTS:
        if builders is None:
            build = default_builder()
        elif isinstance(builders, Mapping):
            build = builders[cut.label]
        else:
            build = builders
        lifted = LinearWitness(lift_operator(W.W, cut), cut.dims, W.provenance)
        try:
            F = build(lifted)
        except Exception as exc:
            raise ValueError(f"cannot improve the witness across cut {cut.label}: {exc}") from exc
        if not np.allclose(F.linear.W, lifted.W, atol=1e-10):
            raise ValueError(f"builder for cut {cut.label} changed the linear part of the witness")
        per_cut[cut.label] = F
    return FullSepWitness(W, per_cut)


# search utilities for the genuine-multipartite case (no positivity contract)


def max_functional_counterexample(F: FullSepWitness, trials: int = 2000, seed=0, terms: int = 4) -> dict:
    """Look for mixed biseparable states on which the max-over-cuts functional goes negative.

    Returns the smallest value found and the trial index; a negative value is a
    counterexample to positivity of the max-combination.
    """
    rng = rng_from(seed)
    best, where = np.inf, None
    for t in range(trials):
        rho = random_biseparable(rng, terms)
        v = F.max_over_cuts(rho)
        if v < best:
            best, where = v, t
    return {"min_value": float(best), "trial": where, "negative": bool(best < 0)}


def _embedded_squares(F: NonlinearWitness, cut: Bipartition):
    """Squares of ``F`` expressed as three-qubit Pauli vectors in the original qubit order."""
    form = pauli_form(F)
    out = []
    for weight, v in form.squares:
        # lifted words follow the cut's qubit order; map back to A, B, C
        words = form.words
        back = np.zeros_like(v)
        idx = {w: i for i, w in enumerate(words)}
        for i, w in enumerate(words):
            orig = [""] * 3
            for pos, party in enumerate(cut.order):
                orig[party] = w[pos]
            back[idx["".join(orig)]] = v[i]
        out.append((weight, back))
    return out


def common_quadratic_terms(F: FullSepWitness, tol: float = 1e-9) -> list[dict]:
    """Candidate squares shared by the corrections of all three cuts.

    For each square ``q`` appearing in some cut, compute the largest ``c`` with
    ``M_cut - c q q^T >= 0`` for every cut (``M_cut`` = quadratic-form matrix);
    ``c = 1 / (q^T M^+ q)`` when ``q`` lies in the range of ``M``, else 0.
    A candidate with ``c > 0`` could be subtracted from ``W`` for every cut.
    """
    mats = {}
    squares = []
    for cut in CUTS:
        sq = _embedded_squares(F.per_cut[cut.label], cut)
        mats[cut.label] = sum(w * np.outer(v, v) for w, v in sq)
        squares.extend(v for _, v in sq)
    out = []
    for q in squares:
        weights = []
        for M in mats.values():
            Mp = np.linalg.pinv(M, rcond=1e-10, hermitian=True)
            in_range = np.linalg.norm(M @ Mp @ q - q) <= tol * max(1.0, np.linalg.norm(q))
            weights.append(1.0 / float(q @ Mp @ q) if in_range and q @ Mp @ q > tol else 0.0)
        out.append({"square": q, "common_weight": min(weights)})
    return out
