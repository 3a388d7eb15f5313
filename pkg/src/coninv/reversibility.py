"""Conjugate-reversibility: deciding it, and building (coninvolutory) reversers.

``g`` is c-reversible when some ``h`` satisfies ``h g h^{-1} = conj(g)^{-1}``;
strongly so when ``h`` can be taken with ``h conj(h) = e``.  A strong
reverser splits ``g`` into the two coninvolutions ``h^{-1}`` and
``conj(g)^{-1} h``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BranchCutError,
    CReversibilityRequired,
    InconsistentSystemError,
    InvalidWitnessError,
    RetriesExhausted,
    SingularMatrixError,
)
from .linalg_core import (
    DEFAULT_TOL,
    AffineMap,
    Tolerance,
    affine_compose,
    affine_conj,
    affine_distance,
    affine_inverse,
    affine_norm,
    as_matrix,
    fro,
    is_coninvolution,
    rcond,
)
from .spectral import jordan_structure, principal_inv_sqrt, spectrum_is_conjugation_closed

log = logging.getLogger(__name__)

__all__ = [
    "ReverserWitness",
    "reverse_residual",
    "is_c_reversible_matrix",
    "is_c_reversible_affine",
    "reverser_space",
    "coninvolutory_correction",
    "coninvolutory_reverser",
    "affine_reverser",
    "transport_reverser",
    "pair_from_reverser",
]


@dataclass(frozen=True, eq=False)
class ReverserWitness:
    """A reverser ``h`` for ``target`` together with its measured residuals.

    ``residual_coninv`` is ``inf`` when the witness makes no coninvolution
    claim.  ``target`` is kept so residuals can be re-measured after
    transport.
    """

    reverser: AffineMap
    coninvolutory: bool
    residual_reverse: float
    residual_coninv: float = float("inf")
    target: AffineMap | None = None

    @property
    def linear(self) -> np.ndarray:
        return self.reverser.linear


def reverse_residual(h: AffineMap, g: AffineMap) -> float:
    """Scaled residual of ``h g = conj(g)^{-1} h``, written as ``conj(g) h g = h``.

    The multiplied-out form needs no inverse; it is scaled by
    ``max(1, |h| |g|^2)``.
    """
    lhs = affine_compose(affine_compose(affine_conj(g), h), g)
    scale = max(1.0, affine_norm(h) * affine_norm(g) ** 2)
    return affine_distance(lhs, h) / scale


def _measure(h: AffineMap, g: AffineMap | None, tol: Tolerance, claim_coninv: bool) -> ReverserWitness:
    r_rev = reverse_residual(h, g) if g is not None else float("nan")
    r_con = is_coninvolution(h, tol).residual if claim_coninv else float("inf")
    return ReverserWitness(h, claim_coninv, r_rev, r_con, g)


def _pairing_holds(structure, tol: Tolerance) -> bool:
    for mu, blocks in structure:
        partner = 1.0 / np.conj(mu)
        if structure.blocks_at(partner, tol.eig_cluster) != blocks:
            return False
    return True


def is_c_reversible_matrix(A, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Jordan data closed under ``lambda -> 1/conj(lambda)`` with equal block multisets."""
    A = as_matrix(A)
    if A.shape[0] == 0:
        return True
    if not rcond(A) > tol.rank_cut:
        raise SingularMatrixError("c-reversibility is defined for invertible matrices")
    return _pairing_holds(jordan_structure(A, tol), tol)


def is_c_reversible_affine(g: AffineMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    """c-reversibility of ``g``, decided on its linear part alone.

    For affine maps c-reversible, strongly c-reversible and "linear part
    c-reversible" coincide, so the linear test is the whole decision.
    """
    return is_c_reversible_matrix(g.linear, tol)


def _reverser_svd(A: np.ndarray, tol: Tolerance):
    n = A.shape[0]
    K = np.kron(A.T, A.conj()) - np.eye(n * n)
    U, s, Vh = np.linalg.svd(K)
    cut = tol.rank_cut * max(float(s[0]), fro(A) ** 2, 1.0)
    return U, s, Vh, int(np.sum(s > cut))


def reverser_space(A, tol: Tolerance = DEFAULT_TOL) -> list:
    """Orthonormal basis (Frobenius inner product) of ``{B : B A = conj(A)^{-1} B}``.

    The equation is multiplied through by ``conj(A)`` to ``conj(A) B A = B``
    and vectorised column-major as ``(A^T kron conj(A) - I) vec(B) = 0``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    _, _, Vh, rank = _reverser_svd(A, tol)
    return [Vh[j].conj().reshape((n, n), order="F") for j in range(rank, n * n)]


def _refine(B: np.ndarray, A: np.ndarray, svd, tol: Tolerance) -> np.ndarray:
    """One correction step: project the reversal residual out, then re-correct.

    The least-squares step uses the truncated SVD of the vectorised
    operator; afterwards ``conj(B) B`` is close to I, so its principal root
    is well away from the branch cut.
    """
    U, s, Vh, rank = svd
    n = A.shape[0]
    r = (A.conj() @ B @ A - B).reshape(-1, order="F")
    d = Vh[:rank].conj().T @ ((U[:, :rank].conj().T @ r) / s[:rank])
    return coninvolutory_correction(B - d.reshape((n, n), order="F"), tol)


def coninvolutory_correction(B0, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Turn a reverser ``B0`` into a coninvolutory one.

    With ``S = conj(B0) B0`` (which commutes with A), ``B = B0 S^{-1/2}``
    still reverses A and satisfies ``B conj(B) = I`` provided the principal
    root is a real-coefficient polynomial in S.
    """
    B0 = as_matrix(B0)
    S = B0.conj() @ B0
    if not spectrum_is_conjugation_closed(S, tol):
        raise BranchCutError("spectrum of conj(B0) B0 is not closed under conjugation")
    return B0 @ principal_inv_sqrt(S, tol)


def _linear_witness(B: np.ndarray, A: np.ndarray, tol: Tolerance):
    n = A.shape[0]
    h = AffineMap(B, np.zeros(n))
    return _measure(h, AffineMap(A, np.zeros(n)), tol, True)


def coninvolutory_reverser(A, rng: np.random.Generator, tol: Tolerance = DEFAULT_TOL) -> ReverserWitness:
    """Random coninvolutory ``B`` with ``B A B^{-1} = conj(A)^{-1}``.

    Draws real combinations of a basis of the reverser space, corrects each
    by the inverse principal square root of ``conj(B0) B0`` and keeps the
    first candidate whose certificate residuals pass.  Each candidate gets one
    refinement step, kept only if it lowers the residuals.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if n == 0:
        return _linear_witness(np.zeros((0, 0), dtype=complex), A, tol)
    svd = _reverser_svd(A, tol)
    U, s, Vh, rank = svd
    basis = [Vh[j].conj().reshape((n, n), order="F") for j in range(rank, n * n)]
    if not basis:
        raise CReversibilityRequired("reverser space is trivial: matrix is not c-reversible")
    if len(basis) == n * n and fro(A - np.eye(n)) == 0.0:
        return _linear_witness(np.eye(n, dtype=complex), A, tol)
    stack = np.stack(basis)
    last = None
    for attempt in range(tol.max_retries):
        c = rng.standard_normal(len(basis))
        B0 = np.tensordot(c, stack, axes=1)
        if not rcond(B0) > tol.rank_cut:
            continue
        try:
            B = coninvolutory_correction(B0, tol)
        except BranchCutError:
            continue
        w = _linear_witness(B, A, tol)
        try:
            w2 = _linear_witness(_refine(B, A, svd, tol), A, tol)
        except BranchCutError:
            w2 = w
        if max(w2.residual_reverse, w2.residual_coninv) < max(w.residual_reverse, w.residual_coninv):
            w = w2
        last = (w.residual_reverse, w.residual_coninv)
        if w.residual_reverse <= tol.residual_rel and w.residual_coninv <= tol.residual_rel:
            return w
        log.debug("reverser attempt %d rejected: residuals %s", attempt, last)
    raise RetriesExhausted(
        f"no coninvolutory reverser within {tol.max_retries} draws (last residuals {last})", last)


def affine_reverser(g: AffineMap, B, tol: Tolerance = DEFAULT_TOL) -> ReverserWitness:
    """Complete a coninvolutory linear reverser ``B`` of ``L(g)`` to ``h = (B, w)``.

    Solves ``(conj(A)^{-1} - I) w = B v + conj(A)^{-1} conj(v)`` together with
    ``B conj(w) + w = 0`` as one real least-squares system, then checks both
    residuals.  Raises InconsistentSystemError when no such ``w`` exists for
    this ``B``.
    """
    B = as_matrix(B)
    A, v = g.linear, g.translation
    n = g.dim
    Abar_inv = np.linalg.solve(A.conj(), np.eye(n))
    M = Abar_inv - np.eye(n)
    r = B @ v + Abar_inv @ v.conj()
    # unknowns (Re w, Im w); the second block is B conj(w) + w = 0
    Br, Bi = B.real, B.imag
    Mr, Mi = M.real, M.imag
    I = np.eye(n)
    top = np.block([[Mr, -Mi], [Mi, Mr]])
    bottom = np.block([[Br + I, Bi], [Bi, I - Br]])
    lhs = np.vstack([top, bottom])
    rhs = np.concatenate([r.real, r.imag, np.zeros(2 * n)])
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=tol.rank_cut)
    w = sol[:n] + 1j * sol[n:]
    scale = max(1.0, fro(M) * fro(w) + fro(r))
    r_eq = fro(M @ w - r) / scale
    r_con = fro(B @ w.conj() + w) / max(1.0, fro(B) * fro(w))
    if r_eq > tol.residual_rel or r_con > tol.residual_rel:
        raise InconsistentSystemError(
            f"translation equations inconsistent for this B (residuals {r_eq:.3e}, {r_con:.3e})")
    return _measure(AffineMap(B, w), g, tol, True)


def transport_reverser(k: AffineMap, h: ReverserWitness, tol: Tolerance = DEFAULT_TOL,
                       k_inv: AffineMap | None = None) -> ReverserWitness:
    """``conj(k) h k^{-1}``, a reverser for ``k g k^{-1}``; residuals re-measured.

    ``k_inv`` may be passed when an accurate inverse is already known.
    """
    if k_inv is None:
        k_inv = affine_inverse(k, tol)
    h2 = affine_compose(affine_compose(affine_conj(k), h.reverser), k_inv)
    target = None
    if h.target is not None:
        target = affine_compose(affine_compose(k, h.target), k_inv)
    return _measure(h2, target, tol, h.coninvolutory)


def pair_from_reverser(g: AffineMap, h: ReverserWitness | AffineMap, tol: Tolerance = DEFAULT_TOL):
    """Split ``g = h^{-1} (conj(g)^{-1} h)`` for a coninvolutory reverser ``h``.

    ``conj(g)^{-1} h`` equals ``h g`` by the reversing identity; the latter
    avoids inverting ``g``.
    """
    if isinstance(h, AffineMap):
        h = _measure(h, g, tol, True)
    elif h.target is not g:
        h = replace(h, target=g, residual_reverse=reverse_residual(h.reverser, g))
    if not h.coninvolutory or h.residual_coninv > tol.residual_rel:
        raise InvalidWitnessError(f"reverser is not a coninvolution (residual {h.residual_coninv:.3e})")
    if h.residual_reverse > tol.residual_rel:
        raise InvalidWitnessError(f"reverser does not reverse g (residual {h.residual_reverse:.3e})")
    first = affine_inverse(h.reverser, tol)
    second = affine_compose(h.reverser, g)
    return first, second
