"""Factorizations of affine maps into products of coninvolutions.

Two factors exist exactly when the linear part is c-reversible.  Three
factors are built from a user-supplied consimilarity witness.  Four factors
exist whenever ``|det L(g)| = 1``; the linear ``T`` block is first split
into two c-reversible matrices with prescribed unimodular spectra.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CReversibilityRequired,
    DeterminantModulusNotOne,
    IllConditionedError,
    NonScalarRequired,
    NotConinvolutionError,
    NotUnipotentError,
    RetriesExhausted,
    SingularMatrixError,
    WitnessRejected,
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
    consimilarity_transform,
    direct_sum,
    fro,
    identity,
    is_coninvolution,
    rcond,
)
from .reversibility import (
    ReverserWitness,
    _measure,
    affine_reverser,
    coninvolutory_reverser,
    is_c_reversible_affine,
    is_c_reversible_matrix,
    pair_from_reverser,
    transport_reverser,
)
from .spectral import (
    affine_exp_series,
    are_similar,
    is_unipotent,
    jordan_block,
    jordan_chain_basis,
    split_at_one,
)

log = logging.getLogger(__name__)

__all__ = [
    "AdjointWitness",
    "FactorizationCertificate",
    "NormalForm",
    "KINDS",
    "make_certificate",
    "normal_form",
    "adjoint_witness",
    "unipotent_reverser",
    "two_factor_unipotent",
    "two_factor",
    "con_sqrt",
    "three_factor_with_witness",
    "are_consimilar",
    "prescribed_spectrum_product",
    "c_reversible_split",
    "four_factor",
]

KINDS = {2: "two", 3: "three", 4: "four"}


def _rng(rng):
    # None means seed 0 so that unseeded calls stay reproducible
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else rng)


def _seed_of(rng):
    if rng is None:
        return 0
    return int(rng) if isinstance(rng, (int, np.integer)) else None


def _seed_note(rng) -> str:
    seed = _seed_of(rng)
    return f"rng seed={seed}" if seed is not None else "rng supplied by caller"


@dataclass(frozen=True)
class AdjointWitness:
    B: np.ndarray
    w: np.ndarray
    a: complex
    signs: tuple

    def as_affine(self) -> AffineMap:
        return AffineMap(self.B, self.w)


@dataclass(frozen=True, eq=False)
class FactorizationCertificate:
    """Ordered coninvolution factors of ``input`` with their residuals.

    ``residual_product`` is ``|f_1 ... f_k - g| / max(1, |g|)`` and
    ``residual_factors[i]`` the larger of the two scaled coninvolution
    residuals of factor ``i``.
    """

    input: AffineMap
    factors: tuple
    kind: str
    residual_product: float
    residual_factors: tuple
    provenance: tuple = field(default_factory=tuple)
    seed: int | None = None

    def product(self) -> AffineMap:
        out = identity(self.input.dim)
        for f in self.factors:
            out = affine_compose(out, f)
        return out

    def passes(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return (self.kind == KINDS.get(len(self.factors))
                and self.residual_product <= tol.residual_rel
                and all(r <= tol.residual_rel for r in self.residual_factors))


def make_certificate(g: AffineMap, factors, provenance=(), seed=None, tol: Tolerance = DEFAULT_TOL):
    factors = tuple(factors)
    prod = identity(g.dim)
    for f in factors:
        prod = affine_compose(prod, f)
    r_prod = affine_distance(prod, g) / max(1.0, affine_norm(g))
    r_fac = tuple(is_coninvolution(f, tol).residual for f in factors)
    return FactorizationCertificate(g, factors, KINDS[len(factors)], r_prod, r_fac, tuple(provenance), seed)


@dataclass(frozen=True, eq=False)
class NormalForm:
    """``k g k^{-1} = (T (+) U, 0 (+) v_U)`` with 1 outside spec(T), spec(U) = {1}."""

    k: AffineMap
    k_inv: AffineMap
    T: np.ndarray
    U: np.ndarray
    v_U: np.ndarray

    @property
    def sizes(self):
        return self.T.shape[0], self.U.shape[0]

    def as_affine(self) -> AffineMap:
        return direct_sum(AffineMap(self.T), AffineMap(self.U, self.v_U))


def normal_form(g: AffineMap, tol: Tolerance = DEFAULT_TOL) -> NormalForm:
    sp = split_at_one(g.linear, tol)
    nt, nu = sp.sizes
    Pv = sp.P @ g.translation
    t = np.zeros(g.dim, dtype=complex)
    if nt:
        # v_T + (I - T) t_T = 0 removes the translation off the unipotent block
        t[:nt] = -np.linalg.solve(np.eye(nt) - sp.T, Pv[:nt])
    k = AffineMap(sp.P, t)
    k_inv = AffineMap(sp.P_inv, -(sp.P_inv @ t))
    return NormalForm(k, k_inv, sp.T, sp.U, Pv[nt:].copy())


def adjoint_witness(N, x) -> AdjointWitness:
    """Strong adjoint c-reality witness ``(B, w)`` for ``(J(0,n), x)``.

    Signs alternate, ``eps_k = (-1)^(k+1)``; the last row of
    ``B x + conj(x) = -conj(N) w`` fixes ``a = -eps_n conj(x_n)/x_n``
    (``a = 1`` when ``x_n = 0``), and the remaining rows give
    ``w_1 = 0``, ``w_{k+1} = -(eps_k a x_k + conj(x_k))``.  Then
    ``B N B^{-1} = -conj(N)``, ``B conj(B) = I``,
    ``B x + conj(x) = -conj(N) w`` and ``B conj(w) + w = 0`` all hold.
    """
    x = np.asarray(x, dtype=complex).reshape(-1)
    n = x.size
    N = as_matrix(N)
    if N.shape != (n, n) or np.any(N != jordan_block(0, n)):
        raise ValueError("adjoint_witness needs N = J(0, n) exactly")
    signs = tuple(1 if k % 2 == 0 else -1 for k in range(n))
    eps = np.array(signs, dtype=float)
    a = complex(-eps[-1] * np.conj(x[-1]) / x[-1]) if x[-1] != 0 else 1.0 + 0j
    a /= abs(a)
    w = np.zeros(n, dtype=complex)
    w[1:] = -(eps[:-1] * a * x[:-1] + np.conj(x[:-1]))
    return AdjointWitness(np.diag(eps * a), w, a, signs)


def _block_reverser(y: np.ndarray, tol: Tolerance):
    """Coninvolutory reverser of ``(J(1,b), y)`` through the Lie algebra."""
    b = y.size
    N = jordan_block(0, b)
    M, C = affine_exp_series(N, tol)
    # Krylov chain of exp(N) on e_b: K^{-1} exp(N) K = J(1,b)
    D = M - np.eye(b)
    cols = [np.eye(b, dtype=complex)[:, b - 1]]
    for _ in range(b - 1):
        cols.insert(0, D @ cols[0])
    K = np.column_stack(cols)
    # (B_m, 0) exp(N, x) (B_m, 0)^{-1} = (J, B_m C x) with B_m = K^{-1}, so x = C^{-1} K y
    x = np.linalg.solve(C, K @ y)
    wit = adjoint_witness(N, x)
    K_inv = np.linalg.solve(K, np.eye(b))
    return K_inv.conj() @ wit.B @ K, K_inv.conj() @ wit.w


def unipotent_reverser(U, v, tol: Tolerance = DEFAULT_TOL) -> ReverserWitness:
    """Coninvolutory reverser of ``(U, v)`` for unipotent ``U``.

    Jordan chains put ``U`` in the form ``(+) J(1, m_i)``; each block is the
    conjugate of an affine exponential ``exp(J(0,m), x)``, whose explicit
    Lie-algebra witness is transported back through both conjugations.
    """
    U = as_matrix(U)
    v = np.asarray(v, dtype=complex).reshape(-1)
    m = U.shape[0]
    g = AffineMap(U, v)
    if m == 0:
        return _measure(g, g, tol, True)
    if not is_unipotent(U, tol):
        raise NotUnipotentError("linear part is not unipotent")
    S, sizes = jordan_chain_basis(U - np.eye(m), tol)
    y = np.linalg.solve(S, v)
    Bs, ws = [], []
    i = 0
    for b in sizes:
        Bb, wb = _block_reverser(y[i:i + b], tol)
        Bs.append(AffineMap(Bb, wb))
        i += b
    H = direct_sum(*Bs)
    S_inv = np.linalg.solve(S, np.eye(m))
    h = AffineMap(S.conj() @ H.linear @ S_inv, S.conj() @ H.translation)
    return _measure(h, g, tol, True)


def two_factor_unipotent(U, v, tol: Tolerance = DEFAULT_TOL) -> FactorizationCertificate:
    g = AffineMap(U, v)
    h = unipotent_reverser(U, v, tol)
    first, second = pair_from_reverser(g, h, tol)
    return make_certificate(g, (first, second), ("unipotent: Jordan chains + affine exponential witness",), tol=tol)


def _two_factor_reverser(g: AffineMap, rng, tol: Tolerance, notes: list) -> ReverserWitness:
    nf = normal_form(g, tol)
    nt, nu = nf.sizes
    notes.append(f"normal form: T block {nt}, unipotent block {nu}")
    parts = []
    if nt:
        wT = coninvolutory_reverser(nf.T, rng, tol)
        hT = affine_reverser(AffineMap(nf.T), wT.linear, tol)
        parts.append(hT.reverser)
        notes.append(f"T reverser: residuals {wT.residual_reverse:.2e}/{wT.residual_coninv:.2e}")
    if nu:
        hU = unipotent_reverser(nf.U, nf.v_U, tol)
        parts.append(hU.reverser)
        notes.append(f"U reverser: residuals {hU.residual_reverse:.2e}/{hU.residual_coninv:.2e}")
    H = ReverserWitness(direct_sum(*parts), True, float("nan"), float("nan"), nf.as_affine())
    return transport_reverser(nf.k_inv, H, tol, k_inv=nf.k)


def two_factor(g: AffineMap, tol: Tolerance = DEFAULT_TOL, rng=None) -> FactorizationCertificate:
    """``g = g_1 g_2`` with coninvolutions ``g_i``; needs ``L(g)`` c-reversible."""
    if not is_c_reversible_affine(g, tol):
        raise CReversibilityRequired("linear part is not c-reversible")
    notes = [_seed_note(rng)]
    seed = _seed_of(rng)
    rng = _rng(rng)
    h = _two_factor_reverser(g, rng, tol, notes)
    first, second = pair_from_reverser(g, h, tol)
    return make_certificate(g, (first, second), notes, seed, tol)


def con_sqrt(g: AffineMap, rng=None, tol: Tolerance = DEFAULT_TOL) -> AffineMap:
    """``h`` with ``g = h conj(h)^{-1}`` for a coninvolution ``g``.

    ``B = mu A + conj(mu) I`` satisfies ``A conj(B) = B`` whenever
    ``A conj(A) = I``; ``h = (B, v/2)``.
    """
    if not is_coninvolution(g, tol):
        raise NotConinvolutionError("con_sqrt needs a coninvolution")
    rng = _rng(rng)
    A, v = g.linear, g.translation
    n = g.dim
    best = None
    for _ in range(tol.max_retries):
        mu = np.exp(1j * rng.uniform(0, 2 * np.pi))
        B = mu * A + np.conj(mu) * np.eye(n)
        if not rcond(B) > tol.rank_cut:
            continue
        h = AffineMap(B, v / 2)
        back = affine_compose(h, affine_inverse(affine_conj(h), tol))
        r = affine_distance(back, g) / max(1.0, affine_norm(g))
        if r <= tol.residual_rel:
            return h
        best = r if best is None else min(best, r)
    raise RetriesExhausted(f"con_sqrt: no admissible mu in {tol.max_retries} draws (best residual {best})", best)


def _det_modulus_check(A: np.ndarray, tol: Tolerance):
    sign, logdet = np.linalg.slogdet(A)
    if sign == 0:
        raise SingularMatrixError("linear part is singular")
    if abs(np.expm1(logdet)) > tol.residual_rel:
        raise DeterminantModulusNotOne(f"|det L(g)| = {np.exp(logdet):.12g} != 1")


def three_factor_with_witness(g: AffineMap, k: AffineMap, tol: Tolerance = DEFAULT_TOL,
                              rng=None) -> FactorizationCertificate:
    """Three coninvolutions from a witness ``k`` with ``k g conj(k)^{-1}`` c-reversible.

    With ``k g conj(k)^{-1} = g_1 g_2`` the factors are
    ``(k^{-1} g_1 conj(k)) (conj(k)^{-1} g_2 k) (k^{-1} conj(k))``: two
    consimilarity transports of coninvolutions and one ``s conj(s)^{-1}``.
    """
    _det_modulus_check(g.linear, tol)
    notes = [_seed_note(rng)]
    g2 = consimilarity_transform(k, g, tol)
    try:
        inner = two_factor(g2, tol, rng)
    except CReversibilityRequired as exc:
        raise WitnessRejected(f"witness does not make g c-reversible: {exc}") from exc
    g1, g2f = inner.factors
    k_inv = affine_inverse(k, tol)
    kb = affine_conj(k)
    kb_inv = affine_conj(k_inv)
    f1 = affine_compose(affine_compose(k_inv, g1), kb)
    f2 = affine_compose(affine_compose(kb_inv, g2f), k)
    f3 = affine_compose(k_inv, kb)
    notes += list(inner.provenance[1:]) + ["three: consimilarity transport by the witness"]
    return make_certificate(g, (f1, f2, f3), notes, _seed_of(rng), tol)


def are_consimilar(A, B, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Nonsingular ``A``, ``B`` are consimilar iff ``A conj(A)`` and ``B conj(B)`` are similar."""
    A, B = as_matrix(A), as_matrix(B)
    for M, name in ((A, "A"), (B, "B")):
        if not rcond(M) > tol.rank_cut:
            raise SingularMatrixError(f"{name} is singular")
    return are_similar(A @ A.conj(), B @ B.conj(), tol)


def _is_scalar(T: np.ndarray, tol: Tolerance) -> bool:
    n = T.shape[0]
    c = np.trace(T) / n
    return fro(T - c * np.eye(n)) <= tol.residual_rel * max(1.0, fro(T))


def _lu_prescribed(T, betas, gammas, rng, tol):
    """``T = S L U S^{-1}`` with L lower/U upper triangular, diagonals betas/gammas."""
    n = T.shape[0]
    if n == 1:
        return np.eye(1, dtype=complex), np.array([[betas[0]]]), np.array([[gammas[0]]])
    alpha = betas[0] * gammas[0]
    for _ in range(tol.max_retries):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u /= np.linalg.norm(u)
        second = T @ u - alpha * u
        if np.linalg.norm(second) <= np.sqrt(tol.rank_cut) * max(1.0, fro(T)):
            continue
        # basis (u, Tu - alpha u, orthonormal completion): first column of T becomes (alpha, 1, 0, ...)
        Q, _ = np.linalg.qr(np.column_stack([u, second]), mode="complete")
        S1 = np.column_stack([u, second, Q[:, 2:]])
        if not rcond(S1) > np.sqrt(tol.rank_cut):
            continue
        M = np.linalg.solve(S1, T @ S1)
        r, c, T2 = M[0, 1:], M[1:, 0], M[1:, 1:]
        schur = T2 - np.outer(c, r) / M[0, 0]
        if n - 1 >= 2 and _is_scalar(schur, tol):
            continue
        S2, L2, U2 = _lu_prescribed(schur, betas[1:], gammas[1:], rng, tol)
        S = S1 @ _bdiag(np.eye(1), S2)
        S2_inv = np.linalg.solve(S2, np.eye(n - 1))
        L = np.zeros((n, n), dtype=complex)
        U = np.zeros((n, n), dtype=complex)
        L[0, 0], U[0, 0] = betas[0], gammas[0]
        L[1:, 0] = (S2_inv @ c) / gammas[0]
        U[0, 1:] = (r @ S2) / betas[0]
        L[1:, 1:], U[1:, 1:] = L2, U2
        return S, L, U
    raise RetriesExhausted("prescribed-spectrum recursion kept hitting a scalar Schur complement")


def _bdiag(a, b):
    n1, n2 = a.shape[0], b.shape[0]
    out = np.zeros((n1 + n2, n1 + n2), dtype=complex)
    out[:n1, :n1] = a
    out[n1:, n1:] = b
    return out


def prescribed_spectrum_product(T, betas, gammas, tol: Tolerance = DEFAULT_TOL, rng=None):
    """``T = X Y`` with ``spec(X) = betas`` and ``spec(Y) = gammas``.

    ``T`` must be invertible and nonscalar with ``prod(betas * gammas) = det T``.
    Built as ``X = S L S^{-1}``, ``Y = S U S^{-1}`` from a triangular
    factorization ``S^{-1} T S = L U`` obtained by peeling one row/column at
    a time: a basis in which ``T[0,0] = beta_1 gamma_1``, then recursion on
    the Schur complement (determinant ``det T / (beta_1 gamma_1)``).
    """
    T = as_matrix(T)
    n = T.shape[0]
    betas = np.asarray(betas, dtype=complex).reshape(-1)
    gammas = np.asarray(gammas, dtype=complex).reshape(-1)
    if betas.size != n or gammas.size != n:
        raise ValueError("need n prescribed values for each factor")
    if not rcond(T) > tol.rank_cut:
        raise SingularMatrixError("T is singular")
    if n > 1 and _is_scalar(T, tol):
        raise NonScalarRequired("scalar matrices have no freely prescribed two-factor split")
    det = np.linalg.det(T)
    # precondition guard, not a certificate gate: allow rounding in det
    if abs(np.prod(betas * gammas) - det) > max(10 * tol.residual_rel, 1e-8) * max(1.0, abs(det)):
        raise ValueError("prod(betas * gammas) must equal det T")
    rng = _rng(rng)
    S, L, U = _lu_prescribed(T, betas, gammas, rng, tol)
    S_inv = np.linalg.solve(S, np.eye(n))
    return S @ L @ S_inv, S @ U @ S_inv


def _unimodular_spread(n: int, target_arg: float, rng) -> np.ndarray:
    """n distinct unit complex numbers, gaps >= pi/n, product ``exp(i target_arg)``."""
    jitter = rng.uniform(-0.25, 0.25, n) * (2 * np.pi / n)
    jitter -= jitter.mean()
    base = 2 * np.pi * np.arange(n) / n + jitter
    phi = (target_arg - base.sum()) / n + 2 * np.pi * rng.integers(n) / n
    return np.exp(1j * (base + phi))


def c_reversible_split(T, rng=None, tol: Tolerance = DEFAULT_TOL):
    """``T = X Y`` with both factors c-reversible; needs ``|det T| = 1``."""
    T = as_matrix(T)
    n = T.shape[0]
    _det_modulus_check(T, tol)
    eye = np.eye(n, dtype=complex)
    if n == 0 or is_c_reversible_matrix(T, tol):
        return T.copy(), eye
    if _is_scalar(T, tol):
        return T.copy(), eye
    rng = _rng(rng)
    det = np.linalg.det(T)
    last = None
    for _ in range(tol.max_retries):
        betas = _unimodular_spread(n, rng.uniform(0, 2 * np.pi), rng)
        gammas = _unimodular_spread(n, float(np.angle(det / np.prod(betas))), rng)
        try:
            X, Y = prescribed_spectrum_product(T, betas, gammas, tol, rng)
        except RetriesExhausted as exc:
            last = exc
            continue
        r = fro(X @ Y - T) / max(1.0, fro(T))
        try:
            ok = r <= tol.residual_rel and is_c_reversible_matrix(X, tol) and is_c_reversible_matrix(Y, tol)
        except (IllConditionedError, SingularMatrixError) as exc:
            last = exc
            continue
        if ok:
            return X, Y
        last = r
    raise RetriesExhausted(f"c_reversible_split failed after {tol.max_retries} draws ({last})")


def four_factor(g: AffineMap, rng=None, tol: Tolerance = DEFAULT_TOL) -> FactorizationCertificate:
    """At most four coninvolutions for any ``g`` with ``|det L(g)| = 1``.

    Returns a kind-two certificate when ``g`` is already c-reversible.
    """
    _det_modulus_check(g.linear, tol)
    seed_note = _seed_note(rng)
    seed = _seed_of(rng)
    rng = _rng(rng)
    if is_c_reversible_affine(g, tol):
        cert = two_factor(g, tol, rng)
        return FactorizationCertificate(cert.input, cert.factors, cert.kind, cert.residual_product,
                                        cert.residual_factors, (seed_note,) + cert.provenance[1:]
                                        + ("four: input already c-reversible",), seed)
    notes = [seed_note]
    nf = normal_form(g, tol)
    nt, nu = nf.sizes
    notes.append(f"normal form: T block {nt}, unipotent block {nu}")
    X, Y = c_reversible_split(nf.T, rng, tol)
    notes.append("T = X Y with X, Y c-reversible (prescribed unimodular spectra)")
    bx = coninvolutory_reverser(X, rng, tol).linear
    by = coninvolutory_reverser(Y, rng, tol).linear
    parts12 = [AffineMap(bx)]
    parts34 = [AffineMap(by)]
    if nu:
        parts12.append(unipotent_reverser(nf.U, nf.v_U, tol).reverser)
        parts34.append(identity(nu))
    # g = k^{-1} (X (+) U, 0 (+) v_U) k . k^{-1} (Y (+) I, 0) k; each pair keeps a strong reverser
    pair12 = direct_sum(AffineMap(X), AffineMap(nf.U, nf.v_U))
    pair34 = direct_sum(AffineMap(Y), identity(nu))
    factors = []
    for pair, parts in ((pair12, parts12), (pair34, parts34)):
        H = ReverserWitness(direct_sum(*parts), True, float("nan"), float("nan"), pair)
        h = transport_reverser(nf.k_inv, H, tol, k_inv=nf.k)
        p = affine_compose(affine_compose(nf.k_inv, pair), nf.k)
        factors += list(pair_from_reverser(p, h, tol))
    notes.append("pairs transported through the normal-form conjugation")
    return make_certificate(g, factors, notes, seed, tol)
