"""Eigenvalues, Jordan structure and the few matrix functions the factorizations need.

Jordan structure is read off rank sequences of ``(A - mu I)^k`` restricted to
the invariant subspace of each eigenvalue group (obtained by reordering a
complex Schur form), never from eigenvector chains of ``A`` itself.

Eigenvalue grouping is multiplicity aware: a Jordan block of size m spreads
its computed eigenvalues over a disc of radius roughly ``eta**(1/m)`` for a
backward error ``eta``.  A candidate group of m eigenvalues is therefore
formed by single linkage at radius ``eig_cluster**(1/m)`` and kept only if the
rank sequence certifies an m-fold eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.linalg import lapack, schur, solve_sylvester, sqrtm, svdvals

from .errors import (
    BorderlineSpectrumError,
    BranchCutError,
    DimensionMismatch,
    EigenSolverError,
    IllConditionedError,
    NotNilpotentError,
    NotUnipotentError,
)
from .linalg_core import DEFAULT_TOL, AffineMap, Tolerance, as_matrix, fro, require_invertible

__all__ = [
    "JordanStructure",
    "SplitAtOne",
    "eigenvalues",
    "cluster",
    "numerical_rank",
    "jordan_structure",
    "are_similar",
    "is_unipotent",
    "split_at_one",
    "nilpotent_exp",
    "unipotent_log",
    "affine_exp_series",
    "affine_exp",
    "principal_inv_sqrt",
    "spectrum_is_conjugation_closed",
    "jordan_chain_basis",
    "jordan_block",
]


def jordan_block(lam: complex, m: int) -> np.ndarray:
    return lam * np.eye(m, dtype=complex) + np.eye(m, k=1, dtype=complex)


@dataclass(frozen=True)
class JordanStructure:
    """Eigenvalue representatives with their Jordan block-size multisets.

    ``clusters`` is a tuple of ``(mu, blocks)`` with ``blocks`` a tuple of
    block sizes sorted in decreasing order.
    """

    clusters: tuple

    @property
    def n(self) -> int:
        return sum(sum(b) for _, b in self.clusters)

    def blocks_at(self, lam: complex, radius: float):
        for mu, blocks in self.clusters:
            if abs(mu - lam) <= radius * max(1.0, abs(lam)):
                return blocks
        return None

    def __iter__(self):
        return iter(self.clusters)

    def __len__(self):
        return len(self.clusters)


@dataclass(frozen=True)
class _Group:
    mu: complex
    index: tuple
    blocks: tuple


def _schur(A: np.ndarray):
    try:
        T, Z = schur(A, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"Schur iteration failed: {exc}") from exc
    return T, Z


def eigenvalues(A, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("eigenvalues of a non-square matrix")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc


def _linkage_components(points: np.ndarray, radius: float, relative: bool = False):
    """Single-linkage connected components; returns lists of indices."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = abs(points[i] - points[j])
            if relative:
                d /= max(1.0, abs(points[i]), abs(points[j]))
            if d <= radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    comps = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    return list(comps.values())


def cluster(eigs, tol: Tolerance = DEFAULT_TOL):
    """Single-linkage clustering at radius ``tol.eig_cluster``.

    Returns ``[(mean, multiplicity), ...]`` ordered by ``(re, im)`` of the
    representative.
    """
    pts = np.asarray(eigs, dtype=complex).reshape(-1)
    order = sorted(range(len(pts)), key=lambda i: (pts[i].real, pts[i].imag))
    pts = pts[order]
    out = []
    for comp in _linkage_components(pts, tol.eig_cluster):
        out.append((complex(pts[comp].mean()), len(comp)))
    out.sort(key=lambda c: (c[0].real, c[0].imag))
    return out


def numerical_rank(M: np.ndarray, tol: Tolerance = DEFAULT_TOL, floor: float = 0.0,
                   strict: bool = True):
    """Count singular values above ``rank_cut * max(sigma_max, floor)``.

    With ``strict`` an IllConditionedError is raised when a singular value
    lies within a factor of 10 of the cut; otherwise ``(rank, ambiguous)``
    is returned.
    """
    if M.size == 0:
        return (0, False) if not strict else 0
    s = svdvals(M)
    cut = tol.rank_cut * max(float(s[0]) if s.size else 0.0, floor)
    rank = int(np.sum(s > cut))
    ambiguous = bool(np.any((s > cut / 10) & (s < cut * 10))) if cut > 0 else False
    if strict:
        if ambiguous:
            raise IllConditionedError(
                f"singular values straddle the rank cut {cut:.3e}: {np.array2string(s, precision=3)}")
        return rank
    return rank, ambiguous


def _blocks_from_nullities(d):
    """Block sizes from nullities d[0]=0, d[1], ..., d[p] of successive powers."""
    ge = [d[k] - d[k - 1] for k in range(1, len(d))]
    if any(x < 0 for x in ge) or any(ge[k] < ge[k + 1] for k in range(len(ge) - 1)):
        return None
    blocks = []
    for k in range(len(ge)):
        nxt = ge[k + 1] if k + 1 < len(ge) else 0
        blocks += [k + 1] * (ge[k] - nxt)
    return tuple(sorted(blocks, reverse=True))


def _reorder(T: np.ndarray, Z: np.ndarray, index) -> tuple:
    """Move the selected diagonal entries of a complex Schur form to the top-left."""
    n = T.shape[0]
    select = np.zeros(n, dtype=np.int32)
    select[list(index)] = 1
    if select.all() or not select.any():
        return T, Z
    ts, qs, _, m, _, _, info = lapack.ztrsen(select, T, Z, job="N")
    if info != 0 or m != len(index):
        raise IllConditionedError("Schur reordering failed")
    return ts, qs


def _power_ranks(N: np.ndarray, scale: float, tol: Tolerance, strict: bool, stop: int | None = None):
    """Nullities of N^0, N^1, ... until the power vanishes (or ``stop`` steps).

    The cut for ``N^k`` is ``rank_cut * max(sigma_max, floor_k)`` where
    ``floor_k = scale * sum_j |N^j| |N^(k-1-j)|`` is the first-order size of
    the rounding noise a backward error of relative size one would leave in
    the k-th power.  Without it a power that should vanish is ranked
    against its own noise.
    """
    m = N.shape[0]
    powers = [np.eye(m, dtype=complex)]
    norms = [np.sqrt(m)]
    d = [0]
    ambiguous = False
    limit = m if stop is None else stop
    while d[-1] < m and len(d) <= limit:
        powers.append(powers[-1] @ N)
        norms.append(fro(powers[-1]))
        k = len(powers) - 1
        floor = scale * sum(norms[j] * norms[k - 1 - j] for j in range(k))
        if strict:
            rank = numerical_rank(powers[k], tol, floor=floor)
        else:
            rank, amb = numerical_rank(powers[k], tol, floor=floor, strict=False)
            ambiguous |= amb
        d.append(m - rank)
    return d, powers, ambiguous


def _block_structure(R: np.ndarray, mu: complex, tol: Tolerance):
    """Jordan blocks of ``R`` assuming its only eigenvalue is ``mu``; None if not."""
    m = R.shape[0]
    N = R - mu * np.eye(m)
    d, _, ambiguous = _power_ranks(N, max(1.0, fro(R)), tol, strict=False)
    if ambiguous or d[-1] != m:
        return None
    return _blocks_from_nullities(d)


def _spectral_groups(A: np.ndarray, tol: Tolerance):
    """Group the Schur eigenvalues of ``A`` into certified multiple eigenvalues."""
    n = A.shape[0]
    T, Z = _schur(A)
    lam = np.diag(T).copy()
    unassigned = list(range(n))
    unresolved = set()
    groups = []
    for m in range(n, 0, -1):
        if len(unassigned) < m:
            continue
        pts = lam[unassigned]
        radius = tol.eig_cluster ** (1.0 / m)
        accepted = []
        for comp in _linkage_components(pts, radius, relative=True):
            if len(comp) != m:
                continue
            idx = tuple(unassigned[i] for i in comp)
            mu = complex(lam[list(idx)].mean())
            if m == 1:
                # a leftover of a rejected multi-eigenvalue group is never read as simple
                if idx[0] in unresolved:
                    continue
                blocks = (1,)
            else:
                ts, _ = _reorder(T, Z, idx)
                blocks = _block_structure(ts[:m, :m], mu, tol)
                if blocks is None:
                    unresolved.update(idx)
                    continue
            accepted.append(_Group(mu, idx, blocks))
        for g in accepted:
            groups.append(g)
            unassigned = [i for i in unassigned if i not in g.index]
    if unassigned:
        raise IllConditionedError(
            f"could not certify the Jordan structure of eigenvalues {lam[unassigned]}")
    groups.sort(key=lambda g: (g.mu.real, g.mu.imag))
    return groups, T, Z


def jordan_structure(A, tol: Tolerance = DEFAULT_TOL) -> JordanStructure:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("Jordan structure of a non-square matrix")
    groups, _, _ = _spectral_groups(A, tol)
    return JordanStructure(tuple((g.mu, g.blocks) for g in groups))


def _match(s1: JordanStructure, s2: JordanStructure, tol: Tolerance) -> bool:
    if len(s1) != len(s2):
        return False
    used = set()
    for mu, blocks in s1:
        hit = None
        for j, (nu, b2) in enumerate(s2):
            if j not in used and abs(mu - nu) <= tol.eig_cluster * max(1.0, abs(mu)) and b2 == blocks:
                hit = j
                break
        if hit is None:
            return False
        used.add(hit)
    return True


def are_similar(A, B, tol: Tolerance = DEFAULT_TOL) -> bool:
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    return _match(jordan_structure(A, tol), jordan_structure(B, tol), tol)


def is_unipotent(U, tol: Tolerance = DEFAULT_TOL) -> bool:
    U = as_matrix(U)
    if U.shape[0] == 0:
        return True
    try:
        s = jordan_structure(U, tol)
    except IllConditionedError:
        return False
    return len(s) == 1 and abs(s.clusters[0][0] - 1) <= tol.eig_cluster


@dataclass(frozen=True, eq=False)
class SplitAtOne:
    """``P A P^{-1} = T (+) U`` with ``1`` outside spec(T) and spec(U) = {1}."""

    P: np.ndarray
    P_inv: np.ndarray
    T: np.ndarray
    U: np.ndarray

    @property
    def sizes(self):
        return self.T.shape[0], self.U.shape[0]


def split_at_one(A, tol: Tolerance = DEFAULT_TOL) -> SplitAtOne:
    A = as_matrix(A)
    n = A.shape[0]
    require_invertible(A, tol)
    groups, T, Z = _spectral_groups(A, tol)
    unit = [g for g in groups if abs(g.mu - 1) <= tol.eig_cluster]
    u_idx = set(unit[0].index) if unit else set()
    lam = np.diag(T)
    for i in range(n):
        if i not in u_idx and abs(lam[i] - 1) <= 10 * tol.eig_cluster:
            raise BorderlineSpectrumError(f"eigenvalue {lam[i]} is near 1 but not in the unipotent cluster")
    m = len(u_idx)
    eye = np.eye(n, dtype=complex)
    if m == 0:
        return SplitAtOne(eye, eye.copy(), A.copy(), np.zeros((0, 0), dtype=complex))
    if m == n:
        return SplitAtOne(eye, eye.copy(), np.zeros((0, 0), dtype=complex), A.copy())
    t_idx = [i for i in range(n) if i not in u_idx]
    ts, qs = _reorder(T, Z, t_idx)
    k = n - m
    R11, R12, R22 = ts[:k, :k], ts[:k, k:], ts[k:, k:]
    # T X - X U = -C decouples the off-diagonal block; uniquely solvable as 1 is not in spec(T)
    X = solve_sylvester(R11, -R22, -R12)
    Y_inv = np.eye(n, dtype=complex)
    Y_inv[:k, k:] = -X
    Y = np.eye(n, dtype=complex)
    Y[:k, k:] = X
    P = Y_inv @ qs.conj().T
    P_inv = qs @ Y
    return SplitAtOne(P, P_inv, R11.copy(), R22.copy())


def _check_nilpotent(N: np.ndarray, tol: Tolerance):
    n = N.shape[0]
    if n == 0:
        return
    Nn = np.linalg.matrix_power(N, n)
    if fro(Nn) > tol.residual_rel * max(1.0, fro(N)) ** n:
        raise NotNilpotentError(f"matrix is not nilpotent (|N^n|={fro(Nn):.3e})")


def nilpotent_exp(N, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Finite exponential series of a nilpotent matrix."""
    N = as_matrix(N)
    _check_nilpotent(N, tol)
    n = N.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, n):
        term = term @ N / k
        out = out + term
    return out


def unipotent_log(U, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Nilpotent ``N`` with ``exp(N) = U``; the log series terminates at ``k = n``."""
    U = as_matrix(U)
    n = U.shape[0]
    D = U - np.eye(n)
    try:
        _check_nilpotent(D, tol)
    except NotNilpotentError as exc:
        raise NotUnipotentError(str(exc)) from exc
    out = np.zeros((n, n), dtype=complex)
    P = np.eye(n, dtype=complex)
    for k in range(1, n):
        P = P @ D
        out = out + ((-1) ** (k + 1) / k) * P
    return out


def affine_exp_series(N, tol: Tolerance = DEFAULT_TOL):
    """Return ``(exp N, C)`` with ``C = sum_{k<n} N^k / (k+1)!``."""
    N = as_matrix(N)
    _check_nilpotent(N, tol)
    n = N.shape[0]
    E = np.eye(n, dtype=complex)
    C = np.eye(n, dtype=complex)
    P = np.eye(n, dtype=complex)
    for k in range(1, n):
        P = P @ N
        E = E + P / factorial(k)
        C = C + P / factorial(k + 1)
    return E, C


def affine_exp(N, x, tol: Tolerance = DEFAULT_TOL) -> AffineMap:
    """Group exponential of the affine Lie algebra element ``(N, x)``: ``(exp N, C x)``."""
    E, C = affine_exp_series(N, tol)
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape != (E.shape[0],):
        raise DimensionMismatch(f"x has length {x.size}, expected {E.shape[0]}")
    return AffineMap(E, C @ x)


def _on_branch_cut(lam: np.ndarray, tol: Tolerance) -> bool:
    mag = np.maximum(1.0, np.abs(lam))
    return bool(np.any((lam.real <= tol.eig_cluster * mag) & (np.abs(lam.imag) <= tol.eig_cluster * mag)))


def spectrum_is_conjugation_closed(S, tol: Tolerance = DEFAULT_TOL, radius: float | None = None) -> bool:
    """True when the eigenvalue multiset of ``S`` is invariant under conjugation.

    This is what makes the principal square root of ``S`` interpolable by a
    polynomial with real coefficients.
    """
    lam = eigenvalues(S, tol)
    r = tol.eig_cluster ** (1.0 / max(1, len(lam))) if radius is None else radius
    remaining = list(lam.conj())
    for x in lam:
        d = [abs(x - y) / max(1.0, abs(x)) for y in remaining]
        j = int(np.argmin(d))
        if d[j] > r:
            return False
        remaining.pop(j)
    return True


def principal_inv_sqrt(S, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Principal ``S^{-1/2}`` via the Schur square root.

    Raises BranchCutError when an eigenvalue lies on the closed negative
    real axis (within ``eig_cluster``).
    """
    S = as_matrix(S)
    n = S.shape[0]
    if n == 0:
        return S.copy()
    lam = eigenvalues(S, tol)
    if _on_branch_cut(lam, tol):
        raise BranchCutError("spectrum meets (-inf, 0]")
    R = sqrtm(S)
    if isinstance(R, tuple):
        R = R[0]
    R = np.asarray(R, dtype=complex)
    if not np.all(np.isfinite(R)):
        raise BranchCutError("square root did not converge")
    return np.linalg.solve(R, np.eye(n, dtype=complex))


def _phase_normalize(x: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(x)))
    if abs(x[j]) == 0:
        return x
    return x * (abs(x[j]) / x[j])


def _kernel(M: np.ndarray, rank: int) -> np.ndarray:
    _, _, Vh = np.linalg.svd(M)
    return Vh[rank:].conj().T


def jordan_chain_basis(N, tol: Tolerance = DEFAULT_TOL):
    """Jordan chains of a nilpotent matrix.

    Returns ``(S, sizes)`` with ``S^{-1} N S = J(0, sizes[0]) (+) J(0, sizes[1]) (+) ...``,
    sizes in decreasing order.  Each chain is ``[N^{k-1} x, ..., N x, x]`` for a
    unit top vector ``x`` chosen as far as possible from the span of the
    lower kernel and of the longer chains already picked.
    """
    N = as_matrix(N)
    n = N.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex), ()
    _check_nilpotent(N, tol)
    d, powers, _ = _power_ranks(N, max(1.0, fro(N)), tol, strict=True)
    if d[-1] != n:
        raise IllConditionedError("nilpotent rank sequence did not terminate")
    sizes = _blocks_from_nullities(d)
    if sizes is None:
        raise IllConditionedError(f"inconsistent rank sequence {d}")
    p = len(d) - 1
    chains = {}
    for k in range(p, 0, -1):
        count = sizes.count(k)
        if count == 0:
            continue
        K = _kernel(powers[k], n - d[k])
        spans = []
        if d[k - 1] > 0:
            spans.append(_kernel(powers[k - 1], n - d[k - 1]))
        for length, tops in chains.items():
            for x in tops:
                spans.append((powers[length - k] @ x).reshape(-1, 1))
        if spans:
            W = np.hstack(spans)
            Q, _ = np.linalg.qr(W)
            M = K - Q @ (Q.conj().T @ K)
        else:
            M = K
        _, s, Vh = np.linalg.svd(M)
        if s.size < count or s[count - 1] < np.sqrt(tol.rank_cut):
            raise IllConditionedError("Jordan chain breakdown")
        tops = []
        for j in range(count):
            x = K @ Vh[j].conj()
            tops.append(_phase_normalize(x / np.linalg.norm(x)))
        chains[k] = tops
    cols = []
    out_sizes = []
    for k in sorted(chains, reverse=True):
        for x in chains[k]:
            cols += [powers[k - 1 - j] @ x for j in range(k)]
            out_sizes.append(k)
    S = np.column_stack(cols)
    require_invertible(S, tol, "Jordan chain basis")
    return S, tuple(out_sizes)
