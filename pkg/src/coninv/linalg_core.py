"""Affine group arithmetic over the complex numbers.

An element of Aff(n, C) is stored as the pair ``(A, v)`` acting by
``x -> A x + v``.  Everything here is a pure function of immutable inputs.
Norms are Frobenius throughout.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lapack, lu_factor, lu_solve

from .errors import DimensionMismatch, SingularMatrixError

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "AffineMap",
    "ConinvolutionCheck",
    "as_matrix",
    "fro",
    "rcond",
    "require_invertible",
    "identity",
    "affine_compose",
    "affine_inverse",
    "affine_conj",
    "affine_norm",
    "affine_distance",
    "direct_sum",
    "is_coninvolution",
    "homogeneous_embed",
    "group_conjugate",
    "consimilarity_transform",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds threaded through every decision.

    residual_rel
        Relative bound for identity residuals (scaled by operand norms).
    eig_cluster
        Radius under which two simple eigenvalues are considered equal.
    rank_cut
        Relative singular-value cut for numerical rank; also the
        reciprocal-condition floor for invertibility.
    max_retries
        Budget for every randomized construction.
    """

    residual_rel: float = 1e-9
    eig_cluster: float = 1e-7
    rank_cut: float = 1e-10
    max_retries: int = 32

    def __post_init__(self):
        for name in ("residual_rel", "eig_cluster", "rank_cut"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if int(self.max_retries) != self.max_retries or self.max_retries < 1:
            raise ValueError(f"max_retries must be a positive integer, got {self.max_retries!r}")


DEFAULT_TOL = Tolerance()


def as_matrix(a) -> np.ndarray:
    """Return a complex 2-D copy of ``a``; scalars become 1x1."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AffineMap:
    """The map ``x -> linear @ x + translation`` on C^n."""

    linear: np.ndarray
    translation: np.ndarray = field(default=None)

    def __post_init__(self):
        A = as_matrix(self.linear)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"linear part must be square, got {A.shape}")
        n = A.shape[0]
        if self.translation is None:
            v = np.zeros(n, dtype=complex)
        else:
            v = np.array(self.translation, dtype=complex).reshape(-1)
        if v.shape != (n,):
            raise DimensionMismatch(f"translation has length {v.size}, expected {n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("translation entries must be finite")
        object.__setattr__(self, "linear", _frozen(A))
        object.__setattr__(self, "translation", _frozen(v))

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    def __call__(self, x):
        return self.linear @ np.asarray(x, dtype=complex) + self.translation

    def __matmul__(self, other: "AffineMap") -> "AffineMap":
        return affine_compose(self, other)

    def __repr__(self):
        return f"AffineMap(linear={self.linear.tolist()}, translation={self.translation.tolist()})"


@dataclass(frozen=True)
class ConinvolutionCheck:
    """Outcome of :func:`is_coninvolution`; truthy iff both residuals pass."""

    ok: bool
    residual_linear: float
    residual_translation: float

    def __bool__(self):
        return bool(self.ok)

    @property
    def residual(self) -> float:
        return max(self.residual_linear, self.residual_translation)


def fro(x) -> float:
    return float(np.linalg.norm(x))


def rcond(A: np.ndarray) -> float:
    """LAPACK 1-norm reciprocal condition estimate from a pivoted LU."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 1.0
    anorm = float(np.abs(A).sum(axis=0).max())
    if anorm == 0.0:
        return 0.0
    with warnings.catch_warnings():
        # exact singularity is reported through the returned estimate
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, _ = lu_factor(A, check_finite=False)
    rc, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0:
        return 0.0
    return float(rc)


def require_invertible(A: np.ndarray, tol: Tolerance = DEFAULT_TOL, what: str = "matrix"):
    """Raise SingularMatrixError unless ``rcond(A) > rank_cut``; return LU factors."""
    A = np.asarray(A, dtype=complex)
    rc = rcond(A)
    if not rc > tol.rank_cut:
        raise SingularMatrixError(f"{what} is numerically singular (rcond={rc:.3e})")
    return lu_factor(A, check_finite=False)


def identity(n: int) -> AffineMap:
    return AffineMap(np.eye(n, dtype=complex), np.zeros(n, dtype=complex))


def _same_dim(f: AffineMap, g: AffineMap):
    if f.dim != g.dim:
        raise DimensionMismatch(f"dimension mismatch: {f.dim} vs {g.dim}")


def affine_compose(f: AffineMap, g: AffineMap) -> AffineMap:
    """``f o g = (A_f A_g, A_f v_g + v_f)``."""
    _same_dim(f, g)
    return AffineMap(f.linear @ g.linear, f.linear @ g.translation + f.translation)


def affine_inverse(g: AffineMap, tol: Tolerance = DEFAULT_TOL) -> AffineMap:
    lu = require_invertible(g.linear, tol, "linear part")
    n = g.dim
    Ainv = lu_solve(lu, np.eye(n, dtype=complex), check_finite=False)
    return AffineMap(Ainv, -(Ainv @ g.translation))


def affine_conj(g: AffineMap) -> AffineMap:
    return AffineMap(g.linear.conj(), g.translation.conj())


def affine_norm(g: AffineMap) -> float:
    """Frobenius norm of the pair, ``sqrt(|A|^2 + |v|^2)``."""
    return float(np.sqrt(fro(g.linear) ** 2 + fro(g.translation) ** 2))


def affine_distance(f: AffineMap, g: AffineMap) -> float:
    _same_dim(f, g)
    return float(np.sqrt(fro(f.linear - g.linear) ** 2 + fro(f.translation - g.translation) ** 2))


def direct_sum(*maps: AffineMap) -> AffineMap:
    """Block-diagonal linear part, concatenated translations. Empty maps allowed."""
    blocks = [m.linear for m in maps if m.dim]
    n = sum(b.shape[0] for b in blocks)
    A = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        A[i:i + k, i:i + k] = b
        i += k
    v = np.concatenate([m.translation for m in maps]) if maps else np.zeros(0, dtype=complex)
    return AffineMap(A, v)


def is_coninvolution(g: AffineMap, tol: Tolerance = DEFAULT_TOL) -> ConinvolutionCheck:
    """Test ``g conj(g) = e`` componentwise.

    The residuals returned are already divided by their scales,
    ``max(1, |A|^2)`` for ``A conj(A) - I`` and ``max(1, |A||v|)`` for
    ``A conj(v) + v``, so both are compared directly against
    ``tol.residual_rel``.
    """
    A, v = g.linear, g.translation
    nA = fro(A)
    r_lin = fro(A @ A.conj() - np.eye(g.dim)) / max(1.0, nA * nA)
    r_tr = fro(A @ v.conj() + v) / max(1.0, nA * fro(v))
    ok = r_lin <= tol.residual_rel and r_tr <= tol.residual_rel
    return ConinvolutionCheck(bool(ok), float(r_lin), float(r_tr))


def homogeneous_embed(g: AffineMap) -> np.ndarray:
    """The (n+1)x(n+1) matrix ``[[A, v], [0, 1]]``."""
    n = g.dim
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = g.linear
    M[:n, n] = g.translation
    M[n, n] = 1.0
    return M


def group_conjugate(k: AffineMap, g: AffineMap, tol: Tolerance = DEFAULT_TOL) -> AffineMap:
    """``k g k^{-1}``."""
    _same_dim(k, g)
    return affine_compose(affine_compose(k, g), affine_inverse(k, tol))


def consimilarity_transform(k: AffineMap, g: AffineMap, tol: Tolerance = DEFAULT_TOL) -> AffineMap:
    """``k g conj(k)^{-1}``; maps coninvolutions to coninvolutions."""
    _same_dim(k, g)
    return affine_compose(affine_compose(k, g), affine_inverse(affine_conj(k), tol))
