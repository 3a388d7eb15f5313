"""Independent certificate checks, random instance generators and small oracles.

Verification recomputes every residual from the factors using only the
group primitives in :mod:`coninv.linalg_core`; it never calls back into the
pipelines that produced the certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg_core import (
    DEFAULT_TOL,
    AffineMap,
    Tolerance,
    affine_compose,
    affine_conj,
    affine_distance,
    affine_inverse,
    affine_norm,
    fro,
    identity,
)

__all__ = [
    "InstanceSpec",
    "Check",
    "VerificationReport",
    "verify_certificate",
    "well_conditioned",
    "random_coninvolution",
    "random_c_reversible",
    "random_unipotent_affine",
    "random_unimodular_det",
    "random_general",
    "generate",
    "Dim1Facts",
    "oracle_dim1",
    "oracle_consimilar_2x2",
]

KINDS = ("random_coninvolution", "random_c_reversible", "random_unipotent_affine",
         "random_unimodular_det", "random_general")


@dataclass(frozen=True)
class InstanceSpec:
    kind: str
    dim: int
    seed: int = 0
    cond_cap: float = 1e3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.cond_cap >= 1:
            raise ValueError("cond_cap must be >= 1")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    checks: tuple

    def failures(self):
        return [c for c in self.checks if not c.passed]

    @property
    def worst(self) -> float:
        finite = [c.residual for c in self.checks if np.isfinite(c.residual)]
        return max(finite, default=0.0)

    def __bool__(self):
        return self.passed

    def __str__(self):
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.residual:.3e}" for c in self.checks]
        return "\n".join(lines)


def verify_certificate(cert, tol: Tolerance = DEFAULT_TOL) -> VerificationReport:
    """Re-derive every identity a certificate claims.

    Checks the kind label, ``A conj(A) = I`` and ``A conj(v) + v = 0`` for
    each factor (scaled by ``max(1, |A|^2)`` and ``max(1, |A||v|)``) and the
    product against the input (scaled by ``max(1, |g|)``).
    """
    g = cert.input
    checks = []
    expected = {2: "two", 3: "three", 4: "four"}.get(len(cert.factors))
    checks.append(Check(f"kind '{cert.kind}' matches {len(cert.factors)} factors",
                        0.0 if expected == cert.kind else float("inf"), expected == cert.kind))
    for i, f in enumerate(cert.factors, 1):
        A, v = f.linear, f.translation
        if f.dim != g.dim:
            checks.append(Check(f"factor {i} dimension", float("inf"), False))
            continue
        nA = fro(A)
        r1 = fro(A @ A.conj() - np.eye(f.dim)) / max(1.0, nA * nA)
        r2 = fro(A @ v.conj() + v) / max(1.0, nA * fro(v))
        checks.append(Check(f"factor {i}: A conj(A) = I", r1, r1 <= tol.residual_rel))
        checks.append(Check(f"factor {i}: A conj(v) + v = 0", r2, r2 <= tol.residual_rel))
    if all(f.dim == g.dim for f in cert.factors):
        prod = identity(g.dim)
        for f in cert.factors:
            prod = affine_compose(prod, f)
        r = affine_distance(prod, g) / max(1.0, affine_norm(g))
        checks.append(Check("product of factors = input", r, r <= tol.residual_rel))
    ok = all(c.passed for c in checks)
    return VerificationReport(ok, tuple(checks))


def _gaussian(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def well_conditioned(n: int, cap: float, rng: np.random.Generator, attempts: int = 1000) -> np.ndarray:
    for _ in range(attempts):
        P = _gaussian(rng, n, n)
        if np.linalg.cond(P) <= cap:
            return P
    raise RuntimeError(f"no {n}x{n} draw with condition number <= {cap}")


def random_coninvolution(spec: InstanceSpec) -> AffineMap:
    """``h conj(h)^{-1}`` for a random well-conditioned affine ``h``."""
    rng = spec.rng()
    h = AffineMap(well_conditioned(spec.dim, spec.cond_cap, rng), _gaussian(rng, spec.dim))
    return affine_compose(h, affine_inverse(affine_conj(h)))


def _partition(n: int, max_part: int, rng) -> list:
    parts = []
    while n > 0:
        p = int(rng.integers(1, min(n, max_part) + 1))
        parts.append(p)
        n -= p
    return parts


def _jordan(lam: complex, m: int) -> np.ndarray:
    return lam * np.eye(m, dtype=complex) + np.eye(m, k=1, dtype=complex)


def _block_diag(blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def c_reversible_jordan_data(n: int, rng: np.random.Generator, max_block: int = 3) -> list:
    """Random list of ``(eigenvalue, block size)`` closed under ``lambda -> 1/conj(lambda)``.

    Eigenvalue arguments come from a shuffled grid with spacing ``2 pi / 12``
    so distinct clusters stay well separated.
    """
    angles = list(rng.permutation(12) * (2 * np.pi / 12) + rng.uniform(0, 0.2))
    data = []
    remaining = n
    while remaining > 0:
        choice = rng.integers(3)
        if choice == 0 and remaining >= 2:
            m = int(rng.integers(1, min(max_block, remaining // 2) + 1))
            lam = rng.uniform(1.5, 3.0) * np.exp(1j * angles.pop())
            data += [(lam, m), (1 / np.conj(lam), m)]
            remaining -= 2 * m
        elif choice == 1:
            m = int(rng.integers(1, min(max_block, remaining) + 1))
            data.append((np.exp(1j * angles.pop()), m))
            remaining -= m
        else:
            m = int(rng.integers(1, min(max_block, remaining) + 1))
            data.append((1.0 + 0j, m))
            remaining -= m
    return data


def random_c_reversible(spec: InstanceSpec) -> np.ndarray:
    """``P J P^{-1}`` for paired Jordan data ``J`` and well-conditioned ``P``."""
    rng = spec.rng()
    data = c_reversible_jordan_data(spec.dim, rng)
    J = _block_diag([_jordan(lam, m) for lam, m in data])
    P = well_conditioned(spec.dim, spec.cond_cap, rng)
    return P @ J @ np.linalg.inv(P)


def random_unipotent_affine(spec: InstanceSpec, max_block: int = 5) -> AffineMap:
    rng = spec.rng()
    sizes = _partition(spec.dim, max_block, rng)
    J = _block_diag([_jordan(1.0, m) for m in sizes])
    P = well_conditioned(spec.dim, spec.cond_cap, rng)
    return AffineMap(P @ J @ np.linalg.inv(P), _gaussian(rng, spec.dim))


def random_unimodular_det(spec: InstanceSpec) -> np.ndarray:
    """Gaussian matrix rescaled to ``|det| = 1``."""
    rng = spec.rng()
    n = spec.dim
    A = well_conditioned(n, spec.cond_cap, rng)
    _, logdet = np.linalg.slogdet(A)
    return A * np.exp(-logdet / n)


def random_general(spec: InstanceSpec) -> AffineMap:
    rng = spec.rng()
    return AffineMap(well_conditioned(spec.dim, spec.cond_cap, rng), _gaussian(rng, spec.dim))


def generate(spec: InstanceSpec):
    return {
        "random_coninvolution": random_coninvolution,
        "random_c_reversible": random_c_reversible,
        "random_unipotent_affine": random_unipotent_affine,
        "random_unimodular_det": random_unimodular_det,
        "random_general": random_general,
    }[spec.kind](spec)


@dataclass(frozen=True)
class Dim1Facts:
    coninvolution: bool
    c_reversible: bool


def oracle_dim1(g: AffineMap, tol: Tolerance = DEFAULT_TOL) -> Dim1Facts:
    """Closed forms for ``x -> a x + v`` on C.

    ``(a, v)`` is a coninvolution iff ``|a| = 1`` and ``a conj(v) + v = 0``;
    it is c-reversible iff ``a = 1/conj(a)``, i.e. ``|a| = 1``.
    """
    if g.dim != 1:
        raise ValueError("oracle_dim1 needs a one-dimensional map")
    a = complex(g.linear[0, 0])
    v = complex(g.translation[0])
    unimodular = abs(abs(a) - 1.0) <= tol.residual_rel
    con = unimodular and abs(a * v.conjugate() + v) <= tol.residual_rel * max(1.0, abs(v))
    return Dim1Facts(bool(con), bool(unimodular))


def oracle_consimilar_2x2(A, B, budget: int = 10_000, rng=None, tol: Tolerance = DEFAULT_TOL) -> bool:
    """One-sided search for ``k`` with ``k A conj(k)^{-1} = B``.

    ``k A = B conj(k)`` is real-linear in ``k``; random draws of ``k`` are
    refined by least squares onto that solution set and accepted when
    invertible.  ``False`` means "not found".
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = A.shape[0]
    rng = np.random.default_rng(rng)
    # real matrix of k -> k A - B conj(k) on (Re k, Im k), column-major
    cols = []
    for part in (1.0, 1j):
        for j in range(n):
            for i in range(n):
                E = np.zeros((n, n), dtype=complex)
                E[i, j] = part
                R = E @ A - B @ E.conj()
                cols.append(np.concatenate([R.real.ravel(), R.imag.ravel()]))
    L = np.column_stack(cols)
    scale = max(1.0, fro(A), fro(B))
    for _ in range(budget):
        k0 = rng.standard_normal(2 * n * n)
        # least-squares step onto {k : L k = 0}
        step, *_ = np.linalg.lstsq(L, L @ k0, rcond=None)
        k = k0 - step
        size = np.linalg.norm(k)
        if size <= 1e-6 * np.linalg.norm(k0):
            # the draw collapsed onto 0: no nontrivial solution direction
            continue
        K = (k[: n * n] + 1j * k[n * n:]).reshape((n, n), order="F") / size
        if fro(K @ A - B @ K.conj()) > 1e3 * tol.residual_rel * scale:
            continue
        if np.linalg.cond(K) < 1e8:
            return True
    return False
