"""Command-line front end.

Exit codes: 0 true/success, 1 false or decomposition does not exist,
2 malformed input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import certify
from .errors import (
    ConinvError,
    CReversibilityRequired,
    DeterminantModulusNotOne,
    DimensionMismatch,
    NotConinvolutionError,
    SingularMatrixError,
)
from .factorization import (
    FactorizationCertificate,
    con_sqrt,
    four_factor,
    three_factor_with_witness,
    two_factor,
    two_factor_unipotent,
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
    is_coninvolution,
)
from .reversibility import is_c_reversible_affine

EXIT_OK, EXIT_FALSE, EXIT_MALFORMED, EXIT_NUMERIC = 0, 1, 2, 3
FORMAT_VERSION = "1"


class MalformedInput(ValueError):
    pass


# -- serialization ---------------------------------------------------------

def _reject_constant(name):
    raise MalformedInput(f"non-finite literal {name} is not allowed")


def _complex(x, where: str) -> complex:
    if (not isinstance(x, list) or len(x) != 2
            or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in x)):
        raise MalformedInput(f"{where}: expected [re, im], got {x!r}")
    re, im = float(x[0]), float(x[1])
    if not (math.isfinite(re) and math.isfinite(im)):
        raise MalformedInput(f"{where}: non-finite entry")
    return complex(re, im)


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def instance_to_dict(g: AffineMap) -> dict:
    return {
        "version": FORMAT_VERSION,
        "n": g.dim,
        "A": [[_pair(z) for z in row] for row in g.linear],
        "v": [_pair(z) for z in g.translation],
    }


def instance_from_dict(d) -> AffineMap:
    if not isinstance(d, dict):
        raise MalformedInput("instance must be a JSON object")
    if "version" in d and not isinstance(d["version"], str):
        raise MalformedInput("version must be a string")
    n = d.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise MalformedInput(f"n must be a positive integer, got {n!r}")
    A = d.get("A")
    if not isinstance(A, list) or len(A) != n or any(not isinstance(r, list) or len(r) != n for r in A):
        raise MalformedInput(f"A must be an {n}x{n} array of [re, im] pairs")
    lin = np.array([[_complex(x, f"A[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(A)])
    v = d.get("v")
    if v is None:
        vec = np.zeros(n, dtype=complex)
    else:
        if not isinstance(v, list) or len(v) != n:
            raise MalformedInput(f"v must have {n} entries")
        vec = np.array([_complex(x, f"v[{i}]") for i, x in enumerate(v)])
    return AffineMap(lin, vec)


def _loads(text: str):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from exc


def read_instance(path: str) -> AffineMap:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    return instance_from_dict(_loads(text))


def certificate_to_dict(c: FactorizationCertificate, tol: Tolerance) -> dict:
    return {
        "input": instance_to_dict(c.input),
        "kind": c.kind,
        "factors": [instance_to_dict(f) for f in c.factors],
        "residual_product": float(c.residual_product),
        "residual_factors": [float(r) for r in c.residual_factors],
        "provenance": list(c.provenance),
        "seed": c.seed,
        "tolerance": asdict(tol),
    }


def certificate_from_dict(d) -> tuple:
    """Parse a certificate document; returns ``(certificate, tolerance)``."""
    if not isinstance(d, dict):
        raise MalformedInput("certificate must be a JSON object")
    try:
        g = instance_from_dict(d["input"])
        factors = tuple(instance_from_dict(f) for f in d["factors"])
        tol = Tolerance(**d["tolerance"])
        cert = FactorizationCertificate(g, factors, d["kind"], float(d["residual_product"]),
                                        tuple(float(r) for r in d["residual_factors"]),
                                        tuple(d.get("provenance", ())), d.get("seed"))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad certificate: {exc}") from exc
    return cert, tol


_PAIR = re.compile(r"\[\s+(\S+),\s+(\S+)\s+\]")


def dumps(doc) -> str:
    """Indented JSON with each ``[re, im]`` pair kept on one line."""
    text = json.dumps(doc, indent=2, allow_nan=False)
    return _PAIR.sub(r"[\1, \2]", text) + "\n"


# -- commands --------------------------------------------------------------

def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _tol(args) -> Tolerance:
    return Tolerance(residual_rel=args.tol) if args.tol is not None else DEFAULT_TOL


def cmd_check(args) -> int:
    tol = _tol(args)
    g = read_instance(args.instance)
    con = is_coninvolution(g, tol)
    print(f"coninvolution: {str(bool(con)).lower()} "
          f"(residual_linear={con.residual_linear:.3e}, residual_translation={con.residual_translation:.3e})")
    try:
        crev = is_c_reversible_affine(g, tol)
        print(f"c_reversible: {str(crev).lower()}")
    except ConinvError as exc:
        if args.crev:
            raise
        crev = None
        print(f"c_reversible: undetermined ({type(exc).__name__})")
    holds = bool(con) if args.coninv else crev
    return EXIT_OK if holds else EXIT_FALSE


def _verified_roundtrip(cert: FactorizationCertificate, tol: Tolerance) -> str:
    text = dumps(certificate_to_dict(cert, tol))
    back, tol_back = certificate_from_dict(_loads(text))
    report = certify.verify_certificate(back, tol_back)
    if not report:
        raise _VerificationFailed(str(report))
    return text


class _VerificationFailed(ConinvError):
    pass


def cmd_factor(args) -> int:
    tol = _tol(args)
    g = read_instance(args.instance)
    if args.three:
        if args.witness is None:
            raise MalformedInput("--three needs --witness FILE")
        k = read_instance(args.witness)
        if k.dim != g.dim:
            raise MalformedInput(f"witness dimension {k.dim} != instance dimension {g.dim}")
        cert = three_factor_with_witness(g, k, tol, args.seed)
    elif args.four:
        cert = four_factor(g, args.seed, tol)
    else:
        cert = two_factor(g, tol, args.seed)
    _emit(_verified_roundtrip(cert, tol), args.output)
    return EXIT_OK


def cmd_consqrt(args) -> int:
    tol = _tol(args)
    g = read_instance(args.instance)
    h = con_sqrt(g, args.seed, tol)
    text = dumps(instance_to_dict(h))
    h2 = instance_from_dict(_loads(text))
    back = affine_compose(h2, affine_inverse(affine_conj(h2), tol))
    r = affine_distance(back, g) / max(1.0, affine_norm(g))
    if not r <= tol.residual_rel:
        raise _VerificationFailed(f"h conj(h)^-1 differs from g after round trip ({r:.3e})")
    _emit(text, args.output)
    return EXIT_OK


def parse_dims(text: str) -> list:
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise MalformedInput(f"--dims expects N or LO..HI, got {text!r}") from exc
    if lo < 1 or hi < lo:
        raise MalformedInput(f"--dims range {text!r} is empty or below 1")
    return list(range(lo, hi + 1))


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    total: int = 0
    worst: float = 0.0
    failures: list = field(default_factory=list)

    def record(self, seed: int, dim: int, residual: float | None, ok: bool, why: str = ""):
        self.total += 1
        if residual is not None and math.isfinite(residual):
            self.worst = max(self.worst, residual)
        if ok:
            self.passed += 1
        else:
            self.failures.append((seed, dim, why))


def _random_translation(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 7])
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _suite_cases(tol: Tolerance):
    def closure_con(spec):
        g = certify.random_coninvolution(spec)
        r = is_coninvolution(g, tol).residual
        return r, r <= tol.residual_rel

    def closure_crev(spec):
        A = certify.random_c_reversible(spec)
        return None, is_c_reversible_affine(AffineMap(A), tol)

    def det_one(spec):
        A = certify.random_unimodular_det(spec)
        _, logdet = np.linalg.slogdet(A)
        r = abs(math.expm1(logdet))
        return r, r <= 1e-10

    def cert_check(cert):
        report = certify.verify_certificate(cert, tol)
        return report.worst, bool(report)

    def two(spec):
        A = certify.random_c_reversible(spec)
        g = AffineMap(A, _random_translation(spec.seed, spec.dim))
        return cert_check(two_factor(g, tol, spec.seed))

    def unipotent(spec):
        g = certify.random_unipotent_affine(spec)
        return cert_check(two_factor_unipotent(g.linear, g.translation, tol))

    def sqrt_round_trip(spec):
        g = certify.random_coninvolution(spec)
        h = con_sqrt(g, spec.seed, tol)
        back = affine_compose(h, affine_inverse(affine_conj(h), tol))
        r = affine_distance(back, g) / max(1.0, affine_norm(g))
        return r, r <= tol.residual_rel

    def four(spec):
        A = certify.random_unimodular_det(spec)
        g = AffineMap(A, _random_translation(spec.seed, spec.dim))
        return cert_check(four_factor(g, spec.seed, tol))

    return [
        ("coninvolution generator closure", "random_coninvolution", closure_con),
        ("c-reversible generator closure", "random_c_reversible", closure_crev),
        ("unimodular determinant", "random_unimodular_det", det_one),
        ("two-factor certificates", "random_c_reversible", two),
        ("unipotent two-factor certificates", "random_unipotent_affine", unipotent),
        ("con-square-root round trip", "random_coninvolution", sqrt_round_trip),
        ("four-factor certificates", "random_unimodular_det", four),
    ]


def cmd_selftest(args) -> int:
    tol = _tol(args)
    dims = parse_dims(args.dims)
    if args.count < 1:
        raise MalformedInput("--count must be positive")
    results = []
    for name, kind, case in _suite_cases(tol):
        res = SuiteResult(name)
        for dim in dims:
            for i in range(args.count):
                seed = args.seed + i
                spec = certify.InstanceSpec(kind, dim, seed)
                try:
                    r, ok = case(spec)
                    res.record(seed, dim, r, bool(ok), "" if ok else "check failed")
                except (ConinvError, ValueError, np.linalg.LinAlgError) as exc:
                    res.record(seed, dim, None, False, f"{type(exc).__name__}: {exc}")
        results.append(res)
    print(f"selftest seed={args.seed} count={args.count} dims={dims[0]}..{dims[-1]} "
          f"residual_rel={tol.residual_rel:.1e}")
    for res in results:
        print(f"{res.name}: {res.passed}/{res.total} passed, worst residual {res.worst:.3e}")
    failures = [(res.name, f) for res in results for f in res.failures]
    for name, (seed, dim, why) in failures[:20]:
        print(f"FAIL {name}: seed={seed} dim={dim} {why}")
    if len(failures) > 20:
        print(f"... {len(failures) - 20} more failures")
    print("all passed" if not failures else f"{len(failures)} failures")
    return EXIT_OK if not failures else EXIT_NUMERIC


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coninv", description="Coninvolution factorizations of complex affine maps.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None, help="relative residual tolerance")

    c = sub.add_parser("check", help="test coninvolution / c-reversibility")
    c.add_argument("instance")
    q = c.add_mutually_exclusive_group(required=True)
    q.add_argument("--coninv", action="store_true")
    q.add_argument("--crev", action="store_true")
    common(c, seed=False)

    f = sub.add_parser("factor", help="factor into coninvolutions and write a certificate")
    f.add_argument("instance")
    k = f.add_mutually_exclusive_group(required=True)
    k.add_argument("--two", action="store_true")
    k.add_argument("--three", action="store_true")
    k.add_argument("--four", action="store_true")
    f.add_argument("--witness", metavar="FILE")
    f.add_argument("-o", "--output", default=None)
    common(f)

    s = sub.add_parser("consqrt", help="h with h conj(h)^-1 = g for a coninvolution g")
    s.add_argument("instance")
    s.add_argument("-o", "--output", default=None)
    common(s)

    t = sub.add_parser("selftest", help="run the randomized property suites")
    t.add_argument("--count", type=int, default=20)
    t.add_argument("--dims", default="1..4")
    common(t)
    return p


COMMANDS = {"check": cmd_check, "factor": cmd_factor, "consqrt": cmd_consqrt, "selftest": cmd_selftest}

# decomposition provably absent, or input fails the operation's precondition
_FALSE = (CReversibilityRequired, DeterminantModulusNotOne, NotConinvolutionError)
_MALFORMED = (MalformedInput, DimensionMismatch, SingularMatrixError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_MALFORMED
    try:
        if getattr(args, "tol", None) is not None and not (math.isfinite(args.tol) and args.tol > 0):
            raise MalformedInput("--tol must be a positive finite number")
        return COMMANDS[args.command](args)
    except _MALFORMED as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except _FALSE as exc:
        print(f"no: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FALSE
    except (ConinvError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
