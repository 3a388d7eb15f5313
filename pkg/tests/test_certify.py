import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coninv.certify import (
    InstanceSpec,
    generate,
    oracle_consimilar_2x2,
    oracle_dim1,
    random_c_reversible,
    random_coninvolution,
    random_unimodular_det,
    verify_certificate,
)
from coninv.factorization import FactorizationCertificate, make_certificate, two_factor
from coninv.linalg_core import AffineMap, identity, is_coninvolution
from coninv.reversibility import is_c_reversible_matrix
from coninv.spectral import are_similar, jordan_block, jordan_structure

seeds = st.integers(0, 2**32 - 1)
WORKED = AffineMap(jordan_block(1, 2), [0, 1])


def tampered(cert, factors):
    return FactorizationCertificate(cert.input, tuple(factors), cert.kind, cert.residual_product,
                                    cert.residual_factors, cert.provenance, cert.seed)


class TestInstanceSpec:
    @pytest.mark.parametrize("kw", [dict(kind="nope", dim=2), dict(kind="random_general", dim=0),
                                    dict(kind="random_general", dim=2, cond_cap=0.5)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            InstanceSpec(**kw)

    def test_generation_is_seeded(self):
        spec = InstanceSpec("random_unimodular_det", 3, 17)
        assert np.array_equal(generate(spec), generate(spec))


class TestVerify:
    def test_identity_certificate(self):
        e = identity(2)
        assert verify_certificate(make_certificate(e, (e, e)))

    def test_worked_certificate(self):
        report = verify_certificate(two_factor(WORKED))
        assert report and report.worst <= 1e-12

    def test_negated_factor_named(self):
        cert = two_factor(WORKED)
        f = cert.factors[1]
        bad = tampered(cert, (cert.factors[0], AffineMap(-f.linear, -f.translation)))
        report = verify_certificate(bad)
        assert not report
        assert [c.name for c in report.failures()] == ["product of factors = input"]

    def test_non_coninvolution_named(self):
        cert = two_factor(WORKED)
        bad = tampered(cert, (cert.factors[0], AffineMap(2 * cert.factors[1].linear)))
        names = [c.name for c in verify_certificate(bad).failures()]
        assert "factor 2: A conj(A) = I" in names

    def test_kind_label_checked(self):
        cert = two_factor(WORKED)
        bad = FactorizationCertificate(cert.input, cert.factors, "three", 0.0, (0.0, 0.0))
        assert not verify_certificate(bad)

    def test_report_text(self):
        text = str(verify_certificate(two_factor(WORKED)))
        assert text.count("PASS") == 6 and "FAIL" not in text


@given(seeds, st.integers(1, 5), st.sampled_from(["sign", "perturb"]))
def test_mutations_are_rejected(seed, n, how):
    rng = np.random.default_rng(seed)
    A = random_c_reversible(InstanceSpec("random_c_reversible", n, seed))
    cert = two_factor(AffineMap(A, rng.standard_normal(n)), rng=seed)
    i = int(rng.integers(2))
    f = cert.factors[i]
    if how == "sign":
        g = AffineMap(-f.linear, -f.translation)
    else:
        worst = max(cert.residual_product, *cert.residual_factors)
        E = np.zeros_like(f.linear)
        E[rng.integers(n), rng.integers(n)] = max(1e3 * worst, 1e-6) * 10 * max(1.0, np.linalg.norm(f.linear))
        g = AffineMap(f.linear + E, f.translation)
    factors = list(cert.factors)
    factors[i] = g
    assert not verify_certificate(tampered(cert, factors))


class TestGenerators:
    def test_coninvolution_scalar(self):
        g = random_coninvolution(InstanceSpec("random_coninvolution", 1, 3))
        assert abs(abs(g.linear[0, 0]) - 1) < 1e-14

    def test_coninvolution_closure(self):
        for seed in range(100):
            assert is_coninvolution(random_coninvolution(InstanceSpec("random_coninvolution", 3, seed)))

    def test_c_reversible_closure(self):
        for seed in range(100):
            A = random_c_reversible(InstanceSpec("random_c_reversible", 1 + seed % 6, seed))
            assert is_c_reversible_matrix(A)

    def test_c_reversible_structure_pairs(self):
        A = random_c_reversible(InstanceSpec("random_c_reversible", 6, 11))
        s = jordan_structure(A)
        for mu, blocks in s:
            assert s.blocks_at(1 / np.conj(mu), 1e-6) == blocks

    def test_unimodular_det(self):
        for seed in range(100):
            A = random_unimodular_det(InstanceSpec("random_unimodular_det", 1 + seed % 6, seed))
            assert abs(abs(np.linalg.det(A)) - 1) <= 1e-10
        assert not is_c_reversible_matrix(random_unimodular_det(InstanceSpec("random_unimodular_det", 4, 0)))

    def test_cond_cap(self):
        spec = InstanceSpec("random_general", 5, 2, cond_cap=20)
        assert np.linalg.cond(generate(spec).linear) <= 20


class TestOracles:
    def test_dim1_examples(self):
        facts = oracle_dim1(AffineMap([[1j]], [1 + 1j]))
        assert not facts.coninvolution and facts.c_reversible
        facts = oracle_dim1(AffineMap([[np.exp(0.9j)]]))
        assert facts.coninvolution and facts.c_reversible
        assert not oracle_dim1(AffineMap([[2]])).c_reversible

    def test_dim1_needs_dim1(self):
        with pytest.raises(ValueError):
            oracle_dim1(identity(2))

    def test_consimilar_examples(self):
        A = np.array([[1, 2j], [0.5, 3]])
        assert oracle_consimilar_2x2(A, A, budget=10, rng=0)
        assert oracle_consimilar_2x2([[1]], [[np.exp(1.3j)]], budget=10, rng=0)

    def test_consimilar_one_sided(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            B = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            if are_similar(A @ A.conj(), B @ B.conj()):
                continue
            assert not oracle_consimilar_2x2(A, B, budget=200, rng=1)
