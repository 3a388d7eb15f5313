import json
import subprocess
import sys

import numpy as np
import pytest

from coninv.certify import InstanceSpec, random_coninvolution, random_unimodular_det, verify_certificate
from coninv.cli import (
    MalformedInput,
    certificate_from_dict,
    dumps,
    instance_from_dict,
    instance_to_dict,
    main,
    parse_dims,
)
from coninv.linalg_core import AffineMap, affine_compose, affine_conj, affine_distance, affine_inverse


def write(path, doc):
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


def inst(A, v=None):
    return instance_to_dict(AffineMap(A, v))


@pytest.fixture
def worked(tmp_path):
    return write(tmp_path / "worked.json", inst([[1, 1], [0, 1]], [0, 1]))


@pytest.fixture
def diag23(tmp_path):
    return write(tmp_path / "d23.json", inst(np.diag([2, 3])))


class TestCheck:
    def test_coninv_true(self, tmp_path, capsys):
        f = write(tmp_path / "g.json", {"n": 1, "A": [[[1, 0]]], "v": [[0, 3]]})
        assert main(["check", "--coninv", f]) == 0
        assert "coninvolution: true" in capsys.readouterr().out

    def test_crev_false(self, diag23, capsys):
        assert main(["check", "--crev", diag23]) == 1
        assert "c_reversible: false" in capsys.readouterr().out

    def test_coninv_false(self, tmp_path):
        f = write(tmp_path / "g.json", {"n": 1, "A": [[[1, 0]]], "v": [[1, 0]]})
        assert main(["check", "--coninv", f]) == 1

    def test_singular_is_malformed(self, tmp_path):
        f = write(tmp_path / "g.json", inst(np.diag([1, 0])))
        assert main(["check", "--crev", f]) == 2

    @pytest.mark.parametrize("doc", [
        "not json",
        '{"n": 1, "A": [[[NaN, 0]]]}',
        {"n": 2, "A": [[1]]},
        {"n": 1, "A": [[[1, 0, 0]]]},
        {"n": 1, "A": [[[True, 0]]]},
        {"n": 0, "A": []},
        {"n": 1, "A": [[[1, 0]]], "v": [[1, 0], [2, 0]]},
        {"version": 1, "n": 1, "A": [[[1, 0]]]},
        [1, 2],
    ])
    def test_malformed(self, tmp_path, doc):
        assert main(["check", "--coninv", write(tmp_path / "bad.json", doc)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["check", "--coninv", str(tmp_path / "nope.json")]) == 2

    def test_flag_required(self, worked):
        assert main(["check", worked]) == 2


class TestFactor:
    def test_two_worked(self, worked, tmp_path):
        out = tmp_path / "cert.json"
        assert main(["factor", "--two", worked, "-o", str(out)]) == 0
        cert, tol = certificate_from_dict(json.loads(out.read_text()))
        assert cert.kind == "two"
        assert affine_distance(cert.factors[0], AffineMap(np.diag([1, -1]), [0, 1])) == 0
        assert affine_distance(cert.factors[1], AffineMap([[1, 1], [0, -1]])) == 0
        assert verify_certificate(cert, tol)

    def test_schema(self, worked, capsys):
        assert main(["factor", "--two", worked]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"input", "kind", "factors", "residual_product", "residual_factors",
                            "provenance", "seed", "tolerance"}
        assert doc["seed"] == 0 and doc["tolerance"]["residual_rel"] == 1e-9

    def test_two_not_c_reversible(self, diag23, capsys):
        assert main(["factor", "--two", diag23]) == 1
        assert "CReversibilityRequired" in capsys.readouterr().err

    def test_four_bad_determinant(self, diag23, capsys):
        assert main(["factor", "--four", diag23]) == 1
        assert "DeterminantModulusNotOne" in capsys.readouterr().err

    def test_four(self, tmp_path, capsys):
        A = random_unimodular_det(InstanceSpec("random_unimodular_det", 4, 2))
        f = write(tmp_path / "g.json", inst(A, [1, 2, 3, 4j]))
        assert main(["factor", "--four", f, "--seed", "5"]) == 0
        cert, tol = certificate_from_dict(json.loads(capsys.readouterr().out))
        assert cert.kind == "four" and cert.seed == 5 and verify_certificate(cert, tol)

    def test_three_with_witness(self, tmp_path, capsys):
        g = write(tmp_path / "g.json", inst([[1, 1], [0, 1]], [0, 1]))
        k = write(tmp_path / "k.json", inst(np.eye(2)))
        assert main(["factor", "--three", g, "--witness", k]) == 0
        cert, tol = certificate_from_dict(json.loads(capsys.readouterr().out))
        assert cert.kind == "three" and verify_certificate(cert, tol)

    def test_three_needs_witness(self, worked):
        assert main(["factor", "--three", worked]) == 2

    def test_deterministic(self, tmp_path):
        A = random_unimodular_det(InstanceSpec("random_unimodular_det", 3, 6))
        f = write(tmp_path / "g.json", inst(A, [1, 0, 1j]))
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["factor", "--four", f, "--seed", "9", "-o", str(a)]) == 0
        assert main(["factor", "--four", f, "--seed", "9", "-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_custom_tolerance_recorded(self, worked, capsys):
        assert main(["factor", "--two", worked, "--tol", "1e-6"]) == 0
        assert json.loads(capsys.readouterr().out)["tolerance"]["residual_rel"] == 1e-6

    def test_bad_tolerance(self, worked):
        assert main(["factor", "--two", worked, "--tol", "-1"]) == 2


class TestConsqrt:
    def test_minus_one(self, tmp_path, capsys):
        f = write(tmp_path / "g.json", inst([[-1]]))
        assert main(["consqrt", f]) == 0
        h = instance_from_dict(json.loads(capsys.readouterr().out))
        back = affine_compose(h, affine_inverse(affine_conj(h)))
        assert affine_distance(back, AffineMap([[-1]])) < 1e-12

    def test_identity(self, tmp_path, capsys):
        f = write(tmp_path / "g.json", inst(np.eye(3)))
        assert main(["consqrt", f]) == 0
        B = instance_from_dict(json.loads(capsys.readouterr().out)).linear
        assert np.allclose(B, B[0, 0] * np.eye(3))

    def test_not_coninvolution(self, tmp_path):
        f = write(tmp_path / "g.json", inst([[1]], [1]))
        assert main(["consqrt", f]) == 1


class TestSelftest:
    def test_passes(self, capsys):
        assert main(["selftest", "--count", "3", "--dims", "1..3"]) == 0
        out = capsys.readouterr().out
        assert "all passed" in out and "worst residual" in out

    def test_forced_failure(self, capsys):
        assert main(["selftest", "--count", "1", "--dims", "2", "--tol", "1e-30"]) == 3
        assert "FAIL" in capsys.readouterr().out

    def test_byte_identical(self, capsys):
        main(["selftest", "--seed", "42", "--count", "2"])
        first = capsys.readouterr().out
        main(["selftest", "--seed", "42", "--count", "2"])
        assert capsys.readouterr().out == first

    def test_bad_dims(self):
        assert main(["selftest", "--dims", "4..2"]) == 2


def test_parse_dims():
    assert parse_dims("1..4") == [1, 2, 3, 4]
    assert parse_dims("3") == [3]
    with pytest.raises(MalformedInput):
        parse_dims("a..b")


def test_serialization_is_exact():
    g = random_coninvolution(InstanceSpec("random_coninvolution", 4, 1))
    back = instance_from_dict(json.loads(dumps(instance_to_dict(g))))
    assert np.array_equal(back.linear, g.linear) and np.array_equal(back.translation, g.translation)


def test_module_entry_point(worked):
    proc = subprocess.run([sys.executable, "-m", "coninv", "check", "--crev", worked],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "c_reversible: true" in proc.stdout
