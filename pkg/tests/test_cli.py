"""CLI end-to-end: reports, determinism, round trips, exit codes."""

import io
import json

import pytest

from nijcalc.cli import main

COMPANION2 = 'dim = 2\nvars = ["x1", "x2"]\nmatrix = [["x1", "1"], ["x2", "0"]]\n'
PLANTED = 'dim = 2\nvars = ["x1", "x2"]\nmatrix = [["0", "x1"], ["x2", "0"]]\n'
GEODESIC2 = COMPANION2 + 'metric_inv = [["0", "-1"], ["-1", "x1"]]\n'
SPLIT2 = (
    'dim = 2\nvars = ["x1", "x2"]\nmatrix = [["x1", "0"], ["0", "x2"]]\n'
    'point = [1.0, -1.0]\nchi1 = "t - x1"\nchi2 = "t - x2"\n'
)
SIGMA2 = 'vars = ["x1", "x2"]\nsigma = ["-x1", "-x2"]\n'
SIGMA_BLOCKS = 'vars = ["x1", "x2", "x3"]\nsigma = [["-x1", "-x2"], ["-x3"]]\n'
LSA_GOOD = 'lsa = { dim = 2, table = [[1, 1, 1, "1"], [2, 1, 2, "1"]] }\n'
LSA_BAD = 'lsa = { dim = 2, table = [[2, 1, 1, "1"], [1, 2, 2, "1"]] }\n'
DIAG2 = 'dim = 2\nvars = ["x1", "x2"]\nmatrix = [["x1", "0"], ["0", "x2"]]\n'
NONLINEARIZABLE = 'dim = 2\nvars = ["x1", "x2"]\nmatrix = [["x1", "x2^2"], ["0", "x2"]]\n'
PN4 = (
    'dim = 4\nvars = ["x1", "x2", "p1", "p2"]\n'
    'matrix = [\n'
    '  ["-x1", "1", "0", "0"],\n'
    '  ["-x2", "0", "0", "0"],\n'
    '  ["0", "-p2", "-x1", "-x2"],\n'
    '  ["p2", "0", "1", "0"],\n'
    ']\n'
    'omega = [\n'
    '  ["0", "0", "1", "0"],\n'
    '  ["0", "0", "0", "1"],\n'
    '  ["-1", "0", "0", "0"],\n'
    '  ["0", "-1", "0", "0"],\n'
    ']\n'
)


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture()
def docfile(tmp_path):
    def write(text, name="doc.toml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


class TestCheck:
    def test_pass(self, docfile):
        code, out, _ = run(["check", docfile(COMPANION2)])
        assert code == 0
        assert "check nijenhuis: pass" in out
        assert "check trace_identities: pass" in out
        assert "check char_flow: pass" in out
        assert out.endswith("result: pass\n")

    def test_planted_counterexample_prints_residual(self, docfile):
        code, out, _ = run(["check", docfile(PLANTED)])
        assert code == 1
        assert "check nijenhuis: fail" in out
        assert "witness: [1;1,2] = x1" in out
        assert out.endswith("result: fail\n")

    def test_numeric_mode(self, docfile):
        code, out, _ = run(["check", docfile(COMPANION2), "--mode", "numeric"])
        assert code == 0
        assert "mode=numeric" in out and "samples=100 seed=42" in out

    def test_stdin_dash(self, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO(COMPANION2))
        code, out, _ = run(["check", "-"])
        assert code == 0 and "result: pass" in out

    def test_wall_time_on_stderr_only(self, docfile):
        _, out, err = run(["check", docfile(COMPANION2)])
        assert "wall" in err and "wall" not in out


class TestSeedResolution:
    def test_flag_beats_document(self, docfile, monkeypatch):
        monkeypatch.setenv("NIJ_SEED", "5")
        path = docfile(COMPANION2 + "seed = 9\n")
        _, out, _ = run(["check", path, "--mode", "numeric", "--seed", "3"])
        assert "seed=3" in out

    def test_document_beats_env(self, docfile, monkeypatch):
        monkeypatch.setenv("NIJ_SEED", "5")
        path = docfile(COMPANION2 + "seed = 9\n")
        _, out, _ = run(["check", path, "--mode", "numeric"])
        assert "seed=9" in out

    def test_env_beats_default(self, docfile, monkeypatch):
        monkeypatch.setenv("NIJ_SEED", "5")
        _, out, _ = run(["check", docfile(COMPANION2), "--mode", "numeric"])
        assert "seed=5" in out

    def test_default_seed(self, docfile, monkeypatch):
        monkeypatch.delenv("NIJ_SEED", raising=False)
        _, out, _ = run(["check", docfile(COMPANION2), "--mode", "numeric"])
        assert "seed=42" in out

    def test_bad_env_seed(self, docfile, monkeypatch):
        monkeypatch.setenv("NIJ_SEED", "many")
        code, _, err = run(["check", docfile(COMPANION2), "--mode", "numeric"])
        assert code == 2 and "NIJ_SEED" in err


class TestCanonical:
    @pytest.mark.parametrize(
        "argv",
        [
            ["canonical", "companion", "--dim", "4"],
            ["canonical", "companion_sum", "--sizes", "2,2"],
            ["canonical", "nilpotent", "--dim", "3"],
            ["canonical", "jordan", "--dim", "3", "--lambda", "x1^2"],
            ["canonical", "diag", "--dim", "3"],
            ["canonical", "complex_block", "--a", "x", "--b", "y"],
        ],
        ids=["companion", "companion_sum", "nilpotent", "jordan", "diag", "complex_block"],
    )
    def test_emitted_document_round_trips(self, argv, tmp_path, monkeypatch):
        code, text, _ = run(argv)
        assert code == 0
        monkeypatch.setattr("sys.stdin", io.StringIO(text))
        code2, out, _ = run(["check", "-"])
        assert code2 == 0 and "result: pass" in out

    def test_companion_document_exact(self):
        _, text, _ = run(["canonical", "companion", "--dim", "2"])
        assert text == (
            'name = "companion"\ndim = 2\nvars = ["x1", "x2"]\n'
            'matrix = [\n  ["x1", "1"],\n  ["x2", "0"],\n]\n'
        )

    def test_missing_params(self):
        code, _, err = run(["canonical", "companion"])
        assert code == 2 and "--dim" in err
        code, _, err = run(["canonical", "companion_sum"])
        assert code == 2 and "--sizes" in err

    def test_unknown_kind_exits_two(self):
        code, _, _ = run(["canonical", "hessenberg"])
        assert code == 2


class TestReconstruct:
    def test_single_block(self, docfile):
        code, out, _ = run(["reconstruct", docfile(SIGMA2)])
        assert code == 0
        assert "  [x1, 1]" in out and "  [x2, 0]" in out
        assert "entries: polynomial" in out
        assert "check char_poly_round_trip: pass" in out

    def test_two_blocks(self, docfile):
        code, out, _ = run(["reconstruct", docfile(SIGMA_BLOCKS)])
        assert code == 0
        assert "blocks: 2" in out
        assert "check char_poly_round_trip: pass" in out

    def test_degenerate_sigma_is_input_error(self, docfile):
        code, _, err = run(["reconstruct", docfile('vars = ["x1", "x2"]\nsigma = ["x1", "0"]\n')])
        assert code == 2 and "singular" in err


class TestSplitClassify:
    def test_split_passes(self, docfile):
        code, out, _ = run(["split", docfile(SPLIT2)])
        assert code == 0
        for name in (
            "projector_idempotent",
            "projector_commutes",
            "projector_torsion",
            "block_diagonal",
        ):
            assert f"check {name}: pass" in out

    def test_split_needs_factors(self, docfile):
        code, _, err = run(["split", docfile(DIAG2 + "point = [1.0, -1.0]\n")])
        assert code == 2 and "chi1" in err

    def test_classify_points(self, docfile):
        path = docfile(DIAG2 + "points = [[1.0, -1.0], [0.0, 0.0]]\n")
        code, out, _ = run(["classify", path])
        assert code == 0
        assert "gl_regular=true" in out and "scalar_type=true" in out
        assert "blocks [1, 1]" in out


class TestLsaLinearize:
    def test_lsa_pass(self, docfile):
        code, out, _ = run(["lsa", docfile(LSA_GOOD)])
        assert code == 0
        assert "check left_symmetry: pass" in out
        assert "check linear_field_nijenhuis: pass" in out
        assert "check verdicts_agree: pass" in out

    def test_lsa_fail_agrees(self, docfile):
        code, out, _ = run(["lsa", docfile(LSA_BAD)])
        assert code == 1
        assert "check left_symmetry: fail" in out
        assert "check linear_field_nijenhuis: fail" in out
        assert "check verdicts_agree: pass" in out

    def test_linearize_trivial(self, docfile):
        code, out, _ = run(["linearize", docfile(DIAG2)])
        assert code == 0
        assert "check residual_zero_through_cap: pass" in out

    def test_linearize_perturbed(self, docfile):
        # diag(x1, x2) pushed forward through (x1, x2) -> (x1 + x2^2, x2)
        doc = (
            'dim = 2\nvars = ["x1", "x2"]\n'
            'matrix = [["x1 - x2^2", "2*x2^3 - 2*x1*x2 + 2*x2^2"], ["0", "x2"]]\n'
        )
        code, out, _ = run(["linearize", docfile(doc), "--max-degree", "4"])
        assert code == 0
        assert "check linearized: pass" in out
        assert "check residual_zero_through_cap: pass" in out

    def test_linearize_incompatible_fails(self, docfile):
        code, out, _ = run(["linearize", docfile(NONLINEARIZABLE)])
        assert code == 1
        assert "check linearized: fail" in out
        assert "witness" in out


class TestGeodesicPn:
    def test_geodesic_symbolic(self, docfile):
        code, out, _ = run(["geodesic", docfile(GEODESIC2)])
        assert code == 0
        assert "mode: symbolic" in out
        assert "check bracket_identity: pass (residual=0)" in out

    def test_geodesic_numeric_flag(self, docfile):
        code, out, _ = run(["geodesic", docfile(GEODESIC2), "--mode", "numeric"])
        assert code == 0
        assert "mode: numeric" in out and "samples=100" in out

    def test_geodesic_failure_routes_witnesses(self, docfile):
        doc = (
            'dim = 2\nvars = ["x1", "x2"]\nmatrix = [["x2", "0"], ["0", "x1"]]\n'
            'metric_inv = [["1", "0"], ["0", "1"]]\n'
        )
        code, out, _ = run(["geodesic", docfile(doc)])
        assert code == 1
        assert "check self_adjoint: pass" in out
        assert "check bracket_identity: fail" in out
        assert "witness: {H,F} - 2 H ell" in out

    def test_pn_pass(self, docfile):
        code, out, _ = run(["pn", docfile(PN4)])
        assert code == 0
        for name in ("symplectic", "product_skew", "product_closed", "nijenhuis"):
            assert f"check {name}: pass" in out

    def test_pn_skew_failure_skips_closedness(self, docfile):
        doc = (
            'dim = 2\nvars = ["x1", "p1"]\nmatrix = [["x1", "0"], ["0", "p1"]]\n'
            'omega = [["0", "1"], ["-1", "0"]]\n'
        )
        code, out, _ = run(["pn", docfile(doc)])
        assert code == 1
        assert "check product_skew: fail" in out
        assert "check product_closed: skipped" in out


class TestJsonReports:
    def test_schema_and_key_order(self, docfile):
        code, out, _ = run(["check", docfile(COMPANION2), "--json"])
        assert code == 0
        obj = json.loads(out)
        assert obj["schema"] == 1
        assert list(obj) == ["schema", "command", "dim", "vars", "checks", "ok"]
        assert obj["checks"][0]["name"] == "nijenhuis"
        assert obj["ok"] is True

    def test_json_carries_residual(self, docfile):
        code, out, _ = run(["geodesic", docfile(GEODESIC2), "--json"])
        assert code == 0
        obj = json.loads(out)
        bracket = obj["checks"][1]
        assert bracket["name"] == "bracket_identity"
        assert bracket["residual"] == "0"

    def test_json_numeric_residual(self, docfile):
        code, out, _ = run(["check", docfile(COMPANION2), "--json", "--mode", "numeric"])
        obj = json.loads(out)
        assert obj["checks"][0]["residual"] == 0.0
        assert obj["checks"][0]["samples"] == 100


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv_fn",
        [
            lambda d: ["check", d(COMPANION2)],
            lambda d: ["check", d(COMPANION2), "--mode", "numeric"],
            lambda d: ["check", d(PLANTED)],
            lambda d: ["canonical", "jordan", "--dim", "4"],
            lambda d: ["reconstruct", d(SIGMA_BLOCKS)],
            lambda d: ["split", d(SPLIT2)],
            lambda d: ["classify", d(DIAG2 + "points = [[1.0, -1.0]]\n")],
            lambda d: ["lsa", d(LSA_GOOD)],
            lambda d: ["linearize", d(NONLINEARIZABLE)],
            lambda d: ["geodesic", d(GEODESIC2)],
            lambda d: ["geodesic", d(GEODESIC2), "--mode", "numeric", "--json"],
            lambda d: ["pn", d(PN4), "--json"],
        ],
        ids=[
            "check",
            "check-numeric",
            "check-fail",
            "canonical",
            "reconstruct",
            "split",
            "classify",
            "lsa",
            "linearize-fail",
            "geodesic",
            "geodesic-numeric-json",
            "pn-json",
        ],
    )
    def test_reports_are_byte_identical(self, argv_fn, docfile, monkeypatch):
        monkeypatch.delenv("NIJ_SEED", raising=False)
        argv = argv_fn(docfile)
        first = run(list(argv))
        second = run(list(argv))
        assert first[0] == second[0]
        assert first[1] == second[1]


class TestExitCodes:
    def test_missing_file(self):
        code, out, err = run(["check", "/nonexistent/doc.toml"])
        assert code == 2 and out == "" and "error:" in err

    def test_bad_syntax(self, docfile):
        code, _, err = run(["check", docfile("dim = = 1")])
        assert code == 2 and "document syntax" in err

    def test_bad_expression(self, docfile):
        code, _, err = run(
            ["check", docfile('dim = 1\nvars = ["x1"]\nmatrix = [["q5"]]\n')]
        )
        assert code == 2 and "matrix" in err

    def test_usage_error(self):
        code, _, _ = run(["frobnicate"])
        assert code == 2

    def test_help_exits_zero(self):
        code, _, _ = run(["--help"])
        assert code == 0
