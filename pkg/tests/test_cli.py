import json

import pytest

from qtelescope.cli import (
    CERT_SCHEMA,
    EXIT_CONVERGENCE,
    EXIT_FAILED,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_UNDETERMINED,
    main,
    relation_from_certificate,
)
from qtelescope.pairsynth import BILATERAL_CAVEAT
from qtelescope.qterm import same_term
from qtelescope.syntax import format_term


@pytest.fixture(scope="module")
def cert_1psi1(tmp_path_factory):
    path = tmp_path_factory.mktemp("cert") / "1psi1.json"
    assert main(["pair", "1psi1", "--iterate", "b->b*q", "--out", str(path)]) == EXIT_OK
    return path


class TestGosper:
    def test_summable_ratio(self, capsys):
        assert main(["gosper", "z", "--ratio"]) == EXIT_OK
        assert "R(x) =" in capsys.readouterr().out

    def test_not_summable_is_a_normal_answer(self, capsys):
        assert main(["gosper", "poch(a)*poch(b)^-1*geom(z)"]) == EXIT_OK
        assert "NOT_SUMMABLE" in capsys.readouterr().out

    def test_json(self, capsys):
        assert main(["gosper", "geom(z)", "--emit", "json"]) == EXIT_OK
        out = capsys.readouterr().out
        doc = json.loads(out[out.index("{") :])
        assert doc["schema"] == CERT_SCHEMA

    def test_syntax_error(self, capsys):
        assert main(["gosper", "poch("]) == EXIT_INPUT
        assert "error" in capsys.readouterr().err

    def test_zero_term(self):
        assert main(["gosper", "const(0)"]) == EXIT_INPUT

    def test_dispersion_bound(self):
        assert main(["gosper", "(1-a*x)/(1-a*x/q^100)", "--ratio"]) == EXIT_UNDETERMINED

    def test_undeclared_symbol(self):
        # --declare extends the process-wide symbol table, so use a name no other test needs
        assert main(["gosper", "geom(wcli)"]) == EXIT_INPUT
        assert main(["gosper", "geom(wcli)", "--declare", "wcli"]) == EXIT_OK


class TestPair:
    def test_certificate_contents(self, cert_1psi1):
        cert = json.loads(cert_1psi1.read_text())
        assert cert["schema"] == CERT_SCHEMA
        assert cert["identity"] == "1psi1"
        assert cert["numeric"]["gosper_pair"]["all_zero"]
        assert cert["numeric"]["abel_pair"]["all_zero"]
        assert cert["limit_passed"]
        assert BILATERAL_CAVEAT in cert["caveats"]
        assert all(cert["reference_match"].values())

    def test_round_trip_is_a_fixed_point(self, cert_1psi1):
        cert = json.loads(cert_1psi1.read_text())
        rel, pair, abel = relation_from_certificate(cert)
        parsed = {"F": rel.F, "G": rel.G, "g": pair.g, "h": pair.h, "A": abel.A, "B": abel.B}
        rewritten = dict(cert, **{k: format_term(t) for k, t in parsed.items()})
        assert rewritten == cert
        rel2, pair2, abel2 = relation_from_certificate(json.loads(json.dumps(rewritten)))
        assert same_term(pair2.h, pair.h) and same_term(abel2.A, abel.A)

    def test_verify_certificate(self, cert_1psi1, capsys):
        assert main(["verify", str(cert_1psi1)]) == EXIT_OK
        assert "all zero" in capsys.readouterr().out

    def test_tampered_certificate_fails(self, cert_1psi1, tmp_path, capsys):
        cert = json.loads(cert_1psi1.read_text())
        cert["h"] = "const(2)*" + cert["h"]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(cert))
        assert main(["verify", str(bad)]) == EXIT_FAILED
        assert "FAIL" in capsys.readouterr().out

    def test_not_a_certificate(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{}")
        assert main(["verify", str(path)]) == EXIT_INPUT

    def test_not_summable_lists_alternatives(self, tmp_path, capsys):
        out = tmp_path / "never.json"
        assert main(["pair", "3psi3", "--iterate", "d->d/q", "--out", str(out)]) == EXIT_FAILED
        err = capsys.readouterr().err
        assert "NOT_SUMMABLE" in err and "alternatives" in err
        assert not out.exists()

    def test_latex(self, capsys):
        assert main(["pair", "2phi1", "--iterate", "c->c*q", "--emit", "latex"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "\\begin{align*}" in out
        assert "(a,b;q)_k" in out and "B_k" in out

    def test_unknown_identity(self, capsys):
        assert main(["pair", "nope", "--iterate", "a->a*q"]) == EXIT_INPUT
        assert "known" in capsys.readouterr().err

    def test_free_form_substitution(self, capsys):
        assert main(["pair", "2phi1", "--iterate", "a->a/q"]) == EXIT_OK
        cert = json.loads(capsys.readouterr().out)
        assert cert["iteration"] is None and cert["substitution"] == "a->a/q"
        assert cert["checks"]["gosper_pair"]
        # g/h keeps a quadratic factor here, so no product-form Abel pair exists
        assert cert["A"] is None and "degree" in cert["abel_note"]

    def test_cancelled(self):
        assert main(["pair", "6psi6", "--iterate", "chu", "--timeout", "0.001"]) == EXIT_UNDETERMINED


class TestVerify:
    def test_identity(self, capsys):
        assert main(["verify", "6phi5"]) == EXIT_OK
        assert "ok" in capsys.readouterr().out

    def test_pole(self, capsys):
        assert main(["verify", "2phi1", "--set", "c=2"]) == EXIT_INPUT
        assert "pole" in capsys.readouterr().err

    def test_divergent_point(self):
        assert main(["verify", "1psi1", "--set", "z=5"]) == EXIT_CONVERGENCE

    def test_bad_assignment(self):
        assert main(["verify", "1psi1", "--set", "z"]) == EXIT_INPUT
        assert main(["verify", "1psi1", "--q", "2"]) == EXIT_INPUT


class TestCatalog:
    def test_list(self, capsys):
        assert main(["catalog", "list"]) == EXIT_OK
        names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
        assert {"1psi1", "6psi6", "jacobi"} <= set(names)

    def test_show(self, capsys):
        assert main(["catalog", "show", "6psi6"]) == EXIT_OK
        assert "chu" in capsys.readouterr().out

    def test_show_needs_name(self):
        assert main(["catalog", "show"]) == EXIT_INPUT

    def test_export(self, tmp_path):
        path = tmp_path / "cat.json"
        assert main(["catalog", "export", "--out", str(path)]) == EXIT_OK
        assert len(json.loads(path.read_text())["identities"]) >= 10
