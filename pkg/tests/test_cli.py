from __future__ import annotations

import io
import json
from pathlib import Path

import pytest

from freepair import linalg as la
from freepair.cli import (AutoSymmetrizedWarning, InputError, JobSpec, load_constants, main, parse_document,
                          parse_input, parse_place)
from freepair.places import Place

DATA = Path(__file__).resolve().parent.parent / "data"
SANOV = DATA / "sanov.json"
TRIANGULAR = DATA / "triangular.json"
COMMUTING = DATA / "commuting.json"


def _write(tmp_path, doc, name="in.json") -> str:
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


# --- parsing --------------------------------------------------------------------------

def test_parse_identity_file():
    S = parse_input(io.StringIO(json.dumps({"dimension": 2, "matrices": [[[1, 0], [0, 1]]]})))
    assert len(S) == 1


def test_parse_sanov_symmetrizes_with_warning():
    with pytest.warns(AutoSymmetrizedWarning):
        S = parse_input(str(SANOV))
    assert len(S) == 5 and S.symmetric and S.contains_identity


def test_parse_symmetric_complete_set_is_silent(recwarn):
    A = [[1, 2], [0, 1]]
    Ai = [[1, -2], [0, 1]]
    S = parse_document({"matrices": [A, Ai], "symmetric": True})
    assert len(S) == 3
    assert not [w for w in recwarn if issubclass(w.category, AutoSymmetrizedWarning)]


@pytest.mark.parametrize("doc", [
    {"dimension": 2, "matrices": [[["1/0", 0], [0, 1]]]},
    {"dimension": 2, "matrices": [[[1.5, 0], [0, 1]]]},
    {"dimension": 2, "matrices": [[[1, 2], [2, 4]]]},
    {"dimension": 3, "matrices": [[[1, 0], [0, 1]]]},
    {"dimension": 2, "matrices": []},
    {"dimension": 2, "matrices": [[[1, 0], [0, 1]]], "symmetric": "yes"},
    [1, 2, 3],
])
def test_parse_rejects(doc):
    with pytest.raises(InputError):
        parse_document(doc)


def test_parse_rational_strings():
    S = parse_document({"matrices": [[["1/2", 0], [0, 2]]]})
    assert S.matrices[0] == la.diag(la.to_fraction("1/2"), 2)


def test_parse_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InputError):
        parse_input(str(p))


def test_place_and_constants_parsing():
    assert parse_place("auto") is None and parse_place(None) is None
    assert parse_place("p:7") == Place(7)
    with pytest.raises(InputError):
        parse_place("p:4")
    assert load_constants('{"T1": 8}').T1 == 8
    with pytest.raises(InputError):
        load_constants('{"nope": 1}')


def test_jobspec_validation():
    with pytest.raises(InputError):
        JobSpec(command="certify", input="x").validate()
    with pytest.raises(InputError):
        JobSpec(command="girth", input="x", output="o").validate()


# --- end to end -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def certified(tmp_path_factory):
    out = tmp_path_factory.mktemp("cert") / "sanov.cert.json"
    code = main(["certify", str(SANOV), "--output", str(out)])
    return code, out


def test_certify_sanov(certified):
    code, out = certified
    assert code == 0
    cert = json.loads(out.read_text())
    assert cert["dimension"] == 2
    transcript = out.with_suffix(".transcript.txt").read_text()
    assert "ping-pong" in transcript
    meta = json.loads(Path(str(out) + ".meta.json").read_text())
    assert meta["exit_code"] == 0 and meta["command"] == "certify"


def test_certify_then_verify(certified, capsys):
    _, out = certified
    capsys.readouterr()
    assert main(["verify", str(SANOV), str(out)]) == 0
    assert capsys.readouterr().out.strip() == "PASS"


def test_verify_at_other_precision(certified, capsys):
    _, out = certified
    assert main(["verify", str(SANOV), str(out), "--precision", "160"]) == 0


def test_verify_mutated_certificate(certified, tmp_path, capsys):
    _, out = certified
    cert = json.loads(out.read_text())
    name = sorted(cert["balls"])[0]
    num, _, den = cert["balls"][name]["radius"].partition("/")
    cert["balls"][name]["radius"] = f"{2 * int(num)}/{den or 1}"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(cert))
    capsys.readouterr()
    assert main(["verify", str(SANOV), str(bad)]) == 1
    assert capsys.readouterr().out.startswith("FAIL")


def test_verify_malformed_letters(certified, tmp_path, capsys):
    _, out = certified
    cert = json.loads(out.read_text())
    cert["words"]["a"] = [99]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(cert))
    assert main(["verify", str(SANOV), str(bad)]) == 1


def test_certify_is_byte_deterministic(certified, tmp_path):
    _, out = certified
    again = tmp_path / "again.json"
    assert main(["certify", str(SANOV), "--output", str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()
    assert again.with_suffix(".transcript.txt").read_bytes() == out.with_suffix(".transcript.txt").read_bytes()


def test_certify_triangular_is_solvable(tmp_path):
    out = tmp_path / "tri.json"
    assert main(["certify", str(TRIANGULAR), "--output", str(out)]) == 1
    assert json.loads(out.read_text())["status"] == "certified-virtually-solvable"


def test_certify_budget_exhausted(tmp_path):
    out = tmp_path / "b.json"
    assert main(["certify", str(SANOV), "--budget-words", "1", "--output", str(out)]) == 2
    assert json.loads(out.read_text())["status"] == "failed"


def test_input_errors_exit_3(tmp_path):
    bad = _write(tmp_path, {"dimension": 2, "matrices": [[["1/0", 0], [0, 1]]]})
    assert main(["growth", bad, "--n", "2"]) == 3
    singular = _write(tmp_path, {"matrices": [[[1, 2], [2, 4]]]}, "s.json")
    assert main(["growth", singular, "--n", "2"]) == 3
    assert main(["certify", str(SANOV), "--place", "p:4", "--output", str(tmp_path / "o.json")]) == 3
    assert main(["growth", str(tmp_path / "missing.json"), "--n", "2"]) == 3


def test_growth_csv(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["growth", str(SANOV), "--n", "4", "--output", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "n,size"
    assert [int(r.split(",")[1]) for r in rows[1:]] == [5, 17, 53, 161]


def test_girth_csv(tmp_path):
    out = tmp_path / "girth.csv"
    assert main(["girth", str(SANOV), "--primes", "5,11,23", "--output", str(out)]) == 0
    rows = [r.split(",") for r in out.read_text().splitlines()]
    assert rows[0][:2] == ["p", "girth"]
    assert [(int(r[0]), int(r[1])) for r in rows[1:]] == [(5, 5), (11, 9), (23, 12)]


def test_cogrowth_commuting_positive(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["cogrowth", str(COMMUTING), "--n", "4", "--output", str(out)]) == 0
    rows = [r.split(",") for r in out.read_text().splitlines()[1:]]
    assert rows[-1][3] != "0"


def test_cogrowth_certified_pair_zero(certified, tmp_path):
    _, cert = certified
    out = tmp_path / "c.csv"
    assert main(["cogrowth", str(SANOV), "--n", "4", "--certificate", str(cert), "--output", str(out)]) == 0
    rows = [r.split(",") for r in out.read_text().splitlines()[1:]]
    assert all(r[1] == "0" and r[3] == "0" for r in rows)


def test_heights_and_spectral_json(tmp_path):
    h = tmp_path / "h.json"
    s = tmp_path / "s.json"
    assert main(["heights", str(SANOV), "--output", str(h)]) == 0
    assert main(["spectral", str(SANOV), "--output", str(s)]) == 0
    hj = json.loads(h.read_text())
    assert hj["set_height"]["kind"] == "h"
    sj = json.loads(s.read_text())
    assert sj
    # byte-deterministic payloads
    h2 = tmp_path / "h2.json"
    assert main(["heights", str(SANOV), "--output", str(h2)]) == 0
    assert h.read_bytes() == h2.read_bytes()
