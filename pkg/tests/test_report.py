import json
from importlib import resources

import jsonschema
import pytest

from pdoubling.cli import main
from pdoubling.report import bounds, revalidate, sweep

SCHEMA = json.loads((resources.files("pdoubling") / "schema" / "output.schema.json").read_text())


def run(tmp_path, *argv):
    out = tmp_path / "out.json"
    code = main([*argv, "--json", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


@pytest.mark.parametrize(
    "dim,u,v,want",
    [
        (1, "box:1", "box:5", (1.8, 2.2)),
        (1, "box:1", "box:1", (1.0, 1.0)),
    ],
)
def test_sandwich_values(dim, u, v, want):
    rep = bounds(dim, u, v, witness_trials=10)
    assert rep.sandwich == pytest.approx(want, abs=1e-12)
    assert rep.consistency


def test_square_sandwich():
    rep = bounds(2, "box:1,1", "box:2,2", witness_trials=10)
    lattice = {e.audit["lattice"]: e.value for e in rep.entries if e.method == "lattice"}
    assert lattice["Z2"] == pytest.approx(2.25)
    # the sheared hexagonal lattice also packs the unit square and does better
    assert rep.sandwich == pytest.approx((2.75, 6.25))


def test_certified_entries_revalidate():
    rep = bounds(2, "ball:1", "ball:3", witness_trials=5).to_json()
    assert revalidate(rep)
    tampered = json.loads(json.dumps(rep))
    for e in tampered["entries"]:
        if e["method"] == "tiling-cover":
            e["value"] *= 0.9
    assert not revalidate(tampered)


def test_witnesses_below_upper_on_default_matrix():
    for dim in (1, 2, 3):
        for kind in ("ball", "box"):
            for r in (1, 2, 4):
                rep = bounds(dim, f"{kind}:1", f"{kind}:{r}", witness_trials=20)
                assert rep.consistency, (dim, kind, r)
                assert rep.witness_best <= rep.sandwich[1] + 1e-6


def test_sweep_rows():
    rows = sweep([1, 2, 3], range(1, 11), "box", witness_trials=2)
    last = [r for r in rows if r["n"] == 3 and r["r"] == 10][0]
    assert last["lower_lattice"] == pytest.approx(1.9**3)
    assert last["upper_tiling"] == pytest.approx(2.1**3)
    assert [r["lower_lattice"] for r in rows if r["n"] == 1] == pytest.approx([2 - 1 / r for r in range(1, 11)])
    assert [(r["n"], r["r"]) for r in rows] == [(n, float(r)) for n in (1, 2, 3) for r in range(1, 11)]


def test_ball_sweep_hexagonal():
    (row,) = sweep([2], [50], "ball", witness_trials=0)
    assert abs(row["lower_lattice"] - 3.6276) <= 0.05 * 3.6276
    assert row["ref_2n_delta"] == pytest.approx(3.6276, abs=1e-4)


def test_parallel_sweep_matches_serial():
    a = sweep([1, 2], [1, 3], "ball", witness_trials=3)
    b = sweep([1, 2], [1, 3], "ball", witness_trials=3, jobs=2)
    assert a == b


def test_cli_bounds_is_byte_reproducible_and_valid(tmp_path):
    argv = ["bounds", "--dim", "2", "--u", "ball:1", "--v", "ball:2", "--witness-trials", "10", "--seed", "5"]
    code, doc, out = run(tmp_path, *argv)
    first = out.read_bytes()
    assert code == 0
    jsonschema.validate(doc, SCHEMA)
    code, _, out = run(tmp_path, *argv)
    assert out.read_bytes() == first


def test_cli_seed_position_does_not_matter(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    common = ["--dim", "1", "--u", "box:1", "--v", "box:3", "--witness-trials", "4"]
    main(["--seed", "9", "bounds", *common, "--json", str(a)])
    main(["bounds", "--seed", "9", *common, "--json", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_cli_certificate_export(tmp_path):
    cert = tmp_path / "cert.json"
    code, _, _ = run(tmp_path, "bounds", "--dim", "1", "--u", "box:1", "--v", "box:3", "--witness-trials", "0",
                     "--certificate", str(cert))
    doc = json.loads(cert.read_text())
    jsonschema.validate(doc, SCHEMA)
    assert code == 0 and doc["size"] == 7 and sorted(x[0] for x in doc["X"]) == [-3, -2, -1, 0, 1, 2, 3]


def test_cli_other_outputs_validate(tmp_path):
    for argv in (
        ["oracle", "zq", "--q", "64", "--trials", "50"],
        ["witness", "--dim", "1", "--u", "box:1", "--v", "box:2", "--f", "latdir:Zn,R=10"],
        ["witness", "--dim", "2", "--u", "ball:1", "--v", "ball:2", "--f", "cms:seed=3,J=4"],
        ["sweep", "--dims", "1..2", "--rs", "1,2", "--witness-trials", "1"],
        ["verify", "--only", "1d-sharp-window,proof-construction"],
    ):
        code, doc, _ = run(tmp_path, *argv)
        assert code == 0, argv
        jsonschema.validate(doc, SCHEMA)
    _, doc, _ = run(tmp_path, "witness", "--dim", "1", "--u", "box:1", "--v", "box:2", "--f", "latdir:Zn,R=10")
    assert doc["exact"] == "61/42"


def test_cli_csv_and_dat(tmp_path):
    csv = tmp_path / "s.csv"
    assert main(["sweep", "--dims", "1", "--rs", "1..3", "--witness-trials", "0", "--csv", str(csv)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "n,r,lower_lattice,upper_tiling,upper_rogers,witness_best,ref_2n,ref_2n_delta"
    assert lines[2].startswith("1,2.0,1.5,2.5,")
    dat = (tmp_path / "s.dat").read_text().splitlines()
    assert dat[0].startswith("# n r") and len(dat) == 4


def test_cli_parse_error(capsys):
    assert main(["bounds", "--dim", "2", "--u", "box:1,1", "--v", "bal:2"]) == 2
    err = capsys.readouterr().err
    assert "position 0" in err and "^" in err
    assert main(["bounds", "--dim", "2", "--u", "box:1,2,3", "--v", "box:2"]) == 2


def test_cli_resource_cap(tmp_path):
    cert = tmp_path / "cert.json"
    argv = ["bounds", "--dim", "3", "--u", "box:1", "--v", "box:200", "--witness-trials", "0"]
    assert main([*argv, "--certificate", str(cert), "--json", str(tmp_path / "r.json")]) == 4
    assert main(["witness", "--dim", "3", "--u", "ball:1", "--v", "ball:2", "--f", "latdir:Z3,R=1000"]) == 4


def test_capped_sources_are_reported():
    rep = bounds(8, "ball:1", "ball:400", witness_trials=0)
    assert rep.consistency and rep.sandwich[0] == 1.0
    assert any("skipped" in c and "candidate points" in c for c in rep.commentary)


def test_cli_consistency_violation(monkeypatch, tmp_path):
    import pdoubling.report as report

    orig = report.lattice_lower_entries
    monkeypatch.setattr(report, "lattice_lower_entries", lambda U, V, **kw: orig(U, V, count_offset=1))
    code, doc, _ = run(tmp_path, "bounds", "--dim", "1", "--u", "box:1", "--v", "box:1", "--witness-trials", "0")
    assert code == 3 and doc["consistency"] is False


def test_verify_tamper_paths(capsys):
    assert main(["verify", "--only", "1d-sharp-window,coverage-audit", "--tamper", "grid"]) != 0
    out = capsys.readouterr().out
    assert "FAIL  1d-sharp-window" in out and "PASS  coverage-audit" in out
    assert main(["verify", "--only", "sandwich-consistency", "--tamper", "count"]) != 0
    assert "FAIL  sandwich-consistency" in capsys.readouterr().out
    assert main(["verify", "--only", "nonsense"]) == 2
