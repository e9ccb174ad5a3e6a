import json
from pathlib import Path

import jsonschema
import pytest

from dpcount import cli
from dpcount.cli import RunConfig, main, ratio_tail_check

SCHEMA = json.loads((Path(cli.__file__).parent / "schema" / "report.schema.json").read_text())


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_count_surface_report_validates(capsys):
    code, out, _ = _run(["count-surface", "--fixture", "dp4", "--bgrid", "5,10,20,40"], capsys)
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, SCHEMA)
    assert rep["command"] == "count-surface" and rep["ok"]
    assert "threads" not in rep["config"] and "out" not in rep["config"]
    assert [r["B"] for r in rep["result"]["rows"]] == [5, 10, 20, 40]


@pytest.mark.parametrize("argv", [
    ["binary-sum", "--form", "1,0,0,0,1", "--agrid", "2,4,8"],
    ["verify-cover", "--form", "1,1,25", "--t", "2", "--primes", "5"],
    ["count-conic", "--fixture", "1,0,0,1,0,-1", "--box", "30,30,30", "--mode", "brute"],
    ["count-conic", "--field", "Q(i)", "--fixture", "1,0,0,1,0,-1", "--box", "3,3,3"],
    ["count-bundle", "--fixture", "dp4", "--agrid", "1,2", "--box", "10,10,10"],
])
def test_reports_validate(argv, capsys):
    code, out, _ = _run(argv, capsys)
    assert code == 0
    jsonschema.validate(json.loads(out), SCHEMA)


def test_verify_cover_example(capsys):
    code, out, _ = _run(["verify-cover", "--form", "1,1,25", "--t", "2", "--primes", "5"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["pass"] and res["failures"] == 0
    assert res["details"][0]["J"] <= res["details"][0]["J_bound"]


def test_compare_oracle_surface(capsys):
    code, out, _ = _run(["compare-oracle", "--fixture", "dp4", "--bgrid", "100"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["comparisons"][0]["result"] == "sets identical"


def test_out_directory(tmp_path):
    assert main(["count-surface", "--fixture", "dp3", "--bmax", "40", "--out", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["count-surface.csv", "count-surface.json", "count-surface.timings.json"]
    rows = (tmp_path / "count-surface.csv").read_text().splitlines()
    assert rows[0] == "B,N" and len(rows) == 5


def test_threads_byte_identical(tmp_path):
    for t in (1, 8):
        assert main(["count-surface", "--fixture", "dp3", "--bgrid", "10,20,40", "--threads", str(t),
                     "--out", str(tmp_path / f"t{t}")]) == 0
    for name in ("count-surface.json", "count-surface.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t8" / name).read_bytes()


def test_fit_exponent_from_csv(tmp_path, capsys):
    p = tmp_path / "n.csv"
    p.write_text("B,N\n10,100\n100,10000\n1000,1000000\n")
    code, out, _ = _run(["fit-exponent", "--input", str(p)], capsys)
    assert code == 0 and json.loads(out)["result"]["fit"]["slope"] == pytest.approx(2)


def _err(err):
    return json.loads(err.strip().splitlines()[-1])["error"]


def test_exit_usage(capsys):
    code, _, _ = _run(["no-such-command"], capsys)
    assert code == 2
    code, _, _ = _run(["count-surface", "--bmax", "10", "--bgrid", "1,2"], capsys)
    assert code == 2


def test_exit_parse(tmp_path, capsys):
    code, _, err = _run(["count-surface", "--fixture", "nope", "--bgrid", "1,2,3"], capsys)
    assert code == 3 and _err(err) == "parse"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = _run(["count-surface", "--fixture", str(bad), "--bgrid", "1,2,3"], capsys)
    assert code == 3
    code, _, _ = _run(["count-bundle", "--fixture", "dp2", "--agrid", "1", "--box", "1,2"], capsys)
    assert code == 3
    code, _, _ = _run(["count-surface", "--fixture", "dp4", "--bgrid", "3,2"], capsys)
    assert code == 3
    p = tmp_path / "rows.csv"
    p.write_text("B,N\n1,x\n")
    code, _, _ = _run(["fit-exponent", "--input", str(p)], capsys)
    assert code == 3


def test_exit_invariant(tmp_path, capsys):
    code, _, err = _run(["count-conic", "--fixture", "1,0,0,1,0,0", "--box", "5,5,5"], capsys)
    assert code == 4 and _err(err) == "invariant"
    singular = {"name": "dp2-singular", "variant": "dp2", "field": "Q",
                "q": [[1, 0, 0, 1, 0, 0], [0, 0, 0, 1, 0, 1], [0, 0, 1, 0, 0, 0]], "curves": []}
    p = tmp_path / "dp2s.json"
    p.write_text(json.dumps(singular))
    code, _, _ = _run(["count-surface", "--fixture", str(p), "--bgrid", "1,2,3"], capsys)
    assert code == 4


def test_exit_check(tmp_path, capsys):
    p = tmp_path / "few.csv"
    p.write_text("B,N\n1,1\n2,2\n")
    code, _, err = _run(["fit-exponent", "--input", str(p)], capsys)
    assert code == 1 and _err(err) == "fit"


def test_exit_resource(capsys):
    code, _, err = _run(["count-conic", "--fixture", "1,0,0,1,0,-2", "--box", "1000,1000,1000",
                         "--mode", "lattice", "--budget", "1"], capsys)
    assert code == 5 and _err(err) == "resource"


def test_ratio_tail_check():
    assert ratio_tail_check([1, 3, 2, 1.5]) == (True, [])
    assert ratio_tail_check([3, 1, 2.5]) == (False, [])
    assert ratio_tail_check([2.5, 0, 1.8, 0.4]) == (True, [1])


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig("count-surface", bgrid=[10, 10])
    with pytest.raises(ValueError):
        RunConfig("count-surface", threads=0)
