"""Acceptance criteria 1-9. Each test prints a single PASS/FAIL line.

Reports are produced through the same code path as the command line
(cli.run writing JSON and CSV into a directory) and cached per session so
that the determinism check can compare the bytes written with one and with
eight worker processes.
"""
import json
import random
import time
from fractions import Fraction

import pytest

from dpcount import cli
from dpcount.cli import RunConfig
from dpcount.lattices import BoxRegion, IntegerLattice, det_int, minkowski_check, successive_minima

CORPUS = cli.FIXTURE_DIR / "conic_corpus.json"


def _line(capsys, k, ok, msg):
    with capsys.disabled():
        print(f"\n[criterion {k}] {'PASS' if ok else 'FAIL'}: {msg}")


def _five_smallest_det():
    forms = json.loads(CORPUS.read_text())["forms"]
    return sorted(forms, key=lambda f: (abs(f["det"]), f["name"]))[:5]


def _configs(tmp):
    growth = tmp / "growth_forms.json"
    if not growth.exists():
        forms = [{"name": "pythagorean", "form": [1, 0, 0, 1, 0, -1]}]
        forms += [{"name": f["name"], "form": f["form"]} for f in _five_smallest_det()]
        growth.write_text(json.dumps({"forms": forms}, sort_keys=True))
    return {
        "1-dp4": RunConfig("compare-oracle", fixture="dp4", bgrid=[20, 50, 100]),
        "1-dp3": RunConfig("compare-oracle", fixture="dp3", bgrid=[20, 50, 100]),
        "1-dp2": RunConfig("compare-oracle", fixture="dp2", bgrid=[10, 25, 50]),
        "2": RunConfig("compare-oracle", fixture=str(CORPUS)),
        "3": RunConfig("verify-cover", extra={"grid": True}),
        "5": RunConfig("count-conic", fixture=str(growth), bgrid=[100, 1000, 10000], mode="parametrize"),
        "6": RunConfig("binary-sum", agrid=[32, 64, 128, 256, 512, 1024], extra={"form": "1,0,0,0,1"}),
        "7": RunConfig("count-bundle", fixture="dp2", agrid=[1, 2, 4, 8], box=[100, 100, 100]),
        "8-dp4": RunConfig("count-surface", fixture="dp4", bgrid=[250, 500, 1000, 2000], mode="fibration"),
        "8-dp3": RunConfig("count-surface", fixture="dp3", bgrid=[125, 250, 500, 1000], mode="fibration"),
        "8-dp2": RunConfig("count-surface", fixture="dp2", bgrid=[62, 125, 250, 500], mode="brute"),
    }


_CACHE = {}


@pytest.fixture(scope="session")
def report(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")

    def get(key, threads=1):
        if (key, threads) not in _CACHE:
            cfg = _configs(base)[key]
            out = base / f"{key}-t{threads}"
            cfg = RunConfig(**{**cfg.__dict__, "threads": threads, "out": str(out)})
            t0 = time.perf_counter()
            code, full = cli.run(cfg)
            files = {p.name: p.read_bytes() for p in sorted(out.iterdir()) if "timings" not in p.name}
            _CACHE[key, threads] = (code, full, files, time.perf_counter() - t0)
        return _CACHE[key, threads]
    return get


def test_criterion_1_surface_oracle(report, capsys):
    msgs, ok = [], True
    for key in ("1-dp4", "1-dp3", "1-dp2"):
        code, full, _, secs = report(key)
        res = full["result"]
        same = code == 0 and all(c["result"] == "sets identical" for c in res["comparisons"])
        ok &= same
        msgs.append(f"{res['surface']} " + ",".join(f"B={c['B']}:{c['brute']}" for c in res["comparisons"])
                    + f" ({secs:.0f}s)")
    _line(capsys, 1, ok, "fibration = brute; " + "; ".join(msgs))
    assert ok


def test_criterion_2_conic_oracle(report, capsys):
    code, full, _, secs = report("2")
    comps = full["result"]["comparisons"]
    bad = [c["name"] for c in comps if c["result"] != "sets identical"]
    coeff_ok = all(max(abs(x) for x in c["form"]) <= 20 and max(c["box"]) <= 1000 for c in comps)
    ok = code == 0 and not bad and len(comps) >= 50 and coeff_ok
    _line(capsys, 2, ok, f"{len(comps)} forms, {len(bad)} mismatches, "
          f"{sum(c['brute'] for c in comps)} points ({secs:.0f}s)")
    assert ok


def test_criterion_3_cover_grid(report, capsys):
    code, full, _, secs = report("3")
    res = full["result"]
    ok = code == 0 and res["failures"] == 0 and res["pass"]
    _line(capsys, 3, ok, f"{res['cases']} cases, {res['failures']} failures ({secs:.1f}s)")
    assert ok


def _minkowski_run(seed=20240601, count=1000, det_max=10 ** 4):
    rng = random.Random(seed)
    rows, fails = [], 0
    while len(rows) < count:
        n = rng.randint(1, 3)
        M = [[rng.randint(-30, 30) for _ in range(n)] for _ in range(n)]
        d = abs(det_int(M))
        if d == 0 or d > det_max:
            continue
        L = IntegerLattice.from_generators(M, n)
        S = BoxRegion((1,) * n)
        m = successive_minima(L, S)
        lhs, rhs = minkowski_check(m, S, L.det)
        indep = det_int([list(w) for w in m.witnesses]) != 0
        hit = all(max(Fraction(abs(x)) for x in w) == lam and tuple(w) in L
                  for w, lam in zip(m.witnesses, m.values))
        good = lhs <= rhs and indep and hit
        fails += not good
        rows.append((n, d, [str(v) for v in m.values], good))
    return rows, fails


def test_criterion_4_minkowski(capsys):
    t0 = time.perf_counter()
    rows, fails = _minkowski_run()
    again, _ = _minkowski_run()
    ok = fails == 0 and rows == again
    _line(capsys, 4, ok, f"{len(rows)} lattices (n<=3, det<=1e4), {fails} failures "
          f"({time.perf_counter() - t0:.1f}s for two runs)")
    assert ok


def test_criterion_5_conic_growth(report, capsys):
    code, full, _, secs = report("5")
    forms = full["result"]["forms"]
    slopes = {f["name"]: f["fit"]["slope"] for f in forms}
    ok = code == 0 and len(forms) == 6 and all(0.85 <= s <= 1.15 for s in slopes.values())
    _line(capsys, 5, ok, "slopes " + ", ".join(f"{k}={v:.3f}" for k, v in slopes.items()) + f" ({secs:.0f}s)")
    assert ok


def test_criterion_6_binary_sum(report, capsys):
    code, full, _, secs = report("6")
    slope = full["result"]["fit"]["slope"]
    ok = code == 0 and slope <= 2 - 4 / 3 + 0.2
    _line(capsys, 6, ok, f"slope {slope:.4f} <= {2 - 4 / 3 + 0.2:.4f} ({secs:.0f}s)")
    assert ok


def test_criterion_7_bundle_ratio(report, capsys):
    code, full, _, secs = report("7")
    res = full["result"]
    ratios = [s["ratio"] for s in res["summary"]]
    ok = code == 0 and res["validation"]["valid"] and res["ratio_tail_within_factor_2"]
    _line(capsys, 7, ok, "ratios " + ", ".join(f"A={s['A']}:{s['ratio']:.3f}" for s in res["summary"])
          + f"; empty shells {res['empty_shells']} ({secs:.0f}s)")
    assert ok and max(ratios) > 0


def test_criterion_8_surface_exponents(report, capsys):
    ceilings = {"8-dp4": 1.35, "8-dp3": 1.55, "8-dp2": 2.25}
    msgs, ok = [], True
    for key, cap in ceilings.items():
        code, full, _, secs = report(key)
        res = full["result"]
        s = res["fit"]["slope"]
        ok &= code == 0 and res["monotone"] and s <= cap
        msgs.append(f"{res['surface']} slope {s:.3f} <= {cap} ({secs:.0f}s)")
    _line(capsys, 8, ok, "; ".join(msgs))
    assert ok


def test_criterion_9_determinism(report, capsys):
    keys = ["1-dp4", "1-dp3", "1-dp2", "2", "3", "5", "6", "7", "8-dp4", "8-dp3", "8-dp2"]
    diff = []
    for key in keys:
        _, _, f1, _ = report(key, 1)
        _, _, f8, _ = report(key, 8)
        if f1 != f8:
            diff.append(key)
    ok = not diff
    _line(capsys, 9, ok, f"{len(keys)} reports (plus criterion 4 rerun) byte-identical for threads 1 and 8"
          if ok else f"reports differ: {diff}")
    assert ok
