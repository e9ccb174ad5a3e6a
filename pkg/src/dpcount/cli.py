"""Command-line entry points.

Every subcommand writes a JSON report (sorted keys, fixed float formatting)
and a CSV table; wall-clock timings go to a separate sidecar file so that
the reports themselves are byte-identical across runs and thread counts.

Exit codes: 0 ok, 1 a check failed, 2 usage, 3 parse error,
4 fixture invariant violated, 5 resource budget exhausted.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

from . import __version__
from .bundle import BinaryForm, ConicBundleTorsor, TorsorError, binary_sum, count_NT0, validate
from .conics.count import brute_points, count_in_box
from .conics.cover import fermat_cover, verify_cover
from .conics.forms import TernaryQuadraticForm, is_soluble
from .fitting import FitError, fit_exponent
from .lattices import ResourceError
from .numfield import FieldError, NumberField
from .surfaces import FIXTURE_DIR, FixtureError, InvariantError, count_points, load_surface

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_PARSE, EXIT_INVARIANT, EXIT_RESOURCE = 0, 1, 2, 3, 4, 5
SCHEMA_VERSION = "1.0"


class ParseError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    field: str = "Q"
    fixture: str | None = None
    bgrid: list = dc_field(default_factory=list)
    agrid: list = dc_field(default_factory=list)
    box: list = dc_field(default_factory=list)
    mode: str = "auto"
    threads: int = 1
    out: str | None = None
    precision: int = 64
    budget: int | None = None
    extra: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        for name in ("bgrid", "agrid"):
            g = getattr(self, name)
            if any(b >= a for a, b in zip(g[1:], g)) or any(x < 1 for x in g):
                raise ParseError(f"{name} must be strictly increasing and >= 1")
        if self.threads < 1:
            raise ParseError("threads must be >= 1")
        if self.precision < 8:
            raise ParseError("precision must be at least 8 bits")

    def echo(self) -> dict:
        """Config fields that influence results (threads and paths excluded)."""
        d = asdict(self)
        d.pop("threads")
        d.pop("out")
        return d


# ---------------------------------------------------------------------------
# parsing helpers

def _int_list(s: str | None, what: str) -> list:
    if s is None or s == "":
        return []
    try:
        return [int(x) for x in str(s).replace(" ", "").split(",") if x]
    except ValueError as err:
        raise ParseError(f"bad integer list for {what}: {s!r}") from err


def _bgrid(args) -> list:
    if args.bgrid:
        return _int_list(args.bgrid, "--bgrid")
    if args.bmax:
        b = int(args.bmax)
        grid = sorted({max(1, b // 8), max(1, b // 4), max(1, b // 2), b})
        return grid
    return []


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ParseError(f"malformed JSON in {path}: {err}") from err


def _resolve_fixture(name: str | None) -> str:
    if name is None:
        raise ParseError("--fixture is required")
    p = Path(name)
    if p.exists():
        return str(p)
    q = FIXTURE_DIR / f"{name}.json"
    if q.exists():
        return str(q)
    raise ParseError(f"fixture {name!r} not found")


def _conic_forms(cfg: RunConfig) -> list:
    """List of (name, coeffs, box or None) from --fixture (coefficients, JSON form or corpus)."""
    fx = cfg.fixture
    if fx is None:
        raise ParseError("--fixture is required (six coefficients or a JSON file)")
    if "," in fx and not Path(fx).exists():
        c = _int_list(fx, "--fixture")
        if len(c) != 6:
            raise ParseError("a conic needs six coefficients a11,a12,a13,a22,a23,a33")
        return [(fx, tuple(c), None)]
    d = _read_json(_resolve_fixture(fx))
    items = d.get("forms") if isinstance(d, dict) and "forms" in d else [d]
    out = []
    for k, it in enumerate(items):
        if not isinstance(it, dict) or "form" not in it:
            raise ParseError("conic fixtures need a 'form' entry")
        c = it["form"]
        if not isinstance(c, list) or len(c) != 6 or not all(isinstance(x, int) for x in c):
            raise ParseError("'form' must be six integers")
        box = it.get("box")
        if box is not None and (len(box) != 3 or not all(isinstance(x, int) and x >= 1 for x in box)):
            raise ParseError("'box' must be three positive integers")
        out.append((str(it.get("name", k)), tuple(c), tuple(box) if box else None))
    return out


def _parse_field(s: str) -> NumberField:
    try:
        return NumberField.parse(s)
    except (FieldError, ValueError) as err:
        raise ParseError(str(err)) from err


def _fmt(x):
    if isinstance(x, float):
        return repr(round(x, 12))
    return x


# ---------------------------------------------------------------------------
# subcommands: each returns (report, csv_header, csv_rows, ok)

def cmd_count_surface(cfg: RunConfig, timings: dict):
    X = load_surface(_resolve_fixture(cfg.fixture))
    if not cfg.bgrid:
        raise ParseError("count-surface needs --bgrid or --bmax")
    method = cfg.mode if cfg.mode in ("fibration", "brute") else "fibration"
    rows = []
    for B in cfg.bgrid:
        _, row = count_points(X, B, method, threads=cfg.threads, timings=timings)
        rows.append(row)
    report = {"surface": X.name, "variant": X.variant, "rows": rows}
    counts = [r["N"] for r in rows]
    report["monotone"] = all(a <= b for a, b in zip(counts, counts[1:]))
    try:
        report["fit"] = fit_exponent([(r["B"], r["N"]) for r in rows]).to_dict()
    except FitError as err:
        report["fit"] = {"error": str(err)}
    return report, ["B", "N"], [[r["B"], r["N"]] for r in rows], report["monotone"]


def cmd_count_conic(cfg: RunConfig, timings: dict):
    F = _parse_field(cfg.field)
    forms = _conic_forms(cfg)
    mode = cfg.mode if cfg.mode in ("brute", "parametrize", "sieve", "lattice") else "auto"
    if F.d != 1:
        mode = "brute"  # the fast routes are implemented over Q only
    rows, results = [], []
    for name, c, fbox in forms:
        Q = TernaryQuadraticForm(c) if F.d == 1 else TernaryQuadraticForm(tuple(F.coerce(x) for x in c), F)
        if Q.is_singular:
            raise InvariantError(f"form {name} is singular")
        boxes = ([(B, B, B) for B in cfg.bgrid] if cfg.bgrid else
                 [tuple(cfg.box)] if cfg.box else [fbox] if fbox else [])
        if not boxes:
            raise ParseError("count-conic needs --box, --bgrid or boxes in the fixture")
        per = []
        for box in boxes:
            t0 = time.perf_counter()
            kw = {"budget": cfg.budget} if cfg.budget is not None and mode in ("lattice", "auto", "sieve") else {}
            pts = count_in_box(Q, box, mode, **kw)
            timings[f"{name}:{box}"] = time.perf_counter() - t0
            per.append({"box": list(box), "N": len(pts)})
            rows.append([name, *box, len(pts)])
        entry = {"name": name, "form": list(c), "soluble": is_soluble(Q) if F.d == 1 else None, "counts": per}
        if cfg.bgrid:
            try:
                entry["fit"] = fit_exponent([(b, r["N"]) for b, r in zip(cfg.bgrid, per)]).to_dict()
            except FitError as err:
                entry["fit"] = {"error": str(err)}
        results.append(entry)
    return {"forms": results, "mode": mode}, ["name", "r1", "r2", "r3", "N"], rows, True


def _load_torsor(cfg: RunConfig) -> ConicBundleTorsor:
    path = _resolve_fixture(cfg.fixture)
    d = _read_json(path)
    if isinstance(d, dict) and "torsor" in d:
        try:
            return ConicBundleTorsor.from_coefficients(d["torsor"], str(d.get("name", "")))
        except (TypeError, ValueError, IndexError) as err:
            raise ParseError(f"malformed torsor: {err}") from err
    X = load_surface(path)
    i = int(cfg.extra.get("fibration", 1)) - 1
    if not 0 <= i < X.m:
        raise ParseError("fibration index out of range")
    return X.fibrations[i].torsor


def ratio_tail_check(ratios, factor: float = 2.0) -> tuple:
    """Beyond the maximum, each non-empty shell ratio is at most factor times the previous non-empty one.

    Shells with ratio 0 (every fiber insoluble or empty in the box) carry no
    information on an upper bound and are skipped; their indices are returned.
    """
    if not ratios:
        return True, []
    k = max(range(len(ratios)), key=lambda i: ratios[i])
    empty = [i for i, x in enumerate(ratios) if x == 0]
    tail = [x for x in ratios[k:] if x > 0]
    return all(b <= factor * a for a, b in zip(tail, tail[1:])), empty


def cmd_count_bundle(cfg: RunConfig, timings: dict):
    T = _load_torsor(cfg)
    rep = validate(T)
    if not rep.valid:
        raise InvariantError("; ".join(rep.violations))
    if not cfg.agrid:
        raise ParseError("count-bundle needs --agrid")
    if not cfg.box:
        raise ParseError("count-bundle needs --box")
    F = _parse_field(cfg.field)
    mode = cfg.mode if cfg.mode in ("brute", "parametrize", "lattice", "auto", "sieve") else "auto"
    summary, rows = [], []
    for A in cfg.agrid:
        t0 = time.perf_counter()
        res = count_NT0(T, A, cfg.box, mode, F, keep_points=False)
        timings[f"A={A}"] = time.perf_counter() - t0
        summary.append({"A": A, "total": res.total, "fibers": len(res.fibers),
                        "degenerate": [[str(a) for a in d] for d in res.degenerate],
                        "ratio": round(res.ratio, 12), "shape": round(res.shape, 12)})
        for u, v, d, n in res.fibers:
            rows.append([A, str(u), str(v), str(d), n])
    tail_ok, empty = ratio_tail_check([s["ratio"] for s in summary])
    report = {"torsor": T.to_coefficients(), "validation": rep.to_dict(), "box": cfg.box,
              "summary": summary, "ratio_tail_within_factor_2": tail_ok,
              "empty_shells": [cfg.agrid[i] for i in empty]}
    return report, ["A", "u", "v", "delta", "count"], rows, True


def cmd_binary_sum(cfg: RunConfig, timings: dict):
    c = _int_list(cfg.extra.get("form") or cfg.fixture, "--form")
    if len(c) < 2:
        raise ParseError("binary-sum needs --form with the coefficients of F")
    F = BinaryForm(tuple(c))
    if not F.is_separable():
        raise InvariantError("binary form is not separable")
    if not cfg.agrid:
        raise ParseError("binary-sum needs --agrid")
    K = _parse_field(cfg.field)
    rows, sums = [], []
    for A in cfg.agrid:
        t0 = time.perf_counter()
        s = binary_sum(F, A, cfg.precision, K)
        timings[f"A={A}"] = time.perf_counter() - t0
        sums.append(s.to_dict())
        rows.append([A, _fmt(s.value), sums[-1]["lower"], sums[-1]["upper"], s.terms])
    report = {"form": list(F.coeffs), "n": F.degree, "sums": sums}
    try:
        report["fit"] = fit_exponent([(A, s["value"]) for A, s in zip(cfg.agrid, sums)]).to_dict()
    except FitError as err:
        report["fit"] = {"error": str(err)}
    return report, ["A", "value", "lower", "upper", "terms"], rows, True


def _non_residue(p: int, t: int) -> int:
    for n in range(2, p):
        if n % p and pow(n, (p - 1) // math.gcd(t, p - 1), p) != 1:
            return n
    return 1


def cover_grid(ts=(2, 3), primes=(2, 3, 5, 7, 11, 13), amax: int = 4) -> list:
    """Fermat-form cases: a_i = p^alpha_i u_i with alpha_1 <= alpha_2 <= alpha_3 <= amax."""
    cases = []
    for t in ts:
        for p in primes:
            units = sorted({1, -1, _non_residue(p, t)})
            for a1 in range(amax + 1):
                for a2 in range(a1, amax + 1):
                    for a3 in range(a2, amax + 1):
                        for u2 in units:
                            for u3 in units:
                                cases.append((t, p, (p ** a1, u2 * p ** a2, u3 * p ** a3)))
    return cases


def cmd_verify_cover(cfg: RunConfig, timings: dict):
    rows, results = [], []
    if cfg.extra.get("grid"):
        cases = cover_grid()
    else:
        c = _int_list(cfg.extra.get("form") or cfg.fixture, "--form")
        if len(c) != 3:
            raise ParseError("verify-cover needs --form a1,a2,a3 (or --grid)")
        ts = _int_list(cfg.extra.get("t") or "2", "--t")
        ps = _int_list(cfg.extra.get("primes") or "", "--primes") or [None]
        cases = [(t, p, tuple(c)) for t in ts for p in ps]
    mode = cfg.mode if cfg.mode in ("orbit", "full") else "orbit"
    ok_all = True
    t0 = time.perf_counter()
    for t, p, a in cases:
        fam = fermat_cover(*a, t, p)
        r = verify_cover(fam, mode)
        ok_all &= r["pass"]
        rows.append([t, p if p else "", *a, r["J"], r["J_bound"], r["min_det"], int(r["J_ok"]), int(r["det_ok"]),
                     int(r["pass"])])
        if not cfg.extra.get("grid"):
            results.append(r)
    timings["verify"] = time.perf_counter() - t0
    report = {"cases": len(cases), "failures": sum(1 for r in rows if not r[-1]), "pass": ok_all,
              "mode": mode, "details": results}
    header = ["t", "p", "a1", "a2", "a3", "J", "J_bound", "min_det", "J_ok", "det_ok", "pass"]
    return report, header, rows, ok_all


def cmd_fit_exponent(cfg: RunConfig, timings: dict):
    path = cfg.extra.get("input") or cfg.fixture
    if not path:
        raise ParseError("fit-exponent needs --input CSV with columns B,N")
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    reader = csv.reader(io.StringIO(text))
    head = next(reader, None)
    if not head or len(head) < 2:
        raise ParseError("CSV needs a header with at least two columns")
    cols = [h.strip() for h in head]
    xi = cols.index("B") if "B" in cols else cols.index("A") if "A" in cols else 0
    yi = cols.index("N") if "N" in cols else cols.index("value") if "value" in cols else len(cols) - 1
    pairs = []
    for row in reader:
        if not row:
            continue
        try:
            pairs.append((float(row[xi]), float(row[yi])))
        except (ValueError, IndexError) as err:
            raise ParseError(f"bad CSV row {row}") from err
    fit = fit_exponent(pairs)
    return {"pairs": [[a, b] for a, b in pairs], "fit": fit.to_dict()}, \
        ["slope", "intercept", "residual"], [[_fmt(fit.slope), _fmt(fit.intercept), _fmt(fit.residual)]], True


def cmd_compare_oracle(cfg: RunConfig, timings: dict):
    path = _resolve_fixture(cfg.fixture) if cfg.fixture and "," not in cfg.fixture else None
    d = _read_json(path) if path else None
    rows, details = [], []
    ok = True
    if d is not None and isinstance(d, dict) and "variant" in d:
        X = load_surface(path)
        if not cfg.bgrid:
            raise ParseError("compare-oracle on a surface needs --bgrid or --bmax")
        for B in cfg.bgrid:
            a, ra = count_points(X, B, "fibration", threads=cfg.threads, timings=timings)
            b, rb = count_points(X, B, "brute", timings=timings)
            same = a == b
            ok &= same
            rows.append([B, len(a), len(b), int(same)])
            details.append({"B": B, "fibration": len(a), "brute": len(b),
                            "result": "sets identical" if same else "sets differ",
                            "only_fibration": [list(p) for p in sorted(set(a) - set(b))[:10]],
                            "only_brute": [list(p) for p in sorted(set(b) - set(a))[:10]]})
        return {"surface": X.name, "comparisons": details, "pass": ok}, \
            ["B", "fibration", "brute", "identical"], rows, ok
    from .conics.sieve import quadmain_sieve
    for name, c, fbox in _conic_forms(cfg):
        Q = TernaryQuadraticForm(c)
        if Q.is_singular:
            raise InvariantError(f"form {name} is singular")
        box = tuple(cfg.box) if cfg.box else fbox
        if not box:
            raise ParseError("compare-oracle on conics needs --box or boxes in the fixture")
        t0 = time.perf_counter()
        b = brute_points(Q, box)
        p = count_in_box(Q, box, "parametrize")
        s, diag = quadmain_sieve(Q, box)
        timings[f"{name}:{box}"] = time.perf_counter() - t0
        same = b == p == s
        ok &= same
        rows.append([name, *box, len(b), len(p), len(s), int(same)])
        details.append({"name": name, "form": list(c), "box": list(box), "brute": len(b), "parametrize": len(p),
                        "sieve": len(s), "result": "sets identical" if same else "sets differ",
                        "sieve_diagnostics": diag.to_dict()})
    return {"comparisons": details, "pass": ok}, ["name", "r1", "r2", "r3", "brute", "parametrize", "sieve",
                                                   "identical"], rows, ok


COMMANDS = {
    "count-surface": cmd_count_surface,
    "count-conic": cmd_count_conic,
    "count-bundle": cmd_count_bundle,
    "binary-sum": cmd_binary_sum,
    "verify-cover": cmd_verify_cover,
    "fit-exponent": cmd_fit_exponent,
    "compare-oracle": cmd_compare_oracle,
}


# ---------------------------------------------------------------------------
# output

def render_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=str) + "\n"


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def run(cfg: RunConfig) -> tuple:
    """Execute one subcommand; returns (exit code, report dict)."""
    timings: dict = {}
    report, header, rows, ok = COMMANDS[cfg.command](cfg, timings)
    full = {"schema_version": SCHEMA_VERSION, "code_version": __version__, "command": cfg.command,
            "config": cfg.echo(), "result": report, "ok": bool(ok)}
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.command}.json").write_text(render_json(full))
        (out / f"{cfg.command}.csv").write_text(render_csv(header, rows))
        (out / f"{cfg.command}.timings.json").write_text(
            render_json({"threads": cfg.threads, "seconds": {k: round(v, 6) for k, v in timings.items()}}))
    else:
        sys.stdout.write(render_json(full))
    return (EXIT_OK if ok else EXIT_CHECK), full


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpcount", description="Counting rational points on conic bundle surfaces.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--field", default="Q", help="Q or Q(sqrt(-d)) for d in 1,2,3,7,11,19,43,67,163")
        p.add_argument("--fixture", help="fixture name or path (or inline coefficients)")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--bmax", type=int, help="largest B; grid is bmax/8, bmax/4, bmax/2, bmax")
        g.add_argument("--bgrid", help="comma-separated strictly increasing B values")
        p.add_argument("--agrid", help="comma-separated strictly increasing A values")
        p.add_argument("--box", help="comma-separated box radii r1,r2,r3")
        p.add_argument("--mode", default="auto",
                       help="fibration|brute (surfaces); brute|parametrize|sieve|lattice|auto (conics); orbit|full (covers)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", help="output directory for JSON, CSV and timings")
        p.add_argument("--precision", type=int, default=64, help="fractional bits for interval sums")
        p.add_argument("--budget", type=int, help="node budget for lattice enumeration (exit 5 when exceeded)")
        p.add_argument("--form", help="inline coefficients (binary form or diagonal Fermat form)")
        p.add_argument("--t", help="exponents t for verify-cover, comma-separated")
        p.add_argument("--primes", help="primes for verify-cover, comma-separated")
        p.add_argument("--grid", action="store_true", help="verify-cover on the standard grid")
        p.add_argument("--input", help="CSV input for fit-exponent")
        p.add_argument("--fibration", type=int, default=1, help="fibration index for count-bundle on a surface")
    return ap


def config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command, field=args.field, fixture=args.fixture, bgrid=_bgrid(args),
        agrid=_int_list(args.agrid, "--agrid"), box=_int_list(args.box, "--box"), mode=args.mode,
        threads=args.threads, out=args.out, precision=args.precision, budget=args.budget,
        extra={k: getattr(args, k) for k in ("form", "t", "primes", "grid", "input", "fibration")
               if getattr(args, k) not in (None, False)})


def _fail(code: int, kind: str, msg: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": msg}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    try:
        cfg = config_from_args(args)
        if cfg.box and (len(cfg.box) != 3 or min(cfg.box) < 1):
            raise ParseError("--box needs three radii >= 1")
        code, _ = run(cfg)
        return code
    except (ParseError, FixtureError) as err:
        return _fail(EXIT_PARSE, "parse", str(err))
    except (InvariantError, TorsorError) as err:
        return _fail(EXIT_INVARIANT, "invariant", str(err))
    except (ResourceError, MemoryError) as err:
        return _fail(EXIT_RESOURCE, "resource", str(err))
    except FitError as err:
        return _fail(EXIT_CHECK, "fit", str(err))
    except NotImplementedError as err:
        return _fail(EXIT_USAGE, "usage", str(err))


if __name__ == "__main__":
    sys.exit(main())
