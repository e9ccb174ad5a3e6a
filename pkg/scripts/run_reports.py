"""Regenerate every report behind the acceptance checks into one directory.

Each check gets its own subdirectory holding the JSON report, the CSV table and
the timings sidecar, exactly as the command line writes them.
"""
import argparse
import json
import time
from pathlib import Path

from dpcount.cli import RunConfig, run
from dpcount.surfaces import FIXTURE_DIR


def configs(out: Path) -> dict:
    corpus = json.loads((FIXTURE_DIR / "conic_corpus.json").read_text())["forms"]
    small = sorted(corpus, key=lambda f: (abs(f["det"]), f["name"]))[:5]
    growth = out / "growth_forms.json"
    growth.write_text(json.dumps({"forms": [{"name": "pythagorean", "form": [1, 0, 0, 1, 0, -1]}]
                                  + [{"name": f["name"], "form": f["form"]} for f in small]}, indent=2))
    return {
        "oracle-dp4": RunConfig("compare-oracle", fixture="dp4", bgrid=[20, 50, 100]),
        "oracle-dp3": RunConfig("compare-oracle", fixture="dp3", bgrid=[20, 50, 100]),
        "oracle-dp2": RunConfig("compare-oracle", fixture="dp2", bgrid=[10, 25, 50]),
        "oracle-conics": RunConfig("compare-oracle", fixture="conic_corpus"),
        "cover-grid": RunConfig("verify-cover", extra={"grid": True}),
        "conic-growth": RunConfig("count-conic", fixture=str(growth), bgrid=[100, 1000, 10000],
                                  mode="parametrize"),
        "binary-sum": RunConfig("binary-sum", agrid=[32, 64, 128, 256, 512, 1024], extra={"form": "1,0,0,0,1"}),
        "bundle-dp2": RunConfig("count-bundle", fixture="dp2", agrid=[1, 2, 4, 8], box=[100, 100, 100]),
        "exponent-dp4": RunConfig("count-surface", fixture="dp4", bgrid=[250, 500, 1000, 2000], mode="fibration"),
        "exponent-dp3": RunConfig("count-surface", fixture="dp3", bgrid=[125, 250, 500, 1000], mode="fibration"),
        "exponent-dp2": RunConfig("count-surface", fixture="dp2", bgrid=[62, 125, 250, 500], mode="brute"),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/reports")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="subset of report names")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, cfg in configs(out).items():
        if args.only and name not in args.only:
            continue
        cfg.threads, cfg.out = args.threads, str(out / name)
        t0 = time.perf_counter()
        code, _ = run(cfg)
        print(f"{name:14s} exit={code} {time.perf_counter() - t0:7.1f}s")


if __name__ == "__main__":
    main()
