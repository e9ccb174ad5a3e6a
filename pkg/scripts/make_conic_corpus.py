"""Regenerate fixtures/conic_corpus.json: seeded random soluble non-singular forms.

Coefficients are drawn uniformly from [-20, 20]; box radii are log-uniform in
[10, 1000] per coordinate, with the first two forms on the full 10^3 cube.
"""
import argparse
import json
import math
import random
from pathlib import Path

from dpcount.conics.forms import TernaryQuadraticForm, is_soluble
from dpcount.surfaces import FIXTURE_DIR


def make(n: int, seed: int, cmax: int = 20, rmin: int = 10, rmax: int = 1000) -> list:
    rng = random.Random(seed)
    forms, seen = [], set()
    while len(forms) < n:
        c = tuple(rng.randint(-cmax, cmax) for _ in range(6))
        if c in seen:
            continue
        seen.add(c)
        Q = TernaryQuadraticForm(c)
        if Q.is_singular or not is_soluble(Q):
            continue
        if len(forms) < 2:
            box = [rmax] * 3
        else:
            lo, hi = math.log(rmin), math.log(rmax)
            box = [int(round(math.exp(rng.uniform(lo, hi)))) for _ in range(3)]
        forms.append({"name": f"c{len(forms):02d}", "form": list(c), "box": box, "det": Q.det})
    return forms


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--out", default=str(FIXTURE_DIR / "conic_corpus.json"))
    a = ap.parse_args()
    forms = make(a.n, a.seed)
    doc = {"name": "conic_corpus", "seed": a.seed, "coefficient_bound": 20,
           "provenance": "scripts/make_conic_corpus.py", "forms": forms}
    Path(a.out).write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {len(forms)} forms to {a.out}")


if __name__ == "__main__":
    main()
