"""Least-squares exponent fits on log-log data."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float  # root mean square of log residuals
    residuals: tuple
    n: int

    def to_dict(self, digits: int = 12) -> dict:
        return {"slope": round(self.slope, digits), "intercept": round(self.intercept, digits),
                "residual": round(self.residual, digits),
                "residuals": [round(r, digits) for r in self.residuals], "n": self.n}


def fit_exponent(pairs: Sequence[tuple], min_points: int = 3) -> ExponentFit:
    """Fit log N = slope log B + intercept over pairs with N > 0.

    Closed-form sums in a fixed order keep the result bit-identical across runs.
    """
    pts = [(float(b), float(n)) for b, n in pairs if float(n) > 0 and float(b) > 0]
    if len(pts) < min_points:
        raise FitError(f"need at least {min_points} pairs with N > 0, got {len(pts)}")
    xs = [math.log(b) for b, _ in pts]
    ys = [math.log(n) for _, n in pts]
    k = len(xs)
    mx = math.fsum(xs) / k
    my = math.fsum(ys) / k
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise FitError("all B values coincide")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    res = tuple(y - (slope * x + intercept) for x, y in zip(xs, ys))
    rms = math.sqrt(math.fsum(r * r for r in res) / k)
    return ExponentFit(slope, intercept, rms, res, k)
