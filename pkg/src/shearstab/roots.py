"""Complex root finding and argument-principle counting."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class MullerResult:
    root: complex
    value: complex
    converged: bool
    iterations: int
    trace: list = field(default_factory=list)
    reason: str = ""


def muller(
    f: Callable[[complex], complex],
    x0: complex,
    x1: complex | None = None,
    x2: complex | None = None,
    ftol: float = 1e-11,
    xtol: float = 1e-14,
    max_iter: int = 50,
    inside: Callable[[complex], bool] | None = None,
) -> MullerResult:
    """Muller's method on a complex-analytic ``f``.

    ``inside`` restricts the iterates; leaving the region stops the search
    with ``converged=False`` so callers can read absence as a result.
    """
    if x1 is None:
        d = 1e-3 * max(abs(x0), 1e-3)
        x1, x2 = x0 + d, x0 + 1j * d
    elif x2 is None:
        x2 = 0.5 * (x0 + x1) + 0.5j * abs(x1 - x0)
    xs = [complex(x0), complex(x1), complex(x2)]
    fs = [f(x) for x in xs]
    trace = list(zip(xs, fs))
    best = min(range(3), key=lambda i: abs(fs[i]))
    if abs(fs[best]) < ftol:
        return MullerResult(xs[best], fs[best], True, 0, trace)
    for it in range(1, max_iter + 1):
        (a0, a1, a2), (f0, f1, f2) = xs, fs
        h1, h2 = a1 - a0, a2 - a1
        if h1 == 0 or h2 == 0 or h1 + h2 == 0:
            return MullerResult(a2, f2, False, it, trace, "collapsed stencil")
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = np.sqrt(b * b - 4 * a * f2 + 0j)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        step = -2 * f2 / den if den != 0 else 1e-3 * (1 + abs(a2))
        x3 = a2 + step
        if inside is not None and not inside(x3):
            return MullerResult(x3, f2, False, it, trace, "left search region")
        f3 = f(x3)
        trace.append((x3, f3))
        xs, fs = [a1, a2, x3], [f1, f2, f3]
        if abs(f3) < ftol or abs(step) < xtol * max(1.0, abs(x3)):
            return MullerResult(x3, f3, abs(f3) < ftol or abs(step) < xtol * max(1.0, abs(x3)), it, trace)
    return MullerResult(xs[-1], fs[-1], False, max_iter, trace, "max iterations")


def winding_number(values: np.ndarray) -> int:
    """Net number of turns of a closed sampled curve of nonzero complex values."""
    v = np.asarray(values, dtype=complex)
    v = np.append(v, v[0])
    dphi = np.angle(v[1:] / v[:-1])
    return int(np.rint(dphi.sum() / (2 * np.pi)))


def rectangle_contour(lower_left: complex, upper_right: complex, n: int = 400) -> np.ndarray:
    """``n`` points counter-clockwise around an axis-aligned rectangle."""
    x0, y0 = lower_left.real, lower_left.imag
    x1, y1 = upper_right.real, upper_right.imag
    per = 2 * ((x1 - x0) + (y1 - y0))
    s = np.linspace(0.0, per, n, endpoint=False)
    pts = np.empty(n, dtype=complex)
    w, h = x1 - x0, y1 - y0
    for k, t in enumerate(s):
        if t < w:
            pts[k] = complex(x0 + t, y0)
        elif t < w + h:
            pts[k] = complex(x1, y0 + t - w)
        elif t < 2 * w + h:
            pts[k] = complex(x1 - (t - w - h), y1)
        else:
            pts[k] = complex(x0, y1 - (t - 2 * w - h))
    return pts


def count_zeros(f: Callable[[np.ndarray], np.ndarray], lower_left: complex, upper_right: complex, n: int = 400) -> int:
    """Argument-principle zero count of an analytic ``f`` inside a rectangle."""
    return winding_number(f(rectangle_contour(lower_left, upper_right, n)))
