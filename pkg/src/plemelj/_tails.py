"""Convergence test for sums of dyadic increments (Dini tails, L1 tails)."""
from __future__ import annotations

import numpy as np

GEOMETRIC_RATIO = 1.5
CONVERGENT_EXPONENT = 1.5
DIVERGENT_EXPONENT = 1.1
FIT_WINDOW = 12


def tail_verdict(increments, levels=None) -> tuple[str, float]:
    """Classify the series ``sum_k increments[k]`` from its last terms.

    ``increments[k]`` is the contribution of the dyadic shell at level
    ``levels[k]`` (shell ``[2^-k, 2^-(k-1)]``). Returns ``("converges", p)``,
    ``("diverges", p)`` or ``("inconclusive", p)`` where ``p`` is the fitted
    decay exponent in ``increment ~ k^-p`` (``inf`` for geometric decay).

    Geometric decay (each of the last three terms smaller by 1.5x) converges.
    Otherwise the exponent decides: ``p >= 1.5`` converges, ``p <= 1.1``
    diverges. The polynomial branch is needed because a log-type modulus
    such as ``1/log(t)^2`` gives shell contributions ``~ k^-2``, which sum
    but never shrink geometrically.
    """
    inc = np.abs(np.asarray(increments, dtype=float))
    k = np.arange(1, inc.size + 1, dtype=float) if levels is None else np.asarray(levels, dtype=float)
    scale = max(1.0, float(np.sum(inc)))
    if inc.size == 0 or np.all(inc[-FIT_WINDOW:] <= 1e-15 * scale):
        return "converges", float("inf")
    last = inc[-4:]
    if last.size == 4 and np.all(last[1:] > 0) and np.all(last[:-1] >= GEOMETRIC_RATIO * last[1:]):
        return "converges", float("inf")
    if np.all(last == 0):
        return "converges", float("inf")
    window = slice(-min(FIT_WINDOW, inc.size), None)
    kk, vv = k[window], inc[window]
    pos = vv > 0
    if pos.sum() < 4:
        return "inconclusive", float("nan")
    slope = np.polyfit(np.log(kk[pos]), np.log(vv[pos]), 1)[0]
    p = float(-slope)
    if p >= CONVERGENT_EXPONENT:
        return "converges", p
    if p <= DIVERGENT_EXPONENT:
        return "diverges", p
    return "inconclusive", p
