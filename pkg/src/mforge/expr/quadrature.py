"""Adaptive Simpson quadrature, scalar and batched.

The batched form integrates many independent integrals at once: every round
refines all pending panels with a single vectorized integrand call.
"""
from __future__ import annotations

import numpy as np

MAX_DEPTH = 50


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = MAX_DEPTH) -> float:
    """Integrate a scalar function ``f`` over [a, b] to absolute tolerance ``tol``."""
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def adaptive_simpson_batch(f, a, b, tol: float = 1e-10, max_depth: int = MAX_DEPTH):
    """Integrate ``f(z, idx)`` over [a[i], b[i]] for every i.

    ``f`` receives quadrature nodes ``z`` and the owning integral index ``idx``
    (same shape) and returns integrand values.  Non-finite integrand values
    poison only the integral they belong to.  Returns ``(values, ok)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    total = np.zeros(n)
    ok = np.isfinite(a) & np.isfinite(b)
    idx = np.nonzero(ok)[0]
    lo, hi = a[idx], b[idx]
    mid = 0.5 * (lo + hi)
    vals = f(np.concatenate([lo, mid, hi]), np.concatenate([idx, idx, idx]))
    k = idx.size
    flo, fmid, fhi = vals[:k], vals[k:2 * k], vals[2 * k:]
    whole = (hi - lo) * (flo + 4.0 * fmid + fhi) / 6.0
    ptol = np.full(k, float(tol))
    depth = 0
    while idx.size:
        m = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + m), 0.5 * (m + hi)
        vals = f(np.concatenate([lm, rm]), np.concatenate([idx, idx]))
        k = idx.size
        flm, frm = vals[:k], vals[k:]
        left = (m - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - m) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - whole
        finite = np.isfinite(delta)
        bad = idx[~finite]
        ok[bad] = False
        done = finite & ((np.abs(delta) <= 15.0 * ptol) | (depth >= max_depth))
        np.add.at(total, idx[done], (left + right + delta / 15.0)[done])
        split = finite & ~done
        # children: left halves then right halves
        idx = np.concatenate([idx[split], idx[split]])
        lo, hi = np.concatenate([lo[split], m[split]]), np.concatenate([m[split], hi[split]])
        flo = np.concatenate([flo[split], fmid[split]])
        fhi = np.concatenate([fmid[split], fhi[split]])
        fmid = np.concatenate([flm[split], frm[split]])
        whole = np.concatenate([left[split], right[split]])
        ptol = np.concatenate([ptol[split], ptol[split]]) * 0.5
        depth += 1
    total[~ok] = np.nan
    return total, ok
