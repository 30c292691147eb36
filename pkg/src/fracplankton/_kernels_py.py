"""Pure-Python/NumPy implementations of the O(N^2) solver kernels.

Same signatures and results as the compiled ``_kernels`` extension; used when
the extension is unavailable or ``FRACPLANKTON_PURE_PYTHON`` is set.
"""

import math

import numpy as np


def abm_weights(alpha, n_steps):
    """Predictor weights b_k, corrector weights c_k and first corrector weights a0_n."""
    k = np.arange(n_steps, dtype=float)
    with np.errstate(divide="ignore"):
        # (k+1)^a - k^a without cancellation
        b = np.where(k > 0, k ** alpha * np.expm1(alpha * np.log1p(1.0 / np.maximum(k, 1.0))), 1.0)
    a1 = alpha + 1.0
    c = (k + 2.0) ** a1 + k ** a1 - 2.0 * (k + 1.0) ** a1
    a0 = k ** a1 - (k - alpha) * (k + 1.0) ** alpha
    return b, c, a0


def rhs(p, y1, y2, y3):
    """A x + f(x) for parameters packed in PARAM_NAMES order."""
    c0, c1, c2, c3, c4, h, H, delta, v, B, bp, xi, m, sigma, mu, gam = p
    pred = bp * y2 * y3 / (y2 + h)
    sq = y1 * y1
    f1 = H * c0 * y2 / (y1 + c0) - delta * y1 * y2 / (y1 + c2) - v * y1 * y3 / (y1 + c3) - m * y1
    f2 = (B * y1 / (y1 + c1) - gam * y2) * y2 - pred - sigma * y2
    f3 = xi * sq / (sq + c4 * c4) * pred - mu * y3
    return f1, f2, f3


def abm_solve(alpha, step, n_steps, y0, params):
    """Fractional Adams-Bashforth-Moulton predictor-corrector with full memory.

    Returns ``(Y, fail)`` where ``Y`` has shape ``(n_steps + 1, 3)`` and
    ``fail`` is -1 on success or the index of the last finite step.
    """
    # overflow is detected and reported through ``fail``
    with np.errstate(over="ignore", invalid="ignore"):
        return _abm_solve(alpha, step, n_steps, y0, params)


def _abm_solve(alpha, step, n_steps, y0, params):
    n_steps = int(n_steps)
    p = tuple(float(v) for v in params)
    b, c, a0 = abm_weights(alpha, n_steps)
    hp = step ** alpha / math.gamma(alpha + 1.0)
    hc = step ** alpha / math.gamma(alpha + 2.0)
    Y = np.zeros((n_steps + 1, 3))
    F = np.zeros((n_steps + 1, 3))
    y0 = np.asarray(y0, dtype=float)
    Y[0] = y0
    try:
        F[0] = rhs(p, *y0)
    except ZeroDivisionError:
        return Y, 0
    for n in range(n_steps):
        pred = y0 + hp * (b[n::-1] @ F[: n + 1])
        try:
            fp = rhs(p, pred[0], pred[1], pred[2])
        except ZeroDivisionError:
            return Y, n
        hist = a0[n] * F[0]
        if n:
            hist = hist + c[n - 1::-1] @ F[1 : n + 1]
        y = y0 + hc * (np.asarray(fp) + hist)
        if not np.all(np.isfinite(y)):
            return Y, n
        Y[n + 1] = y
        try:
            F[n + 1] = rhs(p, y[0], y[1], y[2])
        except ZeroDivisionError:
            return Y, n + 1
        if not np.all(np.isfinite(F[n + 1])):
            return Y, n + 1
    return Y, -1


def history_convolve(weights, endpoint, g):
    """c[0] = 0, c[n] = sum_{i=1}^{n} weights[n-i] g[i] + endpoint[n-1] g[0]."""
    g = np.asarray(g, dtype=float)
    n = g.size - 1
    out = np.zeros(n + 1)
    out[1:] = np.convolve(weights[:n], g[1:])[:n] + endpoint[:n] * g[0]
    return out
