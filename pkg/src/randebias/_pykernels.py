"""Pure numpy kernels; same signatures and results as ``_ckernels``.

All direction inputs (``w``, rows of ``members``, ``g``) must already be
unit-normalized. ``lam`` is ``(repulsion, attraction, neutralization)``.
"""
import numpy as np

OK = 0
DIVERGED = 1


def objective_and_gradient(x, w, members, g, lam):
    l_r, l_a, l_n = lam
    r = np.sqrt(x @ x)
    if r == 0.0:
        raise ValueError("zero vector")
    xn = x / r
    f = 0.0
    grad = np.zeros_like(x)

    m = members.shape[0]
    if m and l_r != 0.0:
        c = members @ xn
        s = np.sign(c)
        f += l_r * np.abs(c).sum() / m
        grad += (l_r / (m * r)) * (s @ members - (s @ c) * xn)

    if l_a != 0.0:
        cw = xn @ w
        u = cw - 1.0
        f += l_a * abs(u) / 2.0
        grad += (l_a * np.sign(u) / (2.0 * r)) * (w - cw * xn)

    if l_n != 0.0:
        cg = xn @ g
        f += l_n * abs(cg)
        grad += (l_n * np.sign(cg) / r) * (g - cg * xn)

    return f, grad


def adam_minimize(w, members, g, lam, lr, beta1, beta2, eps, max_steps, tol):
    """Adam from ``x = w``; returns ``(best_x, f_initial, f_best, steps, status)``."""
    x = np.array(w, dtype=np.float64)
    m1 = np.zeros_like(x)
    m2 = np.zeros_like(x)
    f, grad = objective_and_gradient(x, w, members, g, lam)
    f0 = f_best = f_prev = f
    best = x.copy()
    steps = 0
    b1t = b2t = 1.0
    for t in range(1, max_steps + 1):
        b1t *= beta1
        b2t *= beta2
        m1 = beta1 * m1 + (1.0 - beta1) * grad
        m2 = beta2 * m2 + (1.0 - beta2) * grad * grad
        # a blown-up step is caught by the finiteness check below
        with np.errstate(invalid="ignore", over="ignore"):
            x = x - lr * (m1 / (1.0 - b1t)) / (np.sqrt(m2 / (1.0 - b2t)) + eps)
        steps = t
        if not np.all(np.isfinite(x)) or not np.any(x):
            return best, f0, f_best, steps, DIVERGED
        f, grad = objective_and_gradient(x, w, members, g, lam)
        if not np.isfinite(f):
            return best, f0, f_best, steps, DIVERGED
        if f < f_best:
            f_best = f
            best = x.copy()
        if abs(f_prev - f) < tol:
            break
        f_prev = f
    return best, f0, f_best, steps, OK
