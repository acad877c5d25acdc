"""Pure-NumPy kernels: mean-recursion paths and divergence loss terms.

Reference implementation of the hot loops; the compiled extension in
``_ckernels`` provides the same contracts.  Selected via ``_backend``.
"""

import numpy as np

from .errors import DomainError, TruncationError

name = "python"


def ingarch_paths(y, x, theta, q, p, lam_init, pin_first, want_grad, want_hess):
    """Evaluate the linear INGARCH-X mean recursion and its derivatives.

    Pre-sample counts and covariates are zero; pre-sample means equal
    ``lam_init``.  With ``pin_first`` the first mean is pinned to
    ``lam_init`` (a constant in theta, so its derivatives vanish);
    otherwise the recursion starts at t=1 and the derivatives are the
    exact ones of the recursion output.

    Returns (lam, grad, hess); grad has shape (n, d) and hess (n, d, d),
    or None when not requested.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n = y.shape[0]
    dx = x.shape[1]
    d = 1 + q + p + dx

    lam = np.empty(n)
    grad = np.zeros((n, d)) if (want_grad or want_hess) else None
    hess = np.zeros((n, d, d)) if want_hess else None

    start = 0
    if pin_first:
        lam[0] = lam_init
        start = 1

    for i in range(start, n):
        acc = theta[0]
        base = None
        if grad is not None:
            base = np.zeros(d)
            base[0] = 1.0
        for k in range(1, q + 1):
            yk = y[i - k] if i - k >= 0 else 0.0
            acc += theta[k] * yk
            if base is not None:
                base[k] = yk
        for j in range(1, p + 1):
            lj = lam[i - j] if i - j >= 0 else lam_init
            acc += theta[q + j] * lj
            if base is not None:
                base[q + j] = lj
        if dx and i >= 1:
            xv = x[i - 1]
            acc += float(theta[1 + q + p:] @ xv)
            if base is not None:
                base[1 + q + p:] = xv
        lam[i] = acc
        if grad is not None:
            g = base
            for j in range(1, p + 1):
                if i - j >= 0:
                    g = g + theta[q + j] * grad[i - j]
            grad[i] = g
        if hess is not None:
            h = hess[i]
            for j in range(1, p + 1):
                if i - j >= 0:
                    gl = grad[i - j]
                    h += theta[q + j] * hess[i - j]
                    h[q + j, :] += gl
                    h[:, q + j] += gl
    return lam, grad, hess


def _variance_terms(family, lam):
    """(variance, dvariance/variance^3) at mean lam, vectorized."""
    code = family.code
    if code == 0:
        v = lam
        brat = 1.0 / (lam * lam)
    elif code == 1:
        r = family.r
        v = lam * (1.0 + lam / r)
        brat = (1.0 + 2.0 * lam / r) / (v * v)
    else:
        v = lam * (1.0 - lam)
        brat = (1.0 - 2.0 * lam) / (v * v)
    return v, brat


def _check_domain(family, lam):
    lo, hi = family.mean_domain()
    if not np.all(np.isfinite(lam)) or np.any(lam <= lo) or np.any(lam >= hi):
        raise DomainError(f"mean path leaves the {family.name} domain")


def dpd_terms(family, y, lam, alpha):
    """Per-observation loss, score factor and its mean-derivative.

    For alpha > 0 the loss is sum_y g^(1+a) - (1+1/a) g(Y)^a over the
    truncated support; for alpha = 0 it is the negative log pmf.  The
    score factor h is d(loss)/d(mean) and m is dh/d(mean), both in
    closed form (term-by-term differentiation of the truncated sums).

    Returns (loss, h, m) as float arrays of length n.
    """
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float)
    _check_domain(family, lam)
    v, brat = _variance_terms(family, lam)

    if alpha == 0.0:
        loss = -family._log_pmf_unchecked(y, lam)
        h = (lam - y) / v
        m = brat * (y - lam) + 1.0 / v
        return loss, h, m

    onea = 1.0 + alpha
    if family.code == 2:
        g0 = 1.0 - lam
        g1 = lam
        gp0 = g0**onea
        gp1 = g1**onea
        S = gp0 + gp1
        W = -lam * gp0 + (1.0 - lam) * gp1
        Q = lam * lam * gp0 + (1.0 - lam) ** 2 * gp1
        gy = np.where(y == 1, g1, g0)
        gya = gy**alpha
    else:
        S, W, Q = _powered_sums(family, lam, alpha)
        gya = np.exp(alpha * family._log_pmf_unchecked(y, lam))

    dev = y - lam
    u = dev * gya
    loss = S - (1.0 + 1.0 / alpha) * gya
    h = onea * (W - u) / v
    m = onea * (
        -brat * (W - u)
        + (-S + onea * Q / v + gya - alpha * dev * dev * gya / v) / v
    )
    return loss, h, m


def _powered_sums(family, lam, alpha):
    """S, W, Q sums of g^(1+alpha) over each observation's truncated support."""
    cap = family.cap
    tail = family.tail_mass
    if np.any(lam > cap):
        raise TruncationError(f"mean path exceeds the truncation cap {cap}")
    onea = 1.0 + alpha
    max_lam = float(np.max(lam))
    max_var = float(np.max(family.var_at_mean(lam)))
    hi = int(min(cap, np.ceil(max_lam + 12.0 * np.sqrt(max_var) + 50.0)))
    while True:
        grid = np.arange(hi + 1, dtype=float)
        logg = family._log_pmf_unchecked(grid[None, :], lam[:, None])
        g = np.exp(logg)
        cdf = np.cumsum(g, axis=1)
        short = cdf[:, -1] <= 1.0 - tail
        if not np.any(short):
            break
        if hi >= cap:
            raise TruncationError(
                f"support cap {cap} reached before tail mass {tail}"
            )
        hi = min(cap, 2 * hi + 50)
    # smallest y with cdf > 1 - tail, per observation
    ymax = np.sum(cdf <= 1.0 - tail, axis=1)
    mask = grid[None, :] <= ymax[:, None]
    gp = np.where(mask, g**onea, 0.0)
    dev = grid[None, :] - lam[:, None]
    S = gp.sum(axis=1)
    W = (dev * gp).sum(axis=1)
    Q = (dev * dev * gp).sum(axis=1)
    return S, W, Q
