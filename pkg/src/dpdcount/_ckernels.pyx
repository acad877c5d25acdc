# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: mean-recursion paths and divergence loss terms.

Same contracts as ``_pykernels``; see that module for the reference
semantics.  The powered-pmf sums track g and g^(1+alpha) by multiplicative
recurrences anchored at the distribution mode, with the y-dependent ratio
powers precomputed once per call, so the inner loop is a handful of
multiplications per support point.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, lgamma, log, pow, sqrt

from .errors import DomainError, TruncationError

cnp.import_array()

name = "cython"


def ingarch_paths(double[::1] y, double[:, ::1] x, double[::1] theta,
                  int q, int p, double lam_init, bint pin_first,
                  bint want_grad, bint want_hess):
    cdef Py_ssize_t n = y.shape[0]
    cdef int dx = <int>x.shape[1]
    cdef int d = 1 + q + p + dx
    cdef cnp.ndarray lam_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] lam = lam_arr
    cdef cnp.ndarray grad_arr = None
    cdef cnp.ndarray hess_arr = None
    cdef double[:, ::1] grad = None
    cdef double[:, :, ::1] hess = None
    cdef bint need_grad = want_grad or want_hess
    if need_grad:
        grad_arr = np.zeros((n, d), dtype=np.float64)
        grad = grad_arr
    if want_hess:
        hess_arr = np.zeros((n, d, d), dtype=np.float64)
        hess = hess_arr

    cdef Py_ssize_t i, start = 0
    cdef int k, j, m, a, b
    cdef double acc, val, bj, gl
    if pin_first:
        lam[0] = lam_init
        start = 1
    for i in range(start, n):
        acc = theta[0]
        if need_grad:
            grad[i, 0] = 1.0
        for k in range(1, q + 1):
            val = y[i - k] if i - k >= 0 else 0.0
            acc += theta[k] * val
            if need_grad:
                grad[i, k] = val
        for j in range(1, p + 1):
            val = lam[i - j] if i - j >= 0 else lam_init
            acc += theta[q + j] * val
            if need_grad:
                grad[i, q + j] = val
        if dx > 0 and i >= 1:
            for m in range(dx):
                val = x[i - 1, m]
                acc += theta[1 + q + p + m] * val
                if need_grad:
                    grad[i, 1 + q + p + m] = val
        lam[i] = acc
        if need_grad:
            for j in range(1, p + 1):
                if i - j >= 0:
                    bj = theta[q + j]
                    for a in range(d):
                        grad[i, a] += bj * grad[i - j, a]
        if want_hess:
            for j in range(1, p + 1):
                if i - j >= 0:
                    bj = theta[q + j]
                    for a in range(d):
                        gl = grad[i - j, a]
                        hess[i, q + j, a] += gl
                        hess[i, a, q + j] += gl
                        for b in range(d):
                            hess[i, a, b] += bj * hess[i - j, a, b]
    return lam_arr, grad_arr, hess_arr


cdef inline double c_lpmf(int fam, double r, double lgr, double lam, double yv):
    if fam == 0:
        return yv * log(lam) - lam - lgamma(yv + 1.0)
    elif fam == 1:
        return (lgamma(yv + r) - lgr - lgamma(yv + 1.0)
                + r * (log(r) - log(r + lam)) + yv * (log(lam) - log(r + lam)))
    else:
        return log(lam) if yv == 1.0 else log(1.0 - lam)


def dpd_terms(object family, double[::1] y, double[::1] lam, double alpha):
    """Per-observation loss, score factor and its mean-derivative."""
    cdef int fam = family.code
    cdef double r = family.r if fam == 1 else 0.0
    cdef double tail = family.tail_mass
    cdef long cap = family.cap
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t t

    cdef cnp.ndarray loss_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray h_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray m_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] loss = loss_arr
    cdef double[::1] hv = h_arr
    cdef double[::1] mv = m_arr

    cdef double lgr = lgamma(r) if fam == 1 else 0.0
    cdef double lo = 0.0
    cdef double hi_dom = 1.0 if fam == 2 else np.inf
    cdef double lt, yt, v, brat, dev, gya, u
    cdef double maxlam = 0.0

    for t in range(n):
        lt = lam[t]
        if not (lt > lo and lt < hi_dom):
            raise DomainError(
                f"mean path leaves the {family.name} domain at index {t}: {lt!r}"
            )
        if lt > maxlam:
            maxlam = lt

    cdef double onea = 1.0 + alpha
    cdef double g0, g1, gp0, gp1, S, W, Q
    cdef double lampow, c1, c1pow, gm, gpm, gcur, gpcur, cum, ratio
    cdef long m0, yy, ymax, tlen
    cdef double maxvar
    cdef double[::1] rat1
    cdef double[::1] ratp
    cdef cnp.ndarray rat1_arr, ratp_arr

    if alpha == 0.0:
        for t in range(n):
            lt = lam[t]
            yt = y[t]
            if fam == 0:
                v = lt
                brat = 1.0 / (lt * lt)
            elif fam == 1:
                v = lt * (1.0 + lt / r)
                brat = (1.0 + 2.0 * lt / r) / (v * v)
            else:
                if yt != 0.0 and yt != 1.0:
                    raise DomainError("Bernoulli counts must lie in {0, 1}")
                v = lt * (1.0 - lt)
                brat = (1.0 - 2.0 * lt) / (v * v)
            loss[t] = -c_lpmf(fam, r, lgr, lt, yt)
            hv[t] = (lt - yt) / v
            mv[t] = brat * (yt - lt) + 1.0 / v
        return loss_arr, h_arr, m_arr

    if fam == 2:
        for t in range(n):
            lt = lam[t]
            yt = y[t]
            if yt != 0.0 and yt != 1.0:
                raise DomainError("Bernoulli counts must lie in {0, 1}")
            v = lt * (1.0 - lt)
            brat = (1.0 - 2.0 * lt) / (v * v)
            g0 = 1.0 - lt
            g1 = lt
            gp0 = pow(g0, onea)
            gp1 = pow(g1, onea)
            S = gp0 + gp1
            W = -lt * gp0 + (1.0 - lt) * gp1
            Q = lt * lt * gp0 + (1.0 - lt) * (1.0 - lt) * gp1
            gya = pow(g1 if yt == 1.0 else g0, alpha)
            dev = yt - lt
            u = dev * gya
            loss[t] = S - (1.0 + 1.0 / alpha) * gya
            hv[t] = onea * (W - u) / v
            mv[t] = onea * (-brat * (W - u)
                            + (-S + onea * Q / v + gya - alpha * dev * dev * gya / v) / v)
        return loss_arr, h_arr, m_arr

    # Poisson / negative binomial: scan the truncated support per observation.
    if maxlam > cap:
        raise TruncationError(f"mean path exceeds the truncation cap {cap}")
    if fam == 0:
        maxvar = maxlam
    else:
        maxvar = maxlam * (1.0 + maxlam / r)
    tlen = <long>(maxlam + 16.0 * sqrt(maxvar + 1.0) + 200.0)
    if tlen > cap + 1:
        tlen = cap + 1
    # ratio tables: plain up-ratio component and its (1+alpha) power
    rat1_arr = np.empty(tlen, dtype=np.float64)
    ratp_arr = np.empty(tlen, dtype=np.float64)
    rat1 = rat1_arr
    ratp = ratp_arr
    for yy in range(tlen):
        if fam == 0:
            rat1[yy] = 1.0 / (yy + 1.0)
        else:
            rat1[yy] = (yy + r) / (yy + 1.0)
        ratp[yy] = pow(rat1[yy], onea)

    for t in range(n):
        lt = lam[t]
        yt = y[t]
        if fam == 0:
            v = lt
            brat = 1.0 / (lt * lt)
            c1 = lt            # per-step up-ratio scale: g(y+1) = g(y) * c1 * rat1[y]
        else:
            v = lt * (1.0 + lt / r)
            brat = (1.0 + 2.0 * lt / r) / (v * v)
            c1 = lt / (r + lt)
        c1pow = pow(c1, onea)
        m0 = <long>floor(lt)
        gm = exp(c_lpmf(fam, r, lgr, lt, <double>m0))
        gpm = pow(gm, onea)

        S = gpm
        dev = m0 - lt
        W = dev * gpm
        Q = dev * dev * gpm
        cum = gm

        # downward from the mode
        gcur = gm
        gpcur = gpm
        for yy in range(m0, 0, -1):
            gcur /= c1 * rat1[yy - 1]
            gpcur /= c1pow * ratp[yy - 1]
            if gcur == 0.0:
                break
            cum += gcur
            dev = (yy - 1) - lt
            S += gpcur
            W += dev * gpcur
            Q += dev * dev * gpcur

        # upward from the mode until the tail rule fires
        gcur = gm
        gpcur = gpm
        yy = m0
        while 1.0 - cum >= tail:
            if yy >= cap:
                raise TruncationError(
                    f"support cap {cap} reached before tail mass {tail} "
                    f"at mean {lt!r}"
                )
            if yy < tlen:
                gcur *= c1 * rat1[yy]
                gpcur *= c1pow * ratp[yy]
            else:
                ratio = c1 * (1.0 / (yy + 1.0) if fam == 0 else (yy + r) / (yy + 1.0))
                gcur *= ratio
                gpcur *= pow(ratio, onea)
            yy += 1
            cum += gcur
            dev = yy - lt
            S += gpcur
            W += dev * gpcur
            Q += dev * dev * gpcur

        gya = exp(alpha * c_lpmf(fam, r, lgr, lt, yt))
        dev = yt - lt
        u = dev * gya
        loss[t] = S - (1.0 + 1.0 / alpha) * gya
        hv[t] = onea * (W - u) / v
        mv[t] = onea * (-brat * (W - u)
                        + (-S + onea * Q / v + gya - alpha * dev * dev * gya / v) / v)
    return loss_arr, h_arr, m_arr
