"""Numba-compiled twins of the numpy training kernels.

Same signatures and semantics as ``numpy_backend``; the inner loops are
written sample-major so numba compiles them to tight machine code. Floating
point accumulation order differs from the vectorized numpy versions, so the
two backends agree to rounding, not bit-for-bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _sctxtnn_pass(theta, c, r, steepness, X, y, grad, with_grad,
                  gates, pre, hid, resid):
    """One full-batch pass; fills grad (if with_grad) and returns the MSE.

    Workspaces gates/pre/hid are (2c, n) and resid is (n,), sample axis
    innermost so the hot loops vectorize.
    """
    m = 2 * c
    n = X.shape[0]
    o_cw = 0
    o_cb = m
    o_inj = 2 * m
    o_w1 = 3 * m
    o_b1 = 3 * m + r * m
    o_w2 = o_b1 + m
    o_b2 = o_w2 + m

    for j in range(m):
        wj = theta[o_cw + j]
        bj = theta[o_cb + j]
        injj = theta[o_inj + j]
        b1j = theta[o_b1 + j]
        for i in range(n):
            t = steepness * (wj * X[i, r] + bj)
            if t >= 0.0:
                gj = 1.0 / (1.0 + np.exp(-t))
            else:
                et = np.exp(t)
                gj = et / (1.0 + et)
            gates[j, i] = gj
            pre[j, i] = b1j + injj * gj
        for k in range(r):
            w1 = theta[o_w1 + k * m + j]
            for i in range(n):
                pre[j, i] += X[i, k] * w1
        for i in range(n):
            s = pre[j, i]
            hid[j, i] = s if s > 0.0 else 0.0
    for i in range(n):
        resid[i] = theta[o_b2] - y[i]
    for j in range(m):
        w2j = theta[o_w2 + j]
        for i in range(n):
            resid[i] += w2j * hid[j, i]
    sse = 0.0
    for i in range(n):
        sse += resid[i] * resid[i]
    if with_grad:
        inv = 2.0 / n
        g_b2 = 0.0
        for i in range(n):
            g_b2 += resid[i]
        grad[o_b2] = inv * g_b2
        for j in range(m):
            w2j = theta[o_w2 + j]
            injj = theta[o_inj + j]
            gw2 = 0.0
            gb1 = 0.0
            ginj = 0.0
            gcw = 0.0
            gcb = 0.0
            for i in range(n):
                gw2 += resid[i] * hid[j, i]
                mask = 1.0 if pre[j, i] > 0.0 else 0.0
                dpre = resid[i] * w2j * mask
                gb1 += dpre
                gj = gates[j, i]
                ginj += dpre * gj
                dz = dpre * injj * steepness * gj * (1.0 - gj)
                gcw += dz * X[i, r]
                gcb += dz
            grad[o_w2 + j] = inv * gw2
            grad[o_b1 + j] = inv * gb1
            grad[o_inj + j] = inv * ginj
            grad[o_cw + j] = inv * gcw
            grad[o_cb + j] = inv * gcb
            for k in range(r):
                gw1 = 0.0
                for i in range(n):
                    mask = 1.0 if pre[j, i] > 0.0 else 0.0
                    gw1 += resid[i] * w2j * mask * X[i, k]
                grad[o_w1 + k * m + j] = inv * gw1
    return sse / n


@njit(cache=True)
def sctxtnn_forward_full(theta, c, r, steepness, X):
    m = 2 * c
    n = X.shape[0]
    o_cw = 0
    o_cb = m
    o_inj = 2 * m
    o_w1 = 3 * m
    o_b1 = 3 * m + r * m
    o_w2 = o_b1 + m
    o_b2 = o_w2 + m
    yhat = np.empty(n)
    gates = np.empty((n, m))
    pre = np.empty((n, m))
    hid = np.empty((n, m))
    for i in range(n):
        xp = X[i, r]
        s_out = theta[o_b2]
        for j in range(m):
            t = steepness * (theta[o_cw + j] * xp + theta[o_cb + j])
            if t >= 0.0:
                gj = 1.0 / (1.0 + np.exp(-t))
            else:
                et = np.exp(t)
                gj = et / (1.0 + et)
            gates[i, j] = gj
            s = theta[o_b1 + j] + theta[o_inj + j] * gj
            for k in range(r):
                s += X[i, k] * theta[o_w1 + k * m + j]
            pre[i, j] = s
            h = s if s > 0.0 else 0.0
            hid[i, j] = h
            s_out += theta[o_w2 + j] * h
        yhat[i] = s_out
    return yhat, gates, pre, hid


def sctxtnn_forward(theta, c, r, steepness, X):
    """Smooth-mode batch forward; returns (yhat, gates, pre, hidden)."""
    return sctxtnn_forward_full(theta, c, r, steepness, X)


def _sctxtnn_workspaces(c, n):
    m = 2 * c
    return np.zeros((m, n)), np.zeros((m, n)), np.zeros((m, n)), np.zeros(n)


def sctxtnn_grad(theta, c, r, steepness, X, y):
    """Gradient of batch MSE in canonical order; returns (grad, mse)."""
    grad = np.empty(theta.size)
    gates, pre, hid, resid = _sctxtnn_workspaces(c, X.shape[0])
    mse = _sctxtnn_pass(theta, c, r, steepness, X, y, grad, True,
                        gates, pre, hid, resid)
    return grad, float(mse)


@njit(cache=True)
def _ff_offsets(sizes):
    L = sizes.size - 1
    offs = np.empty(L, dtype=np.int64)
    o = 0
    for l in range(L):
        offs[l] = o
        o += (sizes[l] + 1) * sizes[l + 1]
    return offs


@njit(cache=True)
def _ff_forward_ws(theta, sizes, X, acts, pres):
    """Fill batch workspaces, laid out (layer, unit, sample) so the inner
    loops run contiguously over the sample axis; output layer is linear."""
    n = X.shape[0]
    L = sizes.size - 1
    offs = _ff_offsets(sizes)
    for k in range(sizes[0]):
        for i in range(n):
            acts[0, k, i] = X[i, k]
    for l in range(1, L + 1):
        m_in = sizes[l - 1]
        m_out = sizes[l]
        ow = offs[l - 1]
        ob = ow + m_in * m_out
        linear = l == L
        for j in range(m_out):
            bj = theta[ob + j]
            for i in range(n):
                pres[l - 1, j, i] = bj
            for k in range(m_in):
                w = theta[ow + k * m_out + j]
                for i in range(n):
                    pres[l - 1, j, i] += acts[l - 1, k, i] * w
            if linear:
                for i in range(n):
                    acts[l, j, i] = pres[l - 1, j, i]
            else:
                for i in range(n):
                    s = pres[l - 1, j, i]
                    acts[l, j, i] = s if s > 0.0 else 0.0


@njit(cache=True)
def _ff_val(theta, sizes, X, y, acts, pres):
    n = X.shape[0]
    L = sizes.size - 1
    _ff_forward_ws(theta, sizes, X, acts, pres)
    sse = 0.0
    for i in range(n):
        resid = acts[L, 0, i] - y[i]
        sse += resid * resid
    return sse / n


@njit(cache=True)
def _ff_epoch(theta, sizes, X, y, grad, acts, pres, delta, delta_prev):
    n = X.shape[0]
    L = sizes.size - 1
    offs = _ff_offsets(sizes)
    _ff_forward_ws(theta, sizes, X, acts, pres)
    sse = 0.0
    inv = 2.0 / n
    for i in range(n):
        resid = acts[L, 0, i] - y[i]
        sse += resid * resid
        delta[0, i] = inv * resid
    for l in range(L, 0, -1):
        m_in = sizes[l - 1]
        m_out = sizes[l]
        ow = offs[l - 1]
        ob = ow + m_in * m_out
        for j in range(m_out):
            gb = 0.0
            for i in range(n):
                gb += delta[j, i]
            grad[ob + j] = gb
            for k in range(m_in):
                gw = 0.0
                for i in range(n):
                    gw += acts[l - 1, k, i] * delta[j, i]
                grad[ow + k * m_out + j] = gw
        if l > 1:
            for k in range(m_in):
                for i in range(n):
                    delta_prev[k, i] = 0.0
                for j in range(m_out):
                    w = theta[ow + k * m_out + j]
                    for i in range(n):
                        delta_prev[k, i] += w * delta[j, i]
                for i in range(n):
                    if pres[l - 2, k, i] <= 0.0:
                        delta_prev[k, i] = 0.0
            tmp = delta
            delta = delta_prev
            delta_prev = tmp
    return sse / n


def _ff_workspaces(sizes, n):
    L = sizes.size - 1
    maxw = int(np.max(sizes))
    acts = np.zeros((L + 1, maxw, n))
    pres = np.zeros((L, maxw, n))
    delta = np.zeros((maxw, n))
    delta_prev = np.zeros((maxw, n))
    return acts, pres, delta, delta_prev


def ff_forward(theta, sizes, X):
    """Batch forward of the ReLU feed-forward net; returns yhat (n,)."""
    acts, pres, _, _ = _ff_workspaces(sizes, X.shape[0])
    _ff_forward_ws(theta, sizes, X, acts, pres)
    return acts[sizes.size - 1, 0, :].copy()


def ff_grad(theta, sizes, X, y):
    grad = np.empty(theta.size)
    acts, pres, delta, delta_prev = _ff_workspaces(sizes, X.shape[0])
    mse = _ff_epoch(theta, sizes, X, y, grad, acts, pres, delta, delta_prev)
    return grad, float(mse)


@njit(cache=True)
def _sctxtnn_train_jit(theta, c, r, steepness, Xtr, ytr, Xva, yva,
                       epochs, lr, beta1, beta2, eps,
                       gates, pre, hid, resid, gates_va, pre_va, hid_va, resid_va):
    dim = theta.size
    mvec = np.zeros(dim)
    vvec = np.zeros(dim)
    grad = np.empty(dim)
    train_mse = np.zeros(epochs)
    val_mse = np.zeros(epochs)
    fail = -1
    for epoch in range(epochs):
        loss = _sctxtnn_pass(theta, c, r, steepness, Xtr, ytr, grad, True,
                             gates, pre, hid, resid)
        vloss = _sctxtnn_pass(theta, c, r, steepness, Xva, yva, grad, False,
                              gates_va, pre_va, hid_va, resid_va)
        train_mse[epoch] = loss
        val_mse[epoch] = vloss
        if not (np.isfinite(loss) and np.isfinite(vloss)):
            fail = epoch
            break
        t = epoch + 1
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for i in range(dim):
            mvec[i] = beta1 * mvec[i] + (1.0 - beta1) * grad[i]
            vvec[i] = beta2 * vvec[i] + (1.0 - beta2) * grad[i] * grad[i]
            theta[i] -= lr * (mvec[i] / c1) / (np.sqrt(vvec[i] / c2) + eps)
    return train_mse, val_mse, fail


def sctxtnn_train(theta, c, r, steepness, Xtr, ytr, Xva, yva,
                  epochs, lr, beta1, beta2, eps):
    """Full-batch Adam training loop; mutates theta in place.

    Same contract as the numpy backend: losses recorded pre-update each
    epoch, fail_epoch -1 on success or the epoch that went non-finite.
    """
    gates, pre, hid, resid = _sctxtnn_workspaces(c, Xtr.shape[0])
    gates_va, pre_va, hid_va, resid_va = _sctxtnn_workspaces(c, Xva.shape[0])
    tr, va, fail = _sctxtnn_train_jit(theta, c, r, steepness, Xtr, ytr, Xva, yva,
                                      epochs, lr, beta1, beta2, eps,
                                      gates, pre, hid, resid,
                                      gates_va, pre_va, hid_va, resid_va)
    return tr, va, int(fail)


@njit(cache=True)
def _ff_train_jit(theta, sizes, Xtr, ytr, Xva, yva, epochs, lr, beta1, beta2, eps,
                  acts, pres, delta, delta_prev, acts_va, pres_va):
    dim = theta.size
    mvec = np.zeros(dim)
    vvec = np.zeros(dim)
    grad = np.empty(dim)
    train_mse = np.zeros(epochs)
    val_mse = np.zeros(epochs)
    fail = -1
    for epoch in range(epochs):
        loss = _ff_epoch(theta, sizes, Xtr, ytr, grad, acts, pres, delta, delta_prev)
        vloss = _ff_val(theta, sizes, Xva, yva, acts_va, pres_va)
        train_mse[epoch] = loss
        val_mse[epoch] = vloss
        if not (np.isfinite(loss) and np.isfinite(vloss)):
            fail = epoch
            break
        t = epoch + 1
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for i in range(dim):
            mvec[i] = beta1 * mvec[i] + (1.0 - beta1) * grad[i]
            vvec[i] = beta2 * vvec[i] + (1.0 - beta2) * grad[i] * grad[i]
            theta[i] -= lr * (mvec[i] / c1) / (np.sqrt(vvec[i] / c2) + eps)
    return train_mse, val_mse, fail


def ff_train(theta, sizes, Xtr, ytr, Xva, yva, epochs, lr, beta1, beta2, eps):
    """Feed-forward twin of sctxtnn_train; same contract."""
    acts, pres, delta, delta_prev = _ff_workspaces(sizes, Xtr.shape[0])
    acts_va, pres_va, _, _ = _ff_workspaces(sizes, Xva.shape[0])
    tr, va, fail = _ff_train_jit(theta, sizes, Xtr, ytr, Xva, yva,
                                 epochs, lr, beta1, beta2, eps,
                                 acts, pres, delta, delta_prev, acts_va, pres_va)
    return tr, va, int(fail)
