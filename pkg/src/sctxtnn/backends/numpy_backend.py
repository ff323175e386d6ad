"""Vectorized numpy implementation of the training kernels.

Every function here has a numba twin in ``numba_backend`` with the same
signature and semantics; the active backend is chosen in the package
``backends`` init. Parameter vectors follow the canonical flat order
documented in ``networks``.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


def _sctxtnn_views(theta, c, r):
    m = 2 * c
    ctx_w = theta[0:m]
    ctx_b = theta[m:2 * m]
    inj = theta[2 * m:3 * m]
    W1 = theta[3 * m:3 * m + r * m].reshape(r, m)
    b1 = theta[3 * m + r * m:4 * m + r * m]
    w2 = theta[4 * m + r * m:5 * m + r * m]
    b2 = theta[5 * m + r * m]
    return ctx_w, ctx_b, inj, W1, b1, w2, b2


def sctxtnn_forward(theta, c, r, steepness, X):
    """Smooth-mode batch forward; returns (yhat, gates, pre, hidden)."""
    ctx_w, ctx_b, inj, W1, b1, w2, b2 = _sctxtnn_views(theta, c, r)
    xp = X[:, r]
    gates = _sigmoid(steepness * (xp[:, None] * ctx_w[None, :] + ctx_b[None, :]))
    pre = X[:, :r] @ W1 + b1[None, :] + gates * inj[None, :]
    hidden = np.maximum(pre, 0.0)
    yhat = hidden @ w2 + b2
    return yhat, gates, pre, hidden


def sctxtnn_grad(theta, c, r, steepness, X, y):
    """Gradient of batch MSE in canonical order; returns (grad, mse)."""
    ctx_w, ctx_b, inj, W1, b1, w2, b2 = _sctxtnn_views(theta, c, r)
    n = X.shape[0]
    xp = X[:, r]
    yhat, gates, pre, hidden = sctxtnn_forward(theta, c, r, steepness, X)
    resid = yhat - y
    mse = float(resid @ resid) / n

    d = (2.0 / n) * resid
    g_b2 = d.sum()
    g_w2 = hidden.T @ d
    dpre = (d[:, None] * w2[None, :]) * (pre > 0.0)
    g_W1 = X[:, :r].T @ dpre
    g_b1 = dpre.sum(axis=0)
    g_inj = (dpre * gates).sum(axis=0)
    dz = (dpre * inj[None, :]) * steepness * gates * (1.0 - gates)
    g_ctx_w = dz.T @ xp
    g_ctx_b = dz.sum(axis=0)

    grad = np.concatenate([g_ctx_w, g_ctx_b, g_inj, g_W1.ravel(), g_b1, g_w2, [g_b2]])
    return grad, mse


def _ff_unpack(theta, sizes):
    weights, biases, o = [], [], 0
    for l in range(len(sizes) - 1):
        m_in, m_out = int(sizes[l]), int(sizes[l + 1])
        weights.append(theta[o:o + m_in * m_out].reshape(m_in, m_out))
        o += m_in * m_out
        biases.append(theta[o:o + m_out])
        o += m_out
    return weights, biases


def ff_forward(theta, sizes, X):
    """Batch forward of the ReLU feed-forward net; returns yhat (n,)."""
    weights, biases = _ff_unpack(theta, sizes)
    a = X
    last = len(weights) - 1
    for l, (W, b) in enumerate(zip(weights, biases)):
        a = a @ W + b
        if l != last:
            a = np.maximum(a, 0.0)
    return a[:, 0]


def ff_grad(theta, sizes, X, y):
    weights, biases = _ff_unpack(theta, sizes)
    n = X.shape[0]
    acts = [X]
    pres = []
    a = X
    last = len(weights) - 1
    for l, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        pres.append(z)
        a = z if l == last else np.maximum(z, 0.0)
        acts.append(a)
    yhat = acts[-1][:, 0]
    resid = yhat - y
    mse = float(resid @ resid) / n

    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    delta = ((2.0 / n) * resid)[:, None]
    for l in range(last, -1, -1):
        grads_w[l] = acts[l].T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * (pres[l - 1] > 0.0)
    parts = []
    for gW, gb in zip(grads_w, grads_b):
        parts.append(gW.ravel())
        parts.append(gb)
    return np.concatenate(parts), mse


def _train_loop(theta, grad_fn, fwd_fn, Xtr, ytr, Xva, yva,
                epochs, lr, beta1, beta2, eps):
    dim = theta.shape[0]
    m = np.zeros(dim)
    v = np.zeros(dim)
    train_mse = np.zeros(epochs)
    val_mse = np.zeros(epochs)
    nva = yva.shape[0]
    # divergence shows up as overflow right before the non-finite check
    # aborts the run, so the warnings carry no information
    with np.errstate(over="ignore", invalid="ignore"):
        return _train_epochs(theta, grad_fn, fwd_fn, Xtr, ytr, Xva, yva,
                             epochs, lr, beta1, beta2, eps,
                             m, v, train_mse, val_mse, nva)


def _train_epochs(theta, grad_fn, fwd_fn, Xtr, ytr, Xva, yva,
                  epochs, lr, beta1, beta2, eps, m, v, train_mse, val_mse, nva):
    for epoch in range(epochs):
        g, loss = grad_fn(theta, Xtr, ytr)
        rv = fwd_fn(theta, Xva) - yva
        vloss = float(rv @ rv) / nva
        train_mse[epoch] = loss
        val_mse[epoch] = vloss
        if not (np.isfinite(loss) and np.isfinite(vloss)):
            return train_mse, val_mse, epoch
        t = epoch + 1
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return train_mse, val_mse, -1


def sctxtnn_train(theta, c, r, steepness, Xtr, ytr, Xva, yva,
                  epochs, lr, beta1, beta2, eps):
    """Full-batch Adam training loop; mutates theta in place.

    Records train and validation MSE at each epoch, both evaluated on the
    pre-update parameters. Returns (train_mse, val_mse, fail_epoch) where
    fail_epoch is -1 on success or the 0-based epoch whose loss went
    non-finite (the run stops there).
    """
    return _train_loop(
        theta,
        lambda th, X, y: sctxtnn_grad(th, c, r, steepness, X, y),
        lambda th, X: sctxtnn_forward(th, c, r, steepness, X)[0],
        Xtr, ytr, Xva, yva, epochs, lr, beta1, beta2, eps,
    )


def ff_train(theta, sizes, Xtr, ytr, Xva, yva, epochs, lr, beta1, beta2, eps):
    """Feed-forward twin of sctxtnn_train; same contract."""
    return _train_loop(
        theta,
        lambda th, X, y: ff_grad(th, sizes, X, y),
        lambda th, X: ff_forward(th, sizes, X),
        Xtr, ytr, Xva, yva, epochs, lr, beta1, beta2, eps,
    )
