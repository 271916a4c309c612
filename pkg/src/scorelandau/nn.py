"""Small fully-connected networks in plain numpy.

Provides exactly what the score models need and nothing more:

* forward evaluation, batched over inputs;
* exact input Jacobians by forward-mode propagation (one tangent per input
  coordinate, so the divergence comes out as a trace, not a finite
  difference);
* reverse-mode parameter gradients for losses of the form
  sum_n [ ybar_n . y_n + Jbar_n : J_n ], i.e. backpropagation through both
  the values and the forward-mode Jacobians.

Hidden layers use swish(x) = x * sigmoid(x); an optional identity skip wraps
every hidden layer whose input and output widths match.  Weights initialize
from a truncated normal (cut at two standard deviations, re-drawn) scaled so
the post-truncation variance is 1/fan_in; all biases start at zero.

Tangents are carried in a (batch, tangent, unit) layout so that every layer
contraction is a single matmul over a contiguous 2D view.
"""

import numpy as np
from scipy.special import expit, ndtr

from .errors import ModelDiverged

# variance of a standard normal truncated to [-2, 2]
_TRUNC_VAR = 1.0 - 4.0 * np.exp(-2.0) / np.sqrt(2.0 * np.pi) / (2.0 * ndtr(2.0) - 1.0)


def swish(x):
    return x * expit(x)


def swish_d1(x):
    s = expit(x)
    return s * (1.0 + x * (1.0 - s))


def swish_d2(x):
    s = expit(x)
    return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s))


def truncated_normal(rng, shape, variance):
    """Draws with the requested *actual* variance, truncated at +-2 sd."""
    out = rng.standard_normal(shape)
    bad = np.abs(out) > 2.0
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > 2.0
    return out * np.sqrt(variance / _TRUNC_VAR)


def _flat(a):
    # (n, t, i) -> (n*t, i) contiguous view
    return a.reshape(-1, a.shape[2])


class MLP:
    """Feedforward net: (affine -> swish) x n_hidden, then a final affine map.

    Parameters live in one flat float64 vector ``theta``; per-layer weight and
    bias views share its memory.  ``residual=True`` adds identity skips around
    hidden layers of matching width (so not around the first hidden layer,
    unless the input width already equals the hidden width).
    """

    def __init__(self, din, dout, width, n_hidden, residual=False, rng=None,
                 theta=None):
        if min(din, dout, width) < 1 or n_hidden < 1:
            raise ValueError("network dimensions must be positive")
        self.din = int(din)
        self.dout = int(dout)
        self.width = int(width)
        self.n_hidden = int(n_hidden)
        self.residual = bool(residual)
        dims = [self.din] + [self.width] * self.n_hidden + [self.dout]
        self.shapes = [(dims[k + 1], dims[k]) for k in range(len(dims) - 1)]
        self._offsets = []
        pos = 0
        for fan_out, fan_in in self.shapes:
            self._offsets.append((pos, pos + fan_out * fan_in))
            pos += fan_out * fan_in + fan_out
        self.n_params = pos
        if theta is not None:
            theta = np.asarray(theta, dtype=float).ravel()
            if theta.size != self.n_params:
                raise ValueError(
                    f"parameter vector has {theta.size} entries, "
                    f"expected {self.n_params}"
                )
            self.theta = theta.copy()
        else:
            self.theta = np.zeros(self.n_params)
            rng = np.random.default_rng() if rng is None else rng
            for k, (fan_out, fan_in) in enumerate(self.shapes):
                self.weights(k)[:] = truncated_normal(
                    rng, (fan_out, fan_in), 1.0 / fan_in
                )

    def weights(self, k):
        w0, w1 = self._offsets[k]
        return self.theta[w0:w1].reshape(self.shapes[k])

    def biases(self, k):
        w0, w1 = self._offsets[k]
        return self.theta[w1:w1 + self.shapes[k][0]]

    def _skip(self, k):
        return self.residual and self.shapes[k][0] == self.shapes[k][1]

    def _check_params(self):
        if not np.all(np.isfinite(self.theta)):
            raise ModelDiverged("non-finite network parameters")

    def _grad_views(self, grad, k):
        w0, w1 = self._offsets[k]
        fan_out = self.shapes[k][0]
        return grad[w0:w1].reshape(self.shapes[k]), grad[w1:w1 + fan_out]

    # -- value-only pass --------------------------------------------------

    def forward(self, x):
        y, _ = self.forward_cached(x)
        return y

    def forward_cached(self, x):
        """Returns (values, cache) for a later value-only vjp."""
        self._check_params()
        a = np.asarray(x, dtype=float)
        squeeze = a.ndim == 1
        if squeeze:
            a = a[None, :]
        cache = []
        for k in range(self.n_hidden):
            z = a @ self.weights(k).T + self.biases(k)
            s = expit(z)
            cache.append((z, s, a))
            h = z * s
            a = h + a if self._skip(k) else h
        k = self.n_hidden
        y = a @ self.weights(k).T + self.biases(k)
        cache.append((None, None, a))
        if not np.all(np.isfinite(y)):
            raise ModelDiverged("non-finite network output")
        return (y[0] if squeeze else y), cache

    def vjp_value(self, cache, ybar):
        """d(sum_n ybar_n . y_n)/dtheta for a forward_cached() pass."""
        grad = np.zeros(self.n_params)
        k = self.n_hidden
        _, _, a_prev = cache[k]
        gw, gb = self._grad_views(grad, k)
        gw += ybar.T @ a_prev
        gb += ybar.sum(0)
        abar = ybar @ self.weights(k)
        for k in range(self.n_hidden - 1, -1, -1):
            z, s, a_prev = cache[k]
            zbar = (s * (1.0 + z * (1.0 - s))) * abar
            gw, gb = self._grad_views(grad, k)
            gw += zbar.T @ a_prev
            gb += zbar.sum(0)
            new_abar = zbar @ self.weights(k)
            if self._skip(k):
                new_abar += abar
            abar = new_abar
        return grad

    # -- value + Jacobian pass --------------------------------------------

    def forward_jac(self, x):
        """Returns (values, jacobians, cache).

        jacobians[n, o, t] = d y_o / d x_t at sample n; internally tangents
        are propagated in a (n, t, unit) layout.
        """
        self._check_params()
        a = np.asarray(x, dtype=float)
        squeeze = a.ndim == 1
        if squeeze:
            a = a[None, :]
        n = a.shape[0]
        jac = np.broadcast_to(np.eye(self.din), (n, self.din, self.din)).copy()
        cache = []
        for k in range(self.n_hidden):
            w = self.weights(k)
            z = a @ w.T + self.biases(k)
            s = expit(z)
            s1 = s * (1.0 + z * (1.0 - s))
            p = (_flat(jac) @ w.T).reshape(n, self.din, -1)
            cache.append((z, s, s1, a, p, jac))
            h = z * s
            jh = s1[:, None, :] * p
            if self._skip(k):
                a = h + a
                jac = jh + jac
            else:
                a = h
                jac = jh
        k = self.n_hidden
        w = self.weights(k)
        y = a @ w.T + self.biases(k)
        jy = (_flat(jac) @ w.T).reshape(n, self.din, -1)
        cache.append((None, None, None, a, None, jac))
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(jy))):
            raise ModelDiverged("non-finite network output")
        jy = np.ascontiguousarray(jy.transpose(0, 2, 1))
        if squeeze:
            return y[0], jy[0], cache
        return y, jy, cache

    def vjp(self, cache, ybar, jbar):
        """d(sum_n [ybar_n . y_n + Jbar_n : Jy_n])/dtheta after forward_jac().

        ybar has shape (n, dout); jbar has shape (n, dout, din) matching the
        public Jacobian layout.
        """
        grad = np.zeros(self.n_params)
        jbar = np.ascontiguousarray(np.asarray(jbar).transpose(0, 2, 1))
        k = self.n_hidden
        _, _, _, a_prev, _, j_prev = cache[k]
        w = self.weights(k)
        gw, gb = self._grad_views(grad, k)
        gw += ybar.T @ a_prev
        gw += _flat(jbar).T @ _flat(j_prev)
        gb += ybar.sum(0)
        abar = ybar @ w
        jbar = (_flat(jbar) @ w).reshape(jbar.shape[0], jbar.shape[1], -1)
        for k in range(self.n_hidden - 1, -1, -1):
            z, s, s1, a_prev, p, j_prev = cache[k]
            w = self.weights(k)
            pbar = s1[:, None, :] * jbar
            s2 = s * (1.0 - s) * (2.0 + z * (1.0 - 2.0 * s))
            zbar = s1 * abar + s2 * np.einsum("nto,nto->no", jbar, p)
            gw, gb = self._grad_views(grad, k)
            gw += zbar.T @ a_prev
            gw += _flat(pbar).T @ _flat(j_prev)
            gb += zbar.sum(0)
            new_abar = zbar @ w
            new_jbar = (_flat(pbar) @ w).reshape(pbar.shape[0], pbar.shape[1], -1)
            if self._skip(k):
                new_abar += abar
                new_jbar += jbar
            abar = new_abar
            jbar = new_jbar
        return grad
