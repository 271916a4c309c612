"""Score models: evaluation, exact derivatives, and the two training losses.

Two parametrizations of the score s: R^d -> R^d are supported.

* plain: a d -> d network.
* radial: a scalar network h(|v|) with s(v) = h(|v|) v, which enforces
  radial symmetry and noticeably smooths the score gradient.

Both expose exact Jacobians (forward mode) and exact parameter gradients of

    ism_loss     (1/N) sum_i |s(v_i)|^2 + 2 div s(v_i)
    fit_loss     sum_i |s(V_i) - g_i|^2 / sum_i |g_i|^2

where g are reference score values (the analytic initial score).
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateReference, ModelDiverged
from .nn import MLP

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpArchitecture:
    """Shape of the score network.

    input_dim is the ambient dimension d.  With radial=True the underlying
    network is scalar (1 -> 1) and the model output is h(|v|) v; otherwise
    the network maps d -> d.
    """

    input_dim: int
    hidden_layers: int = 3
    hidden_width: int = 32
    activation: str = "swish"
    residual: bool = False
    radial: bool = False

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_layers < 1 or self.hidden_width < 1:
            raise ValueError("architecture dimensions must be positive")
        if self.activation != "swish":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def net_input_dim(self):
        return 1 if self.radial else self.input_dim

    @property
    def net_output_dim(self):
        return 1 if self.radial else self.input_dim


class ScoreModel:
    """A trainable score function with exact derivatives."""

    def __init__(self, arch, rng=None, theta=None):
        self.arch = arch
        self.net = MLP(
            arch.net_input_dim,
            arch.net_output_dim,
            arch.hidden_width,
            arch.hidden_layers,
            residual=arch.residual,
            rng=rng,
            theta=theta,
        )

    @property
    def dim(self):
        return self.arch.input_dim

    @property
    def theta(self):
        return self.net.theta

    @theta.setter
    def theta(self, value):
        value = np.asarray(value, dtype=float).ravel()
        if value.size != self.net.n_params:
            raise ValueError("parameter count mismatch")
        self.net.theta = value.copy()

    @property
    def n_params(self):
        return self.net.n_params

    def _radii(self, v):
        return np.sqrt((v * v).sum(axis=1, keepdims=True))

    def scores(self, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        if self.arch.radial:
            h = self.net.forward(self._radii(v))
            return h * v
        return self.net.forward(v)

    def jacobians(self, v):
        """Exact grad s(v), shape (N, d, d); trace gives the divergence."""
        v = np.atleast_2d(np.asarray(v, dtype=float))
        if self.arch.radial:
            r = self._radii(v)
            h, hp, _ = self.net.forward_jac(r)
            jac = h[:, :, None] * np.eye(self.dim)
            with np.errstate(invalid="ignore", divide="ignore"):
                coef = np.where(r > 0.0, hp[:, :, 0] / np.where(r > 0, r, 1.0), 0.0)
            jac += coef[:, :, None] * (v[:, :, None] * v[:, None, :])
            return jac
        _, jac, _ = self.net.forward_jac(v)
        return jac

    def divergences(self, v):
        """div s(v) as the trace of the forward-mode Jacobian."""
        return np.trace(self.jacobians(v), axis1=1, axis2=2)

    # -- losses ---------------------------------------------------------

    def ism_loss(self, v):
        loss, _ = self._ism(v, want_grad=False)
        return loss

    def ism_loss_grad(self, v):
        return self._ism(v, want_grad=True)

    def _ism(self, v, want_grad):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        n, d = v.shape
        if n == 0:
            raise ValueError("empty velocity list")
        if self.arch.radial:
            r = self._radii(v)
            h, hp, cache = self.net.forward_jac(r)
            h = h[:, 0]
            hp = hp[:, 0, 0]
            rr = r[:, 0]
            # |s|^2 = h^2 r^2,  div s = d h + h' r
            loss = float(np.mean(h * h * rr * rr + 2.0 * (d * h + hp * rr)))
            if not want_grad:
                return loss, None
            ybar = ((2.0 * h * rr * rr + 2.0 * d) / n)[:, None]
            jbar = ((2.0 * rr) / n)[:, None, None]
            return loss, self.net.vjp(cache, ybar, jbar)
        s, jac, cache = self.net.forward_jac(v)
        div = np.trace(jac, axis1=1, axis2=2)
        loss = float(np.mean((s * s).sum(axis=1) + 2.0 * div))
        if not want_grad:
            return loss, None
        ybar = 2.0 * s / n
        jbar = np.broadcast_to((2.0 / n) * np.eye(d), (n, d, d))
        return loss, self.net.vjp(cache, ybar, jbar)

    def fit_loss(self, v, target_scores):
        loss, _ = self._fit(v, target_scores, want_grad=False)
        return loss

    def fit_loss_grad(self, v, target_scores):
        return self._fit(v, target_scores, want_grad=True)

    def _fit(self, v, target_scores, want_grad):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        g = np.atleast_2d(np.asarray(target_scores, dtype=float))
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite reference scores")
        denom = float((g * g).sum())
        if denom == 0.0:
            raise DegenerateReference("reference scores are identically zero")
        if self.arch.radial:
            r = self._radii(v)
            h, cache = self.net.forward_cached(r)
            s = h * v
            resid = s - g
            loss = float((resid * resid).sum() / denom)
            if not want_grad:
                return loss, None
            ybar = (2.0 / denom) * (resid * v).sum(axis=1, keepdims=True)
            return loss, self.net.vjp_value(cache, ybar)
        s, cache = self.net.forward_cached(v)
        resid = s - g
        loss = float((resid * resid).sum() / denom)
        if not want_grad:
            return loss, None
        return loss, self.net.vjp_value(cache, (2.0 / denom) * resid)

    # -- persistence ----------------------------------------------------

    def save(self, path):
        payload = {
            "format_version": CHECKPOINT_VERSION,
            "arch": asdict(self.arch),
            "n_params": self.n_params,
            "theta": self.theta.tolist(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        version = payload.get("format_version")
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version!r}")
        arch = MlpArchitecture(**payload["arch"])
        theta = np.asarray(payload["theta"], dtype=float)
        if theta.size != payload["n_params"]:
            raise ValueError(
                f"checkpoint holds {theta.size} parameters, "
                f"manifest says {payload['n_params']}"
            )
        model = cls(arch, theta=theta)
        if theta.size != model.n_params:
            raise ValueError(
                f"checkpoint has {theta.size} parameters but the architecture "
                f"needs {model.n_params}"
            )
        return model


def ism_loss(provider, velocities):
    """Implicit score-matching loss of any score provider on the particles."""
    v = np.atleast_2d(np.asarray(velocities, dtype=float))
    if v.shape[0] == 0:
        raise ValueError("empty velocity list")
    s = provider.scores(v)
    if not np.all(np.isfinite(s)):
        raise ModelDiverged("non-finite scores")
    div = provider.divergences(v)
    return float(np.mean((s * s).sum(axis=1) + 2.0 * div))


def initial_fit_loss(provider, velocities, analytic_score_at):
    """Relative squared error of a provider against reference score values."""
    v = np.atleast_2d(np.asarray(velocities, dtype=float))
    g = np.atleast_2d(analytic_score_at(v))
    denom = float((g * g).sum())
    if denom == 0.0:
        raise DegenerateReference("reference scores are identically zero")
    s = provider.scores(v)
    resid = s - g
    return float((resid * resid).sum() / denom)
