"""Adam and Adamax with bias correction, the two optimizers used for training."""

import numpy as np

from .errors import GradientDiverged


class _MomentOptimizer:
    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.m = None
        self.v = None
        self.step_count = 0

    def _ensure_state(self, n):
        if self.m is None:
            self.m = np.zeros(n)
            self.v = np.zeros(n)

    def _take(self, grad, n):
        grad = np.asarray(grad, dtype=float)
        if grad.shape != (n,):
            raise ValueError(f"gradient shape {grad.shape} != ({n},)")
        if not np.all(np.isfinite(grad)):
            raise GradientDiverged("non-finite gradient")
        self._ensure_state(n)
        self.step_count += 1
        return grad

    def reset(self):
        self.m = None
        self.v = None
        self.step_count = 0


class Adam(_MomentOptimizer):
    """theta <- theta - lr * mhat / (sqrt(vhat) + eps), both moments bias-corrected."""

    kind = "adam"

    def step(self, theta, grad):
        theta = np.asarray(theta, dtype=float)
        grad = self._take(grad, theta.size)
        t = self.step_count
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        mhat = self.m / (1.0 - self.beta1**t)
        vhat = self.v / (1.0 - self.beta2**t)
        return theta - self.learning_rate * mhat / (np.sqrt(vhat) + self.epsilon)


class Adamax(_MomentOptimizer):
    """Adam variant with an infinity-norm second moment u = max(b2*u, |g|)."""

    kind = "adamax"

    def step(self, theta, grad):
        theta = np.asarray(theta, dtype=float)
        grad = self._take(grad, theta.size)
        t = self.step_count
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = np.maximum(self.beta2 * self.v, np.abs(grad))
        mhat = self.m / (1.0 - self.beta1**t)
        return theta - self.learning_rate * mhat / (self.v + self.epsilon)


def make_optimizer(kind, learning_rate, **kwargs):
    kinds = {"adam": Adam, "adamax": Adamax}
    try:
        return kinds[kind.lower()](learning_rate, **kwargs)
    except KeyError:
        raise ValueError(f"unknown optimizer kind {kind!r}") from None
