"""Exact density along particle trajectories via the log-determinant flow.

The log-determinant of the flow-map gradient obeys, along trajectory i,

    d/dt log|det grad T(V_i, t)| =
        -(1/N) sum_j [ A(v_i - v_j) : grad s(v_i)^T
                       - c_gamma (d-1) |v_i - v_j|^gamma
                         (v_i - v_j) . (s(v_i) - s(v_j)) ],

and the change-of-variable formula recovers the density:

    f_t(v_i(t)) = f_0(V_i) / exp(logdet_i(t)).

The tracker stores logdet and density redundantly, recomputing the density
from logdet each step so the two representations cannot drift apart.
"""

import numpy as np

from . import backend
from .errors import (
    DensityInvalid,
    DensityOverflow,
    InitialDensityUnavailable,
    ModelDiverged,
)

_EXP_LIMIT = 700.0


class DensityTracker:
    """Per-particle log|det grad T| (starting at 0) and density values."""

    def __init__(self, initial_density):
        if initial_density is None:
            raise InitialDensityUnavailable(
                "density tracking needs closed-form initial densities f_0(V_i)"
            )
        f0 = np.asarray(initial_density, dtype=float).ravel()
        if f0.size == 0 or not np.all(np.isfinite(f0)) or np.any(f0 <= 0.0):
            raise InitialDensityUnavailable(
                "initial densities must be finite and positive"
            )
        self.log_f0 = np.log(f0)
        self.logdet = np.zeros(f0.size)
        self.density = f0.copy()

    @property
    def n(self):
        return self.logdet.size

    def increments(self, ensemble, kernel, provider, scores=None, jacobians=None):
        """Current log-determinant rates l_i'(t); does not mutate state."""
        v = ensemble.velocities
        s = provider.scores(v) if scores is None else scores
        jac = provider.jacobians(v) if jacobians is None else jacobians
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(jac))):
            raise ModelDiverged("non-finite score data in log-det rates")
        return backend.logdet_rate_sum(v, s, jac, kernel)

    def advance(self, increments, dt):
        """logdet_i += dt l_i'; density_i = f_0(V_i) / exp(logdet_i)."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        increments = np.asarray(increments, dtype=float)
        if increments.shape != self.logdet.shape:
            raise ValueError("increment shape mismatch")
        self.logdet = self.logdet + dt * increments
        arg = self.log_f0 - self.logdet
        bad = np.abs(arg) > _EXP_LIMIT
        if bad.any():
            idx = int(np.argmax(np.abs(arg)))
            raise DensityOverflow(idx, arg[idx])
        self.density = np.exp(arg)
        return self

    def entropy(self):
        """(1/N) sum_i log density_i, the numerical entropy H."""
        if np.any(self.density <= 0.0) or not np.all(np.isfinite(self.density)):
            raise DensityInvalid("tracked densities must be positive and finite")
        return float(np.log(self.density).mean())
