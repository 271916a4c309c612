"""Score providers: a common face over learned, analytic, and blob scores.

The particle system only needs s(v) and grad s(v); it should not care where
they come from.  Three sources are supported:

* LearnedScore - a trainable ScoreModel;
* AnalyticScore - the closed-form score of a solution family at a settable
  time (the exact-score pipeline);
* BlobScore - the regularized-entropy score of the earlier deterministic
  particle method, a mesh-quadrature double sum over a kernel density
  estimate.  Kept as a small-N oracle and for the efficiency comparison.
"""

import numpy as np

from .diagnostics import MeshSpec, kde_on_mesh, KdeConfig
from .errors import ModelDiverged


class ScoreProvider:
    """Maps d-vectors to d-vectors and exposes exact Jacobians."""

    def scores(self, v):
        raise NotImplementedError

    def jacobians(self, v):
        raise NotImplementedError

    def divergences(self, v):
        return np.trace(self.jacobians(v), axis1=1, axis2=2)


class LearnedScore(ScoreProvider):
    def __init__(self, model):
        self.model = model

    def scores(self, v):
        return self.model.scores(v)

    def jacobians(self, v):
        return self.model.jacobians(v)

    def divergences(self, v):
        return self.model.divergences(v)


class AnalyticScore(ScoreProvider):
    """Closed-form score of a time-evolving solution; set .time as the run advances."""

    def __init__(self, solution, time=None):
        self.solution = solution
        self.time = solution.t0 if time is None else float(time)

    def scores(self, v):
        return self.solution.score(self.time, v)

    def jacobians(self, v):
        return self.solution.score_jacobian(self.time, v)


class LinearScore(ScoreProvider):
    """s(v) = M v + b; mostly a test double with a trivial Jacobian."""

    def __init__(self, matrix, offset=None):
        self.matrix = np.asarray(matrix, dtype=float)
        self.offset = (
            np.zeros(self.matrix.shape[0]) if offset is None
            else np.asarray(offset, dtype=float)
        )

    def scores(self, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        return v @ self.matrix.T + self.offset

    def jacobians(self, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        return np.broadcast_to(
            self.matrix, (v.shape[0],) + self.matrix.shape
        ).copy()


class BlobScore(ScoreProvider):
    """Mesh-quadrature score of the mollified-entropy particle method.

    With mesh nodes y_l (cell volume h^d), particle velocities v_k, and the
    Gaussian mollifier psi_eps:

        s(x) = sum_l h^d grad psi_eps(x - y_l) log( (1/N) sum_k psi_eps(y_l - v_k) )

    fit() recomputes the log-KDE weights from the current particle set; the
    cost per evaluation point is O(n_cells), and refreshing the weights is
    O(N n_cells).
    """

    def __init__(self, bandwidth, mesh: MeshSpec, velocities=None):
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        self.bandwidth = float(bandwidth)
        self.mesh = mesh
        self._nodes = mesh.centers()
        self._logw = None
        if velocities is not None:
            self.fit(velocities)

    def fit(self, velocities):
        kde = kde_on_mesh(velocities, self.mesh, KdeConfig(self.bandwidth))
        self._logw = self.mesh.cell_volume * np.log(np.maximum(kde, 1e-300))
        return self

    def _require_fit(self):
        if self._logw is None:
            raise ModelDiverged("blob score used before fit()")

    def scores(self, x, block=131_072):
        self._require_fit()
        x = np.atleast_2d(np.asarray(x, dtype=float))
        eps2 = self.bandwidth**2
        norm = (2.0 * np.pi * eps2) ** (-self.mesh.dim / 2.0)
        out = np.empty_like(x)
        rows = max(1, block // self._nodes.shape[0])
        for i0 in range(0, x.shape[0], rows):
            i1 = min(i0 + rows, x.shape[0])
            z = x[i0:i1, None, :] - self._nodes[None, :, :]
            psi = norm * np.exp(-(z * z).sum(axis=2) / (2.0 * eps2))
            # grad_x psi = -z/eps^2 psi
            out[i0:i1] = -np.einsum(
                "bl,bld->bd", psi * self._logw, z
            ) / eps2
        return out

    def jacobians(self, x, block=131_072):
        self._require_fit()
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = self.mesh.dim
        eps2 = self.bandwidth**2
        norm = (2.0 * np.pi * eps2) ** (-d / 2.0)
        out = np.empty((x.shape[0], d, d))
        eye = np.eye(d)
        rows = max(1, block // self._nodes.shape[0])
        for i0 in range(0, x.shape[0], rows):
            i1 = min(i0 + rows, x.shape[0])
            z = x[i0:i1, None, :] - self._nodes[None, :, :]
            wpsi = self._logw * norm * np.exp(-(z * z).sum(axis=2) / (2.0 * eps2))
            # hess psi = psi (z z^T / eps^4 - I / eps^2)
            outer = np.einsum("nl,nla,nlb->nab", wpsi, z, z) / (eps2 * eps2)
            out[i0:i1] = outer - (wpsi.sum(axis=1))[:, None, None] * eye / eps2
        return out
