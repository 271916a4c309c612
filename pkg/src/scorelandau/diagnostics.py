"""Density reconstruction and error metrics.

* Gaussian-kernel density estimate on a uniform tensor mesh,
  f_kde(c) = (1/N) sum_j psi_eps(c - v_j) with
  psi_eps(z) = (2 pi eps^2)^(-d/2) exp(-|z|^2 / 2 eps^2).
* Discrete relative L2 error over cell centers.
* Relative Fisher divergence of a score provider against a reference score.
* Convergence-study statistics: errors e_N (over independent runs) and
  e_dt (Richardson pairs), with least-squares log-log slopes.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReference, InsufficientData


@dataclass(frozen=True)
class MeshSpec:
    """Uniform mesh of cells_per_dim^dim cells covering [-half_width, half_width]^dim."""

    half_width: float
    cells_per_dim: int
    dim: int

    def __post_init__(self):
        if self.half_width <= 0 or self.cells_per_dim < 1 or self.dim < 1:
            raise ValueError("mesh parameters must be positive")

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.cells_per_dim

    @property
    def n_cells(self):
        return self.cells_per_dim**self.dim

    @property
    def cell_volume(self):
        return self.spacing**self.dim

    def axis_centers(self):
        h = self.spacing
        return -self.half_width + h * (np.arange(self.cells_per_dim) + 0.5)

    def centers(self):
        """All cell centers, shape (n_cells, dim), C order ('ij' indexing)."""
        axes = [self.axis_centers()] * self.dim
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True)
class KdeConfig:
    """Isotropic Gaussian KDE bandwidth."""

    bandwidth: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def gaussian_kernel(sq_dist, eps, dim):
    return (2.0 * math.pi * eps * eps) ** (-dim / 2.0) * np.exp(
        -sq_dist / (2.0 * eps * eps)
    )


def kde_at_points(points, velocities, eps, block=262_144):
    """Direct blocked KDE evaluation at arbitrary points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.atleast_2d(np.asarray(velocities, dtype=float))
    n = v.shape[0]
    dim = v.shape[1]
    out = np.empty(points.shape[0])
    rows = max(1, block // max(n, 1))
    for i0 in range(0, points.shape[0], rows):
        i1 = min(i0 + rows, points.shape[0])
        d2 = ((points[i0:i1, None, :] - v[None, :, :]) ** 2).sum(axis=2)
        out[i0:i1] = gaussian_kernel(d2, eps, dim).sum(axis=1) / n
    return out


def kde_on_mesh(velocities, mesh, kde, particle_block=2048):
    """KDE at every cell center of a tensor mesh, exploiting separability.

    The Gaussian factorizes over coordinates, so the d-dimensional field is
    assembled from per-axis kernel matrices with dense matrix products;
    results match kde_at_points(mesh.centers(), ...) to rounding.
    Returns a flat array of length mesh.n_cells (C order).
    """
    v = np.atleast_2d(np.asarray(velocities, dtype=float))
    n, dim = v.shape
    if dim != mesh.dim:
        raise ValueError(f"particles have dim {dim}, mesh has dim {mesh.dim}")
    eps = kde.bandwidth
    c = mesh.axis_centers()
    m = c.size
    out = np.zeros((m,) * dim)
    for j0 in range(0, n, particle_block):
        j1 = min(j0 + particle_block, n)
        f = [
            np.exp(-((c[None, :] - v[j0:j1, a, None]) ** 2) / (2.0 * eps * eps))
            for a in range(dim)
        ]
        if dim == 1:
            out += f[0].sum(axis=0)
        elif dim == 2:
            out += f[0].T @ f[1]
        elif dim == 3:
            b = j1 - j0
            pair = (f[1][:, :, None] * f[2][:, None, :]).reshape(b, m * m)
            out += (f[0].T @ pair).reshape(m, m, m)
        else:
            raise NotImplementedError("mesh KDE implemented for dim <= 3")
    out *= (2.0 * math.pi * eps * eps) ** (-dim / 2.0) / n
    return out.ravel()


def relative_l2_error(reconstructed, reference):
    """sqrt(sum |rec - ref|^2) / sqrt(sum |ref|^2) over cell centers."""
    rec = np.asarray(reconstructed, dtype=float).ravel()
    ref = np.asarray(reference, dtype=float).ravel()
    if rec.shape != ref.shape:
        raise ValueError("field shapes differ")
    denom = float(np.sqrt((ref * ref).sum()))
    if denom == 0.0:
        raise DegenerateReference("reference field is identically zero")
    return float(np.sqrt(((rec - ref) ** 2).sum()) / denom)


def relative_fisher(provider, analytic_score_at, velocities):
    """sum_i |s(v_i) - grad log f(v_i)|^2 / sum_i |grad log f(v_i)|^2."""
    v = np.atleast_2d(np.asarray(velocities, dtype=float))
    g = np.atleast_2d(analytic_score_at(v))
    denom = float((g * g).sum())
    if denom == 0.0:
        raise DegenerateReference("reference scores are identically zero")
    s = provider.scores(v)
    return float(((s - g) ** 2).sum() / denom)


def fit_loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _check_span(values, what):
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise InsufficientData(f"need >= 3 {what} values, got {values.size}")
    if values.max() / values.min() < 10.0:
        raise InsufficientData(
            f"{what} values span {values.max() / values.min():.2f}x, "
            "need at least one decade"
        )


def particle_count_errors(entropy_by_count, reference_entropy):
    """e_N = sqrt(mean_j |H_j(t_end) - H_ref(t_end)|^2) for each particle count.

    entropy_by_count maps N -> sequence of final entropies over independent
    runs.  Returns (counts, e_N) sorted by N.
    """
    counts = np.array(sorted(entropy_by_count))
    _check_span(counts, "particle count")
    errs = np.array(
        [
            math.sqrt(
                np.mean(
                    (np.asarray(entropy_by_count[n], dtype=float)
                     - reference_entropy) ** 2
                )
            )
            for n in counts
        ]
    )
    return counts, errs


def timestep_errors(entropy_by_dt):
    """e_dt = |H_dt(t_end) - H_{dt/2}(t_end)| for every halving pair present.

    entropy_by_dt maps dt -> final entropy from a run with that step (same
    seed across runs so sampling error cancels).  Returns (dts, e_dt).
    """
    dts = np.array(sorted(entropy_by_dt))
    _check_span(dts, "time step")
    out_dt = []
    out_err = []
    for dt in dts:
        half = dt / 2.0
        match = [d for d in dts if math.isclose(d, half, rel_tol=1e-9)]
        if match:
            out_dt.append(dt)
            out_err.append(abs(entropy_by_dt[dt] - entropy_by_dt[match[0]]))
    if len(out_dt) < 2:
        raise InsufficientData("need at least two dt halving pairs")
    return np.array(out_dt), np.array(out_err)


def convergence_stats(entropy_by_count=None, reference_entropy=None,
                      entropy_by_dt=None):
    """Fitted log-log slopes (e_N slope, e_dt slope); either may be None."""
    n_slope = None
    dt_slope = None
    if entropy_by_count is not None:
        counts, errs = particle_count_errors(entropy_by_count, reference_entropy)
        n_slope = fit_loglog_slope(counts, errs)
    if entropy_by_dt is not None:
        dts, errs = timestep_errors(entropy_by_dt)
        dt_slope = fit_loglog_slope(dts, errs)
    return n_slope, dt_slope


def dump_mesh_field(path, mesh, field, reference=None):
    """CSV dump of a mesh field: cell_center_1..d, f_kde[, f_reference]."""
    field = np.asarray(field, dtype=float).ravel()
    if field.size != mesh.n_cells:
        raise ValueError("field size does not match the mesh")
    centers = mesh.centers()
    header = [f"cell_center_{a + 1}" for a in range(mesh.dim)] + ["f_kde"]
    cols = [centers[:, a] for a in range(mesh.dim)] + [field]
    if reference is not None:
        reference = np.asarray(reference, dtype=float).ravel()
        if reference.size != mesh.n_cells:
            raise ValueError("reference size does not match the mesh")
        header.append("f_reference")
        cols.append(reference)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(mesh.n_cells):
            fh.write(",".join(repr(float(c[i])) for c in cols) + "\n")
    return path


def entropy_quadrature(density_fn, dim, half_width=8.0, nodes=480):
    """integral of f log f by tensor-product Gauss-Legendre on [-L, L]^dim."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = x * half_width
    w = w * half_width
    axes = [x] * dim
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    f = np.asarray(density_fn(pts), dtype=float)
    flogf = np.where(f > 1e-300, f * np.log(np.maximum(f, 1e-300)), 0.0)
    weight = w
    for _ in range(dim - 1):
        weight = np.multiply.outer(weight, w)
    return float((weight.ravel() * flogf).sum())
