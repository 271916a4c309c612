"""Closed-form solutions, initial conditions, scores, and samplers.

These serve three roles: initial condition (sampling + exact initial
densities and scores), oracle for accuracy metrics, and exact-score provider
for the convergence studies.

Time-evolving families (Maxwell case):

* Bkw2d:  f_t(v) = (1/2 pi K) exp(-|v|^2/2K) ((2K-1)/K + (1-K)|v|^2/(2K^2)),
  K(t) = 1 - exp(-t/8)/2.
* Bkw3d:  f_t(v) = (2 pi K)^{-3/2} exp(-|v|^2/2K) ((5K-3)/(2K) + (1-K)|v|^2/(2K^2)),
  K(t) = 1 - exp(-t/6), valid for K >= 3/5.

Static initial laws:

* Maxwellian(dim, mean, temperature) - also the long-time equilibrium.
* BiMaxwellian2d - the two-bump Coulomb test initial condition.
* Rosenbluth3d - the spherical-shell initial condition
  f_0(v) = (1/S^2) exp(-S(|v|-sigma)^2/sigma^2), normalized numerically.

Sampling is by seeded rejection (or exact transforms where available); a
counter-based Philox generator keeps streams reproducible and splittable.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import EnvelopeTooLoose, InvalidTime, ScoreSingular

_MIN_ACCEPT_RATE = 1e-4
_RATE_CHECK_WINDOW = 1_000_000


def make_rng(seed):
    """Counter-based generator; independent streams come from spawning."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class SamplerConfig:
    """Rejection-sampler knobs: seed, symmetry fill, and envelope padding.

    symmetry_fill draws axis-folded magnitudes and re-randomizes the signs,
    which is valid for coordinate-sign-symmetric targets (the BKW laws).
    envelope_scale > 1 loosens the envelope; it exists so the acceptance-rate
    guard can be exercised.
    """

    seed: int = 0
    symmetry_fill: bool = False
    envelope_pad: float = 1.02
    envelope_scale: float = 1.0


def _rejection_sample(n, dim, rng, target_density, proposal_sigma, envelope,
                      symmetry_fill=False):
    """i.i.d. draws from target_density via a centered Gaussian proposal."""
    out = []
    got = 0
    proposed = 0
    accepted = 0
    norm = (2.0 * math.pi * proposal_sigma**2) ** (dim / 2.0)
    while got < n:
        m = max(4 * (n - got), 4096)
        x = rng.normal(0.0, proposal_sigma, size=(m, dim))
        prop = np.exp(-(x * x).sum(axis=1) / (2.0 * proposal_sigma**2)) / norm
        ratio = target_density(x) / (envelope * prop)
        keep = rng.random(m) < ratio
        out.append(x[keep])
        got += int(keep.sum())
        proposed += m
        accepted += int(keep.sum())
        if proposed >= _RATE_CHECK_WINDOW and accepted < _MIN_ACCEPT_RATE * proposed:
            raise EnvelopeTooLoose(
                f"acceptance rate {accepted / proposed:.2e} after "
                f"{proposed} proposals"
            )
    v = np.concatenate(out)[:n]
    if symmetry_fill:
        v = np.abs(v) * rng.choice([-1.0, 1.0], size=v.shape)
    return np.ascontiguousarray(v)


def _radial_envelope(target_density, dim, proposal_sigma, pad, r_max=12.0):
    """Envelope constant from the ratio max on a radius grid (spot check)."""
    r = np.linspace(0.0, r_max, 6001)
    x = np.zeros((r.size, dim))
    x[:, 0] = r
    norm = (2.0 * math.pi * proposal_sigma**2) ** (dim / 2.0)
    prop = np.exp(-(r * r) / (2.0 * proposal_sigma**2)) / norm
    ratio = target_density(x) / prop
    if not np.all(np.isfinite(ratio)):
        raise ValueError("target/proposal ratio not finite on the check grid")
    return pad * float(ratio.max())


class _BkwBase:
    """Shared machinery of the 2D and 3D BKW families."""

    def _coeffs(self, t):
        raise NotImplementedError

    def density(self, t, v):
        k, p, q = self._coeffs(t)
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r2 = (v * v).sum(axis=1)
        pref = (2.0 * math.pi * k) ** (-self.dim / 2.0)
        return pref * np.exp(-r2 / (2.0 * k)) * (p + q * r2)

    def log_density(self, t, v):
        k, p, q = self._coeffs(t)
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r2 = (v * v).sum(axis=1)
        bracket = p + q * r2
        if np.any(bracket <= 0.0):
            raise ScoreSingular("density vanishes at a requested point")
        return (
            -0.5 * self.dim * math.log(2.0 * math.pi * k)
            - r2 / (2.0 * k)
            + np.log(bracket)
        )

    def score(self, t, v):
        """grad log f_t(v) = (-1/K + 2 q / (p + q |v|^2)) v."""
        k, p, q = self._coeffs(t)
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r2 = (v * v).sum(axis=1)
        bracket = p + q * r2
        if np.any(bracket <= 0.0):
            raise ScoreSingular("score requested where the density vanishes")
        g = -1.0 / k + 2.0 * q / bracket
        return g[:, None] * v

    def score_jacobian(self, t, v):
        k, p, q = self._coeffs(t)
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r2 = (v * v).sum(axis=1)
        bracket = p + q * r2
        if np.any(bracket <= 0.0):
            raise ScoreSingular("score requested where the density vanishes")
        g = -1.0 / k + 2.0 * q / bracket
        gp = -2.0 * q * q / (bracket * bracket)
        jac = g[:, None, None] * np.eye(self.dim)
        jac = jac + 2.0 * gp[:, None, None] * (v[:, :, None] * v[:, None, :])
        return jac

    def entropy(self, t, half_width=8.0, nodes=480):
        from .diagnostics import entropy_quadrature

        return entropy_quadrature(
            lambda v: self.density(t, v), self.dim, half_width, nodes
        )

    def sample(self, n, rng, t=None, symmetry_fill=False, envelope_pad=1.02,
               envelope_scale=1.0):
        t = self.t0 if t is None else t
        k, _, _ = self._coeffs(t)
        sigma = math.sqrt(max(1.0, 1.6 * k))
        envelope = envelope_scale * _radial_envelope(
            lambda x: self.density(t, x), self.dim, sigma, envelope_pad
        )
        return _rejection_sample(
            n, self.dim, make_rng(rng), lambda x: self.density(t, x), sigma,
            envelope, symmetry_fill,
        )


class Bkw2d(_BkwBase):
    """2D BKW solution of the Maxwell-case equation with kernel strength 1/16."""

    dim = 2
    t0 = 0.0
    kernel_c = 1.0 / 16.0
    kernel_gamma = 0.0

    def K(self, t):
        if t < 0:
            raise InvalidTime(f"t={t} before t=0")
        return 1.0 - math.exp(-t / 8.0) / 2.0

    def _coeffs(self, t):
        k = self.K(t)
        return k, (2.0 * k - 1.0) / k, (1.0 - k) / (2.0 * k * k)


class Bkw3d(_BkwBase):
    """3D BKW solution with kernel strength 1/24; valid for K(t) >= 3/5."""

    dim = 3
    t0 = 5.5
    kernel_c = 1.0 / 24.0
    kernel_gamma = 0.0
    t_min = 6.0 * math.log(5.0 / 2.0)

    def K(self, t):
        if t < self.t_min:
            raise InvalidTime(
                f"t={t} below validity threshold {self.t_min:.6f} (K >= 3/5)"
            )
        return 1.0 - math.exp(-t / 6.0)

    def _coeffs(self, t):
        k = self.K(t)
        return k, (5.0 * k - 3.0) / (2.0 * k), (1.0 - k) / (2.0 * k * k)


class Maxwellian:
    """Equilibrium Gaussian with mean u and temperature T (covariance T I)."""

    def __init__(self, dim, mean=None, temperature=1.0):
        self.dim = int(dim)
        self.mean = np.zeros(dim) if mean is None else np.asarray(mean, dtype=float)
        self.temperature = float(temperature)
        self.t0 = 0.0

    def density(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r2 = ((v - self.mean) ** 2).sum(axis=1)
        pref = (2.0 * math.pi * self.temperature) ** (-self.dim / 2.0)
        return pref * np.exp(-r2 / (2.0 * self.temperature))

    def score(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        return -(v - self.mean) / self.temperature

    def score_jacobian(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        n = v.shape[0]
        jac = -np.eye(self.dim) / self.temperature
        return np.broadcast_to(jac, (n, self.dim, self.dim)).copy()

    def sample(self, n, rng, t=None, symmetry_fill=False, **_):
        rng = make_rng(rng)
        v = self.mean + math.sqrt(self.temperature) * rng.standard_normal(
            (n, self.dim)
        )
        return np.ascontiguousarray(v)


class BiMaxwellian2d:
    """Equal mixture of two unit-temperature Gaussians (the 2D Coulomb test)."""

    dim = 2
    t0 = 0.0

    def __init__(self, u1=(-2.0, 1.0), u2=(0.0, -1.0)):
        self.u1 = np.asarray(u1, dtype=float)
        self.u2 = np.asarray(u2, dtype=float)

    def _comps(self, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        e1 = np.exp(-((v - self.u1) ** 2).sum(axis=1) / 2.0)
        e2 = np.exp(-((v - self.u2) ** 2).sum(axis=1) / 2.0)
        return v, e1, e2

    def density(self, t, v):
        _, e1, e2 = self._comps(v)
        return (e1 + e2) / (4.0 * math.pi)

    def score(self, t, v):
        v, e1, e2 = self._comps(v)
        w1 = (e1 / (e1 + e2))[:, None]
        return w1 * (self.u1 - v) + (1.0 - w1) * (self.u2 - v)

    def score_jacobian(self, t, v):
        v, e1, e2 = self._comps(v)
        w1 = (e1 / (e1 + e2))[:, None]
        m1 = self.u1 - v
        m2 = self.u2 - v
        s = w1 * m1 + (1.0 - w1) * m2
        jac = -np.broadcast_to(np.eye(2), (v.shape[0], 2, 2)).copy()
        # grad w1 = w1 (m1 - s); the mixture score is w1 m1 + w2 m2
        jac += w1[:, :, None] * (m1[:, :, None] - s[:, :, None]) * m1[:, None, :]
        jac += ((1.0 - w1)[:, :, None] * (m2[:, :, None] - s[:, :, None])
                * m2[:, None, :])
        return jac

    def sample(self, n, rng, t=None, **_):
        rng = make_rng(rng)
        pick = rng.random(n) < 0.5
        centers = np.where(pick[:, None], self.u1, self.u2)
        return np.ascontiguousarray(centers + rng.standard_normal((n, 2)))


class Rosenbluth3d:
    """Spherical-shell initial law (1/S^2) exp(-S(|v|-sigma)^2/sigma^2), d=3.

    The written form is unnormalized; the normalization constant is computed
    once by adaptive radial quadrature and used for sampling and density
    tracking.
    """

    dim = 3
    t0 = 0.0

    def __init__(self, sigma=0.3, shell=10.0):
        self.sigma = float(sigma)
        self.shell = float(shell)
        self.normalization = self._normalization()
        self._cdf_r, self._cdf_p = self._radial_cdf_table()

    def density_unnormalized(self, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r = np.sqrt((v * v).sum(axis=1))
        return self._radial_unnormalized(r)

    def _radial_unnormalized(self, r):
        s, sig = self.shell, self.sigma
        return np.exp(-s * (r - sig) ** 2 / sig**2) / s**2

    def _normalization(self):
        val, err = integrate.quad(
            lambda r: 4.0 * math.pi * r * r * float(self._radial_unnormalized(r)),
            0.0,
            np.inf,
            epsabs=1e-14,
            epsrel=1e-12,
        )
        if err > 1e-10 * val:
            raise RuntimeError("radial normalization quadrature did not converge")
        return val

    def density(self, t, v):
        return self.density_unnormalized(v) / self.normalization

    def score(self, t, v):
        """grad log f_0 = -(2S/sigma^2)(|v| - sigma) v/|v|; bounded as v -> 0."""
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r = np.sqrt((v * v).sum(axis=1))
        safe = np.where(r > 0.0, r, 1.0)
        h = -(2.0 * self.shell / self.sigma**2) * (1.0 - self.sigma / safe)
        return np.where(r[:, None] > 0.0, h[:, None] * v, 0.0)

    def score_jacobian(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r = np.sqrt((v * v).sum(axis=1))
        if np.any(r == 0.0):
            raise ScoreSingular("score gradient undefined at the origin")
        c = 2.0 * self.shell / self.sigma**2
        h = -c * (1.0 - self.sigma / r)
        hp_over_r = -c * self.sigma / r**3
        jac = h[:, None, None] * np.eye(3)
        jac = jac + hp_over_r[:, None, None] * (v[:, :, None] * v[:, None, :])
        return jac

    def _radial_cdf_table(self, n=20_000, r_max=None):
        if r_max is None:
            r_max = self.sigma * (1.0 + 8.0 / math.sqrt(self.shell))
        r = np.linspace(0.0, r_max, n)
        pdf = 4.0 * math.pi * r * r * self._radial_unnormalized(r)
        cdf = integrate.cumulative_trapezoid(pdf, r, initial=0.0)
        cdf /= cdf[-1]
        return r, cdf

    def sample(self, n, rng, t=None, **_):
        """Radius by inverse CDF on the tabulated grid, direction uniform."""
        rng = make_rng(rng)
        u = rng.random(n)
        r = np.interp(u, self._cdf_p, self._cdf_r)
        x = rng.standard_normal((n, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        return np.ascontiguousarray(r[:, None] * x)


def draw_samples(law, n, config, t=None):
    """Sample a law under a SamplerConfig (seed, symmetry fill, envelope)."""
    return law.sample(
        n,
        make_rng(config.seed),
        t=t,
        symmetry_fill=config.symmetry_fill,
        envelope_pad=config.envelope_pad,
        envelope_scale=config.envelope_scale,
    )


INITIAL_LAWS = {
    "bkw2d": Bkw2d,
    "bkw3d": Bkw3d,
    "bimaxwellian": BiMaxwellian2d,
    "rosenbluth": Rosenbluth3d,
}


def make_initial_law(name):
    try:
        return INITIAL_LAWS[name]()
    except KeyError:
        raise ValueError(f"unknown initial law {name!r}") from None


def has_time_evolution(law):
    """True when the law is a valid oracle for t > t0 (BKW and equilibria)."""
    return isinstance(law, (_BkwBase, Maxwellian))
