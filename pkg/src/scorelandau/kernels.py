"""Landau collision kernel A(z), the projection Pi(z), and K(z) = div A.

The parametric family is

    A(z) = c_gamma |z|^gamma (|z|^2 I_d - z (x) z) = c_gamma |z|^(gamma+2) Pi(z),

where Pi projects onto the orthogonal complement of z.  Row-wise divergences:

    div A(z)  = c_gamma (1 - d) |z|^gamma z
    div Pi(z) = -(d - 1) z / |z|^2

An identity-matrix kernel is provided as a test double; with it the particle
dynamics reduce to the classical continuity-equation case.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePair

DEFAULT_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelParams:
    """Collision strength c_gamma, exponent gamma, and dimension d >= 2.

    gamma must lie in [-d-1, 1]; gamma = 0 is the Maxwell case and
    gamma = -3 (d = 3) the Coulomb case.
    """

    c_gamma: float
    gamma: float
    dim: int
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if not self.c_gamma > 0:
            raise ValueError(f"c_gamma must be positive, got {self.c_gamma}")
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not (-self.dim - 1 <= self.gamma <= 1):
            raise ValueError(
                f"gamma={self.gamma} outside admissible range "
                f"[{-self.dim - 1}, 1] for d={self.dim}"
            )
        if not self.floor > 0:
            raise ValueError("floor must be positive")


class LandauKernel:
    """Evaluate A, Pi, K = div A, and div Pi for the parametric family."""

    kind = "landau"
    is_identity = False

    def __init__(self, c_gamma, gamma, dim, floor=DEFAULT_FLOOR):
        self.params = KernelParams(float(c_gamma), float(gamma), int(dim), float(floor))

    @classmethod
    def from_params(cls, params):
        return cls(params.c_gamma, params.gamma, params.dim, params.floor)

    @property
    def c_gamma(self):
        return self.params.c_gamma

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def dim(self):
        return self.params.dim

    @property
    def floor(self):
        return self.params.floor

    def _check_pair(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-vector, got shape {z.shape}")
        r = float(np.linalg.norm(z))
        if self.gamma < 0 and r <= self.floor:
            raise DegeneratePair(f"|z|={r:.3g} at or below floor {self.floor:.3g}")
        return z, r

    def eval_A(self, z):
        """c_gamma |z|^gamma (|z|^2 I - z z^T); symmetric PSD, A(z) z = 0."""
        z, r = self._check_pair(z)
        if r == 0.0:
            return np.zeros((self.dim, self.dim))
        w = self.c_gamma * r**self.gamma
        return w * (r * r * np.eye(self.dim) - np.outer(z, z))

    def eval_Pi(self, z):
        """Projection I - z z^T / |z|^2 onto the complement of z."""
        z, r = self._check_pair(z)
        if r <= self.floor:
            raise DegeneratePair(f"|z|={r:.3g} at or below floor {self.floor:.3g}")
        return np.eye(self.dim) - np.outer(z, z) / (r * r)

    def eval_K(self, z):
        """Row-wise divergence of A: c_gamma (1 - d) |z|^gamma z."""
        z, r = self._check_pair(z)
        if r == 0.0:
            return np.zeros(self.dim)
        return self.c_gamma * (1 - self.dim) * r**self.gamma * z

    def eval_div_Pi(self, z):
        """Row-wise divergence of Pi: -(d - 1) z / |z|^2."""
        z, r = self._check_pair(z)
        if r <= self.floor:
            raise DegeneratePair(f"|z|={r:.3g} at or below floor {self.floor:.3g}")
        return -(self.dim - 1) * z / (r * r)


class IdentityKernel:
    """Test double: A(z) = I_d for every z, hence K = div A = 0."""

    kind = "identity"
    is_identity = True
    c_gamma = 1.0
    gamma = 0.0
    floor = DEFAULT_FLOOR

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)

    def eval_A(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-vector, got shape {z.shape}")
        return np.eye(self.dim)

    def eval_K(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-vector, got shape {z.shape}")
        return np.zeros(self.dim)


def maxwell_kernel(c_gamma, dim):
    """Landau kernel with gamma = 0."""
    return LandauKernel(c_gamma, 0.0, dim)


def coulomb_kernel(c_gamma, dim):
    """Landau kernel with gamma = -3."""
    return LandauKernel(c_gamma, -3.0, dim)
