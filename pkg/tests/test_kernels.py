import numpy as np
import pytest

from scorelandau.errors import DegeneratePair
from scorelandau.kernels import IdentityKernel, KernelParams, LandauKernel


def test_eval_a_hand_values_maxwell_2d():
    k = LandauKernel(1.0, 0.0, 2)
    A = k.eval_A(np.array([3.0, 4.0]))
    assert np.allclose(A, [[16.0, -12.0], [-12.0, 9.0]], atol=1e-14)

    k16 = LandauKernel(1.0 / 16.0, 0.0, 2)
    A = k16.eval_A(np.array([1.0, 0.0]))
    assert np.allclose(A, [[0.0, 0.0], [0.0, 1.0 / 16.0]], atol=1e-16)


def test_eval_a_identity_double():
    k = IdentityKernel(3)
    assert np.array_equal(k.eval_A(np.array([5.0, -1.0, 2.0])), np.eye(3))
    assert np.array_equal(k.eval_K(np.array([5.0, -1.0, 2.0])), np.zeros(3))


def test_eval_k_reference_value_3d_maxwell():
    # d=3, C=1: K(z) = C (1-d) |z|^gamma z = -2 |z|^gamma z
    k = LandauKernel(1.0, 0.0, 3)
    K = k.eval_K(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(K, [-2.0, 0.0, 0.0], atol=1e-15)


def test_eval_k_general_dimension_factor():
    k = LandauKernel(1.0, 0.0, 2)
    assert np.allclose(k.eval_K(np.array([0.0, 1.0])), [0.0, -1.0], atol=1e-15)


@pytest.mark.parametrize(
    "dim,z,expected",
    [
        (2, [2.0, 0.0], [-0.5, 0.0]),
        (3, [0.0, 0.0, 1.0], [0.0, 0.0, -2.0]),
        (2, [1.0, 1.0], [-0.5, -0.5]),
    ],
)
def test_eval_div_pi_formula(dim, z, expected):
    k = LandauKernel(1.0, 0.0, dim)
    assert np.allclose(k.eval_div_Pi(np.array(z)), expected, atol=1e-15)


def test_kernel_params_validation():
    with pytest.raises(ValueError):
        KernelParams(-1.0, 0.0, 2)
    with pytest.raises(ValueError):
        KernelParams(1.0, 0.0, 1)
    with pytest.raises(ValueError):
        KernelParams(1.0, -4.5, 2)  # below -d-1 = -3
    with pytest.raises(ValueError):
        KernelParams(1.0, 1.5, 3)
    KernelParams(1.0, -3.0, 2)  # boundary is admissible


def test_degenerate_pair_below_floor():
    k = LandauKernel(1.0, -3.0, 2)
    with pytest.raises(DegeneratePair):
        k.eval_A(np.array([1e-13, 0.0]))
    with pytest.raises(DegeneratePair):
        k.eval_K(np.array([0.0, 1e-13]))
    # configurable floor
    loose = LandauKernel(1.0, -3.0, 2, floor=1e-6)
    with pytest.raises(DegeneratePair):
        loose.eval_A(np.array([1e-7, 0.0]))
    # Maxwell case is regular at the origin
    assert np.allclose(LandauKernel(1.0, 0.0, 2).eval_A(np.zeros(2)), 0.0)
    # div Pi is floor-guarded for every gamma
    with pytest.raises(DegeneratePair):
        LandauKernel(1.0, 0.0, 2).eval_div_Pi(np.zeros(2))


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("gamma", [0.0, -3.0])
def test_projection_and_eigenstructure(rng, dim, gamma):
    k = LandauKernel(0.7, gamma, dim)
    for _ in range(50):
        z = rng.normal(size=dim)
        r = np.linalg.norm(z)
        A = k.eval_A(z)
        assert np.allclose(A, A.T)
        scale = 0.7 * r ** (gamma + 4.0)
        assert abs(z @ A @ z) <= 1e-12 * scale
        eig = np.sort(np.linalg.eigvalsh(A))
        expected = np.sort([0.0] + [0.7 * r ** (gamma + 2.0)] * (dim - 1))
        assert np.allclose(eig, expected, rtol=1e-12, atol=1e-13 * scale)


def _fd_row_divergence(fn, z, h):
    d = z.size
    out = np.zeros(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        out += (fn(z + e) - fn(z - e))[:, j] / (2.0 * h)
    return out


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("gamma", [0.0, -3.0])
def test_divergences_match_finite_differences(rng, dim, gamma):
    k = LandauKernel(1.3, gamma, dim)
    for _ in range(25):
        z = rng.normal(size=dim)
        z *= max(1.0, 0.5 / np.linalg.norm(z))
        h = 1e-5 * np.linalg.norm(z)
        K_fd = _fd_row_divergence(k.eval_A, z, h)
        K = k.eval_K(z)
        assert np.abs(K - K_fd).max() <= 1e-6 * max(1.0, np.abs(K).max())
        dPi_fd = _fd_row_divergence(k.eval_Pi, z, h)
        dPi = k.eval_div_Pi(z)
        assert np.abs(dPi - dPi_fd).max() <= 1e-6 * max(1.0, np.abs(dPi).max())


@pytest.mark.parametrize("dim,n_grid", [(2, 20), (3, 8)])
@pytest.mark.parametrize("gamma", [0.0, -3.0])
def test_kernel_average_positive_definite_on_torus(rng, dim, n_grid, gamma):
    # quadrature of A(v - v*) rho(v*) dv* on the periodic unit box stays
    # positive definite at every node, for random normalized densities
    k = LandauKernel(1.0, gamma, dim)
    axes = [np.arange(n_grid) / n_grid] * dim
    nodes = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], -1)
    vol = 1.0 / n_grid**dim
    for _ in range(3):
        rho = rng.random(nodes.shape[0])
        rho /= rho.sum() * vol
        diff = nodes[:, None, :] - nodes[None, :, :]
        diff -= np.round(diff)  # minimal image on the torus
        r2 = (diff**2).sum(-1)
        mask = r2 > k.floor**2
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(mask, r2 ** (0.5 * gamma), 0.0)
        B = w[..., None, None] * (
            r2[..., None, None] * np.eye(dim)
            - diff[..., :, None] * diff[..., None, :]
        )
        avg = np.einsum("mnab,n->mab", B, rho * vol)
        eigmin = np.linalg.eigvalsh(avg).min()
        assert eigmin > 0.0
