import numpy as np
import pytest

from scorelandau.errors import FixedPointNotConverged
from scorelandau.kernels import IdentityKernel, LandauKernel
from scorelandau.particles import (
    ParticleEnsemble,
    compute_drift,
    entropy_decay_estimate,
    euler_step,
    midpoint_step,
    moments,
)
from scorelandau.providers import AnalyticScore, LinearScore
from scorelandau.solutions import Bkw2d, Maxwellian

SWAP = LinearScore(np.array([[0.0, 1.0], [1.0, 0.0]]))  # s(v) = (v2, v1)


def test_single_particle_has_zero_drift():
    ens = ParticleEnsemble(np.array([[0.4, -0.2]]))
    g = compute_drift(ens, LandauKernel(1.0, 0.0, 2), SWAP)
    assert np.array_equal(g, np.zeros((1, 2)))


def test_two_particle_hand_value_and_euler_step():
    # v1=(1,0), v2=(0,0), s(v)=(v2,v1), A with C=1/16, gamma=0:
    # G(v1) = (1/2) A((1,0)) (0,1) = (0, 1/32), G(v2) = -G(v1)
    kernel = LandauKernel(1.0 / 16.0, 0.0, 2)
    ens = ParticleEnsemble(np.array([[1.0, 0.0], [0.0, 0.0]]))
    g = compute_drift(ens, kernel, SWAP)
    assert np.allclose(g, [[0.0, 1.0 / 32.0], [0.0, -1.0 / 32.0]], atol=1e-16)
    stepped = euler_step(ens, g, 0.1)
    assert np.allclose(
        stepped.velocities, [[1.0, -0.003125], [0.0, 0.003125]], atol=1e-16
    )
    assert stepped.time == pytest.approx(0.1)
    # exact momentum conservation
    assert np.allclose(
        stepped.velocities.sum(0), ens.velocities.sum(0), atol=1e-16
    )


def test_constant_score_gives_zero_drift(rng):
    ens = ParticleEnsemble(rng.normal(size=(40, 2)))
    const = LinearScore(np.zeros((2, 2)), offset=[0.7, -0.3])
    g = compute_drift(ens, LandauKernel(1.0, 0.0, 2), const)
    assert np.abs(g).max() < 1e-15


def test_zero_drift_euler_noop(rng):
    ens = ParticleEnsemble(rng.normal(size=(10, 2)))
    stepped = euler_step(ens, np.zeros((10, 2)), 0.05)
    assert np.array_equal(stepped.velocities, ens.velocities)


def test_moments_examples(rng):
    mass, mom, energy = moments(ParticleEnsemble(np.array([[1.0, 2.0]])))
    assert mass == 1.0
    assert np.allclose(mom, [1.0, 2.0])
    assert energy == pytest.approx(5.0)
    pair = ParticleEnsemble(np.array([[0.3, -0.8], [-0.3, 0.8]]))
    assert np.allclose(moments(pair)[1], 0.0)
    big = ParticleEnsemble(rng.standard_normal((10_000, 2)))
    assert abs(moments(big)[2] - 2.0) <= 5.0 / np.sqrt(10_000) * 2.0


def test_momentum_conserved_over_steps(rng):
    law = Bkw2d()
    kernel = LandauKernel(1.0 / 16.0, 0.0, 2)
    v = law.sample(400, rng, t=0.0)
    ens = ParticleEnsemble(v)
    provider = AnalyticScore(law, 0.0)
    mom0 = ens.velocities.mean(0)
    for k in range(20):
        provider.time = k * 0.02
        g = compute_drift(ens, kernel, provider)
        ens = euler_step(ens, g, 0.02)
    drift = np.abs(ens.velocities.mean(0) - mom0).max()
    assert drift <= 1e-12 * max(1.0, np.abs(ens.velocities).max()) * ens.n**0.5


def test_energy_increment_identity(rng):
    # E_{n+1} - E_n = dt^2 mean|G|^2, exactly up to rounding
    law = Bkw2d()
    kernel = LandauKernel(1.0 / 16.0, 0.0, 2)
    ens = ParticleEnsemble(law.sample(500, rng, t=0.0))
    provider = AnalyticScore(law, 0.0)
    dt = 0.01
    for _ in range(5):
        g = compute_drift(ens, kernel, provider)
        nxt = euler_step(ens, g, dt)
        lhs = ((nxt.velocities**2).sum(1) - (ens.velocities**2).sum(1)).mean()
        rhs = dt * dt * (g * g).sum(1).mean()
        assert abs(lhs - rhs) <= 1e-10 * rhs
        ens = nxt


def test_drift_is_permutation_equivariant(rng):
    kernel = LandauKernel(0.3, 0.0, 2)
    v = rng.normal(size=(30, 2))
    perm = rng.permutation(30)
    g = compute_drift(ParticleEnsemble(v), kernel, SWAP)
    gp = compute_drift(ParticleEnsemble(v[perm]), kernel, SWAP)
    assert np.allclose(gp, g[perm], atol=1e-14)


def test_identity_kernel_reduction(rng):
    # with A = I the drift is s(v_i) - mean_j s(v_j)
    v = rng.normal(size=(25, 2))
    ens = ParticleEnsemble(v)
    g = compute_drift(ens, IdentityKernel(2), SWAP)
    s = SWAP.scores(v)
    direct = np.zeros_like(v)
    for i in range(25):
        for j in range(25):
            direct[i] += (s[i] - s[j]) / 25.0
    assert np.abs(g - direct).max() < 1e-13


def test_galilean_shift_invariance(rng):
    # shifting all velocities (and the oracle mean) leaves the drift unchanged
    kernel = LandauKernel(1.0, 0.0, 2)
    v = rng.normal(size=(30, 2))
    shift = np.array([1.5, -2.0])
    base = compute_drift(
        ParticleEnsemble(v), kernel, AnalyticScore(Maxwellian(2), 0.0)
    )
    shifted = compute_drift(
        ParticleEnsemble(v + shift),
        kernel,
        AnalyticScore(Maxwellian(2, mean=shift), 0.0),
    )
    assert np.abs(base - shifted).max() < 1e-12


class TestMidpoint:
    kernel = LandauKernel(1.0 / 16.0, 0.0, 2)

    def test_zero_drift_converges_immediately(self, rng):
        ens = ParticleEnsemble(rng.normal(size=(12, 2)))
        const = LinearScore(np.zeros((2, 2)), offset=[1.0, 1.0])
        out = midpoint_step(ens, self.kernel, const, 0.1)
        assert np.array_equal(out.velocities, ens.velocities)

    def test_energy_and_momentum_conservation(self, rng):
        law = Bkw2d()
        ens = ParticleEnsemble(law.sample(200, rng, t=0.0))
        provider = AnalyticScore(law, 0.0)
        fp_tol = 1e-12
        out = midpoint_step(ens, self.kernel, provider, 0.05, fp_tol=fp_tol)
        e0 = (ens.velocities**2).sum(1).mean()
        e1 = (out.velocities**2).sum(1).mean()
        assert abs(e1 - e0) < 100 * fp_tol
        assert np.abs(out.velocities.mean(0) - ens.velocities.mean(0)).max() < 1e-14

    def test_nonconvergence_raises(self, rng):
        law = Bkw2d()
        ens = ParticleEnsemble(law.sample(50, rng, t=0.0))
        provider = AnalyticScore(law, 0.0)
        with pytest.raises(FixedPointNotConverged):
            midpoint_step(ens, self.kernel, provider, 0.05, fp_tol=1e-16,
                          fp_max_iters=2)


class TestEntropyEstimate:
    kernel = LandauKernel(1.0 / 16.0, 0.0, 2)

    def test_zero_score(self, rng):
        ens = ParticleEnsemble(rng.normal(size=(20, 2)))
        zero = LinearScore(np.zeros((2, 2)))
        assert entropy_decay_estimate(ens, self.kernel, zero) == 0.0

    def test_nonpositive(self, rng):
        for seed in range(5):
            v = np.random.default_rng(seed).normal(size=(60, 2))
            ens = ParticleEnsemble(v)
            est = entropy_decay_estimate(ens, self.kernel, SWAP)
            assert est <= 1e-12

    def test_matches_unsymmetrized_and_symmetrized_forms(self, rng):
        v = rng.normal(size=(40, 2))
        ens = ParticleEnsemble(v)
        est = entropy_decay_estimate(ens, self.kernel, SWAP)
        s = SWAP.scores(v)
        n = len(v)
        raw = 0.0
        sym = 0.0
        for i in range(n):
            for j in range(n):
                z = v[i] - v[j]
                A = self.kernel.eval_A(z)
                raw += s[i] @ A @ (s[i] - s[j])
                sym += 0.5 * (s[i] - s[j]) @ A @ (s[i] - s[j])
        assert abs(est - (-raw / n**2)) < 1e-10 * max(1.0, abs(raw / n**2))
        assert abs(est - (-sym / n**2)) < 1e-10 * max(1.0, abs(sym / n**2))
