import math

import numpy as np
import pytest

from scorelandau.diagnostics import MeshSpec
from scorelandau.errors import DegenerateReference, ModelDiverged
from scorelandau.providers import AnalyticScore, BlobScore, LearnedScore, LinearScore
from scorelandau.score import (
    MlpArchitecture,
    ScoreModel,
    initial_fit_loss,
    ism_loss,
)
from scorelandau.solutions import Bkw2d, Maxwellian


def radial_constant_model(dim, value):
    """Radial score model with h identically equal to value, so s(v) = value * v."""
    arch = MlpArchitecture(input_dim=dim, hidden_layers=2, hidden_width=4,
                           radial=True)
    model = ScoreModel(arch, theta=np.zeros(ScoreModel(arch).n_params))
    model.net.biases(arch.hidden_layers)[:] = value
    return model


def test_radial_score_vanishes_at_origin(rng):
    arch = MlpArchitecture(input_dim=3, hidden_layers=2, hidden_width=8,
                           radial=True)
    model = ScoreModel(arch, rng=rng)
    assert np.allclose(model.scores(np.zeros((1, 3))), 0.0)


def test_radial_score_parallel_to_v(rng):
    arch = MlpArchitecture(input_dim=2, hidden_layers=2, hidden_width=8,
                           radial=True)
    model = ScoreModel(arch, rng=rng)
    v = rng.normal(size=(40, 2))
    s = model.scores(v)
    cross = s[:, 0] * v[:, 1] - s[:, 1] * v[:, 0]
    assert np.abs(cross).max() < 1e-12 * np.abs(s).max() * np.abs(v).max()


def test_analytic_bkw2d_score_value():
    # K = 3/4 at t = 8 ln 2; score((1,0)) = (-5/6, 0)
    law = Bkw2d()
    t = 8.0 * math.log(2.0)
    assert abs(law.K(t) - 0.75) < 1e-15
    provider = AnalyticScore(law, t)
    s = provider.scores(np.array([[1.0, 0.0]]))
    assert np.allclose(s, [[-5.0 / 6.0, 0.0]], atol=1e-12)


def test_blob_single_particle_gaussian_score():
    # one particle at the origin: the mollified-entropy score is -v/eps^2
    eps = 0.5
    mesh = MeshSpec(6.0, 96, 2)
    blob = BlobScore(eps, mesh, velocities=np.zeros((1, 2)))
    pts = np.array([[0.3, -0.4], [1.0, 0.2], [0.0, 0.9]])
    s = blob.scores(pts)
    assert np.abs(s - (-pts / eps**2)).max() < 1e-10
    jac = blob.jacobians(pts)
    assert np.abs(jac - (-np.eye(2) / eps**2)).max() < 1e-8
    # shifted particle: score is -(v - v1)/eps^2
    v1 = np.array([0.4, -0.3])
    blob.fit(v1[None, :])
    s = blob.scores(pts)
    assert np.abs(s - (-(pts - v1) / eps**2)).max() < 1e-10


def test_blob_jacobian_matches_finite_differences(rng):
    eps = 0.4
    mesh = MeshSpec(5.0, 64, 2)
    v = rng.normal(size=(30, 2))
    blob = BlobScore(eps, mesh, velocities=v)
    x = rng.normal(size=(5, 2)) * 0.7
    jac = blob.jacobians(x)
    h = 1e-5
    for t in range(2):
        e = np.zeros(2)
        e[t] = h
        fd = (blob.scores(x + e) - blob.scores(x - e)) / (2 * h)
        assert np.abs(jac[:, :, t] - fd).max() <= 1e-5 * max(1.0, np.abs(fd).max())


def test_linear_model_jacobian_and_divergence():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    provider = LinearScore(m)
    v = np.array([[0.3, 0.7], [-1.0, 2.0]])
    assert np.allclose(provider.scores(v), v @ m.T)
    assert np.allclose(provider.jacobians(v), m)
    # s(v) = (v2, v1) has zero divergence
    assert np.allclose(provider.divergences(v), 0.0)
    # s(v) = v in 3D has divergence 3
    eye = LinearScore(np.eye(3))
    assert np.allclose(eye.divergences(np.zeros((4, 3))), 3.0)


def test_radial_constant_jacobian_is_c_times_identity(rng):
    model = radial_constant_model(2, 0.8)
    v = rng.normal(size=(9, 2))
    assert np.allclose(model.jacobians(v), 0.8 * np.eye(2), atol=1e-13)


@pytest.mark.parametrize("radial,residual", [(False, False), (False, True),
                                             (True, False)])
def test_learned_jacobian_matches_finite_differences(rng, radial, residual):
    arch = MlpArchitecture(input_dim=2, hidden_layers=2, hidden_width=8,
                           radial=radial, residual=residual)
    model = ScoreModel(arch, rng=rng)
    v = rng.normal(size=(11, 2))
    jac = model.jacobians(v)
    h = 1e-5
    for t in range(2):
        e = np.zeros(2)
        e[t] = h
        fd = (model.scores(v + e) - model.scores(v - e)) / (2 * h)
        assert np.abs(jac[:, :, t] - fd).max() <= 1e-5 * max(1.0, np.abs(fd).max())


def test_divergence_equals_jacobian_trace(rng):
    arch = MlpArchitecture(input_dim=3, hidden_layers=2, hidden_width=8)
    model = ScoreModel(arch, rng=rng)
    v = rng.normal(size=(17, 3))
    div = model.divergences(v)
    tr = np.trace(model.jacobians(v), axis1=1, axis2=2)
    assert np.abs(div - tr).max() <= 1e-12


def test_ism_loss_zero_model():
    arch = MlpArchitecture(input_dim=2, hidden_layers=2, hidden_width=4)
    model = ScoreModel(arch, theta=np.zeros(ScoreModel(arch).n_params))
    v = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert model.ism_loss(v) == 0.0
    assert ism_loss(LearnedScore(model), v) == 0.0


def test_ism_loss_hand_value():
    # s(v) = v on {(1,0), (0,2)}: mean(|v|^2 + 2 d) = ((1+4) + (4+4))/2 = 6.5
    model = radial_constant_model(2, 1.0)
    v = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert abs(model.ism_loss(v) - 6.5) < 1e-12
    assert abs(ism_loss(LearnedScore(model), v) - 6.5) < 1e-12


def test_ism_loss_gaussian_minimizer(rng):
    # over linear scores s = a v the loss is a^2 mean|v|^2 + 2 a d, so the
    # minimizer on standard-normal samples converges to a = -1
    n, d = 100_000, 2
    v = rng.standard_normal((n, d))
    losses = {}
    for a in (-1.5, -1.0, -0.5):
        losses[a] = radial_constant_model(d, a).ism_loss(v)
    # quadratic vertex from three points
    aa = np.array(sorted(losses))
    yy = np.array([losses[a] for a in aa])
    coef = np.polyfit(aa, yy, 2)
    vertex = -coef[1] / (2 * coef[0])
    assert abs(vertex + 1.0) < 5.0 * math.sqrt(2.0 * d / n) / d


def test_initial_fit_loss_examples(rng):
    law = Maxwellian(2)
    v = rng.normal(size=(50, 2))
    ref = lambda x: law.score(0.0, x)
    exact = AnalyticScore(law, 0.0)
    assert initial_fit_loss(exact, v, ref) == 0.0
    zero = LinearScore(np.zeros((2, 2)))
    assert abs(initial_fit_loss(zero, v, ref) - 1.0) < 1e-14
    double = LinearScore(-2.0 * np.eye(2))  # s = 2 * (-v) = 2 g
    assert abs(initial_fit_loss(double, v, ref) - 1.0) < 1e-12
    with pytest.raises(DegenerateReference):
        initial_fit_loss(zero, v, lambda x: np.zeros_like(x))


def test_checkpoint_roundtrip(tmp_path, rng):
    arch = MlpArchitecture(input_dim=2, hidden_layers=2, hidden_width=8,
                           radial=True, residual=True)
    model = ScoreModel(arch, rng=rng)
    path = tmp_path / "ckpt.json"
    model.save(path)
    clone = ScoreModel.load(path)
    v = rng.normal(size=(6, 2))
    assert np.array_equal(clone.scores(v), model.scores(v))
    assert clone.arch == model.arch
    # tampered parameter count is rejected
    import json

    payload = json.loads(path.read_text())
    payload["theta"] = payload["theta"][:-1]
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError):
        ScoreModel.load(path)


def test_model_diverged_propagates(rng):
    arch = MlpArchitecture(input_dim=2, hidden_layers=1, hidden_width=4)
    model = ScoreModel(arch, rng=rng)
    model.net.theta[0] = np.inf
    with pytest.raises(ModelDiverged):
        model.scores(np.zeros((1, 2)))
