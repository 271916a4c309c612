"""Training loops for the score model.

The initial network fits the analytic score of f_0 down to a tolerance; every
later time step warm-starts from the previous network and applies a fixed
number of optimizer iterations to the implicit score-matching loss.
"""

import warnings

from .errors import InitialFitNotConverged

DEFAULT_INITIAL_CAP = 200_000


def train_initial(model, velocities, target_scores, tolerance, optimizer,
                  max_iters=DEFAULT_INITIAL_CAP, on_cap="raise"):
    """Optimize fit_loss until it is <= tolerance; returns the loss history.

    The loss is checked before each step, so a model that already meets the
    tolerance returns after zero optimizer steps.  Hitting ``max_iters`` with
    the loss above tolerance raises InitialFitNotConverged (``on_cap="raise"``)
    or emits it as a warning and returns (``on_cap="warn"``).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    history = []
    for _ in range(max_iters):
        loss, grad = model.fit_loss_grad(velocities, target_scores)
        history.append(loss)
        if loss <= tolerance:
            return history
        model.theta = optimizer.step(model.theta, grad)
    loss = model.fit_loss(velocities, target_scores)
    history.append(loss)
    if loss <= tolerance:
        return history
    msg = (
        f"initial score fit at {loss:.3e} > tolerance {tolerance:.3e} "
        f"after {max_iters} iterations"
    )
    if on_cap == "warn":
        warnings.warn(msg, InitialFitNotConverged)
        return history
    raise InitialFitNotConverged(msg)


def train_step_ism(model, velocities, max_iters, optimizer):
    """Exactly ``max_iters`` optimizer steps on the ISM loss; returns losses."""
    history = []
    for _ in range(max_iters):
        loss, grad = model.ism_loss_grad(velocities)
        history.append(loss)
        model.theta = optimizer.step(model.theta, grad)
    return history
