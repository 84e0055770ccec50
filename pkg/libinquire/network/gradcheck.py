import logging
from collections import namedtuple
import numpy as np
from .layers import LeakyReLU

logger = logging.getLogger(__name__)

GradCheckResult = namedtuple("GradCheckResult", ["max_error", "checked", "skipped"])


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def _kink_pattern(net):
    return [l.last_input > 0 for l in net.layers if isinstance(l, LeakyReLU)]


def _same_pattern(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def grad_check(net, batch, tolerance=1e-4, h=1e-4, weights=None, seed=0):
    """
    Compare backward() with central finite differences on L = sum(weights * net(batch)).

    The network is evaluated in eval mode.  Coordinates whose perturbation
    moves any leaky-relu input across zero are skipped, since the loss is not
    differentiable there.

    :return: GradCheckResult(max_error, checked, skipped)
    """
    net.eval()
    batch = np.asarray(batch, dtype=np.float64)
    out = net.forward(batch, training=False)
    if weights is None:
        weights = np.random.RandomState(seed).normal(size=out.shape)

    def loss():
        return float(np.sum(net.forward(batch, training=False) * weights))

    net.forward(batch, training=False)
    base = _kink_pattern(net)
    net.backward(weights)
    analytic = [g.copy() for g in net.grads()]

    max_error, checked, skipped = 0.0, 0, 0
    for param, grad in zip(net.params(), analytic):
        for idx in np.ndindex(*param.shape):
            old = param[idx]
            param[idx] = old + h
            loss_plus = loss()
            crossed = not _same_pattern(base, _kink_pattern(net))
            param[idx] = old - h
            loss_minus = loss()
            crossed = crossed or not _same_pattern(base, _kink_pattern(net))
            param[idx] = old
            if crossed:
                skipped += 1
                continue
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            max_error = max(max_error, relative_error(grad[idx], numeric))
            checked += 1

    if skipped:
        logger.warning("grad check skipped %d coordinates at activation kinks", skipped)
    if max_error > tolerance:
        logger.warning("grad check max relative error %.3e exceeds tolerance %.1e",
                       max_error, tolerance)
    return GradCheckResult(max_error, checked, skipped)
