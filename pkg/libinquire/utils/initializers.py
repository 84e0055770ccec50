import numpy as np


def truncated_normal(shape, rng, mean=0.0, scale=0.05):
    """Normal samples redrawn until they fall within two standard deviations."""
    total_num = int(np.prod(shape))
    array = rng.normal(mean, scale, total_num)
    outside = np.abs(array - mean) > 2 * scale
    while outside.any():
        array[outside] = rng.normal(mean, scale, int(outside.sum()))
        outside = np.abs(array - mean) > 2 * scale
    return array.reshape(*shape)


def xavier_init(fan_in, fan_out, rng):
    std = np.sqrt(2.0 / (fan_in + fan_out))
    return truncated_normal([fan_in, fan_out], rng, mean=0.0, scale=std)


def he_init(fan_in, fan_out, rng):
    std = np.sqrt(2.0 / fan_in)
    return truncated_normal([fan_in, fan_out], rng, mean=0.0, scale=std)


def uniform_ball_init(n_rows, dim, rng, low=-0.001, high=0.001):
    return rng.uniform(low, high, size=(n_rows, dim))
