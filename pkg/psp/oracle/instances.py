"""
Random benchmark instances for the three corpus examples.

Each generator maps (length, rng) to a binding whose trajectory has
`length` checked steps.
"""

from typing import Callable, Dict

import numpy as np

from psp.bindings import InputBinding


def obstacle_instance(length: int, rng: np.random.Generator) -> InputBinding:
    """
    Example 1: classifier posterior plus a smooth 2D trajectory.

    Waypoints stay in the positive quadrant so that pairwise leaf
    correlations under a diagonal-dominant covariance are mostly positive.
    """
    heading = rng.uniform(0.0, np.pi / 2)
    start = rng.uniform(0.5, 2.0, size=2)
    steps = np.arange(length)[:, None] * 0.1 * np.array([np.cos(heading), np.sin(heading)])
    x = start + steps + rng.normal(0.0, 0.02, size=(length, 2))
    mu = rng.normal([1.5, 0.5], 0.75)
    a = rng.normal(0.0, 0.4, size=(2, 2))
    sigma = a @ a.T + np.diag(rng.uniform(0.2, 1.0, size=2))
    return InputBinding({'x': x, 'Mu': mu, 'Sigma': sigma})


def battery_instance(length: int, rng: np.random.Generator) -> InputBinding:
    """
    Example 2: altitude profile and predicted log battery level.

    Arrays hold length + 3 entries so the outer loop runs `length` times.
    """
    size = length + 3
    height = rng.uniform(0.0, 100.0, size=size)
    drain = rng.uniform(0.002, 0.02)
    log_battery = 4.0 - drain * np.arange(size) + rng.normal(0.0, 0.01, size=size)
    return InputBinding({
        'height': height,
        'logbatteryLevel': log_battery,
        'variance': float(rng.uniform(1e-4, 1e-3)),
        'heightThresh': 50.0,
        'batteryThresh': float(rng.uniform(3.0, 3.6)),
    })


def collision_instance(length: int, rng: np.random.Generator) -> InputBinding:
    """Example 3: ego trajectory and the other vehicle's uncertain state"""
    time = np.arange(length, dtype=float) * 0.5
    speed = rng.uniform(1.0, 3.0)
    x = speed * time
    y = np.zeros(length)
    return InputBinding({
        'x': x,
        'y': y,
        'time': time,
        'mu_x': float(rng.uniform(10.0, 40.0)),
        'mu_y': float(rng.uniform(-6.0, 6.0)),
        'mu_sx': float(rng.uniform(-2.0, 1.0)),
        'mu_sy': float(rng.uniform(-0.5, 0.5)),
        'sigma_sq': float(rng.uniform(0.05, 0.5)),
        'Thresh': 1.5,
    })


GENERATORS: Dict[int, Callable[[int, np.random.Generator], InputBinding]] = {
    1: obstacle_instance,
    2: battery_instance,
    3: collision_instance,
}


def instance_rng(seed: int, example: int, length: int, param_set: int) -> np.random.Generator:
    """Stream for one (example, length, parameter set) cell of the benchmark grid"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(example, length, param_set)))


def make_instance(example: int, length: int, param_set: int, seed: int) -> InputBinding:
    if example not in GENERATORS:
        raise ValueError(f"unknown example {example}; choose from {sorted(GENERATORS)}")
    if length < 1:
        raise ValueError("trajectory length must be at least 1")
    return GENERATORS[example](length, instance_rng(seed, example, length, param_set))
