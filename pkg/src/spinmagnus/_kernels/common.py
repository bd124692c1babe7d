"""Shared constants for the stepping kernels: method/rule codes, node sets."""

import numpy as np

EULER = 0
EULER_IMPLICIT = 1
TRAPEZOIDAL = 2
TRAPEZOIDAL_MID = 3
RK4 = 4
MAGNUS1 = 5
MAGNUS2 = 6

METHOD_CODES = {
    "euler": EULER,
    "euler_implicit": EULER_IMPLICIT,
    "trapezoidal": TRAPEZOIDAL,
    "trapezoidal_mid": TRAPEZOIDAL_MID,
    "rk4": RK4,
    "magnus1": MAGNUS1,
    "magnus2": MAGNUS2,
}

KIND_CONSTANT = 0
KIND_HOCP = 1

_GL3_OFF = np.sqrt(3.0 / 5.0) / 2.0

# Relative nodes in [0, 1] and weights summing to 1, per rule name.
RULE_NODES = {
    "initial": (np.array([0.0]), np.array([1.0])),
    "midpoint": (np.array([0.5]), np.array([1.0])),
    "gl3": (np.array([0.5, 0.5 + _GL3_OFF, 0.5 - _GL3_OFF]),
            np.array([4.0 / 9.0, 5.0 / 18.0, 5.0 / 18.0])),
}
