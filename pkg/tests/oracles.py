"""Independent reference computations used only by the tests.

None of these call into the library's exp/log/differential code.
"""
import math

import numpy as np


def expm_series(a, terms=20):
    """Truncated power series sum_k a^k / k! (use on small-norm inputs)."""
    a = np.asarray(a)
    out = np.eye(a.shape[0], dtype=a.dtype)
    term = np.eye(a.shape[0], dtype=a.dtype)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out


def expm_series_scaled(a, terms=20, squarings=6):
    """Series on a / 2^s followed by s squarings; accurate for moderate norms."""
    e = expm_series(np.asarray(a) / 2**squarings, terms)
    for _ in range(squarings):
        e = e @ e
    return e


def rot_x(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def rot_z(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0], [0, 0, 1]])


def skew3(a, b, c):
    return np.array([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]])


def vee3(a):
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def dexp_left_series(u, w, terms=20):
    """sum_{k=0}^{terms} (-ad_u)^k w / (k+1)! for so(3) rotation vectors, via cross products."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(3)
    term = np.asarray(w, dtype=float)
    for k in range(terms + 1):
        out = out + term / math.factorial(k + 1)
        term = -np.cross(u, term)
    return out


def central_diff(f, x, v, h):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (np.asarray(f(x + h * v)) - np.asarray(f(x - h * v))) / (2 * h)
