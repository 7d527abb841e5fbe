"""Pure numpy implementation of the quadrature kernels.

Must stay numerically interchangeable with ``_ckernels.pyx``; the test-suite
compares the two whenever the compiled module is importable.
"""
import math

import numpy as np


def axisym_moments(r, theta, wtheta, s_perp, s_par, d):
    """Angular moments of an axially symmetric Gaussian at radii ``r``.

    Returns (A0, A2) with A_k(r) = 2 pi int rho(r, theta) P_k(cos theta) sin theta dtheta
    for rho the normalised Gaussian with transverse/axial standard deviations
    s_perp, s_par centred at distance d along the symmetry axis.
    """
    r = np.ascontiguousarray(r, dtype=float)
    theta = np.ascontiguousarray(theta, dtype=float)
    wtheta = np.ascontiguousarray(wtheta, dtype=float)
    norm = 1.0 / ((2 * math.pi) ** 1.5 * s_perp * s_perp * s_par)
    u = np.cos(theta)
    st = np.sin(theta)
    w = 2 * math.pi * norm * wtheta * st
    p2 = 1.5 * u * u - 0.5
    a = 0.5 / (s_perp * s_perp)
    b = 0.5 / (s_par * s_par)
    rs = r[:, None]
    expo = -a * (rs * st[None, :]) ** 2 - b * (rs * u[None, :] - d) ** 2
    rho = np.exp(expo)
    A0 = rho @ w
    A2 = rho @ (w * p2)
    return A0, A2
