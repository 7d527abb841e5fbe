"""Polynomial (Bargmann-space) representation of oscillator states.

A state is a polynomial in spherical creation operators b_{+1}, b_0, b_{-1}
acting on the vacuum.  Because these are independent bosons the inner
product of two polynomials is sum_alpha conj(c_alpha) d_alpha alpha!.

|n l m> = (-1)^n N (b.b)^n Y_lm(b) |0>, where Y_lm(b) is the solid harmonic
and b.b = b_0^2 - 2 b_{+1} b_{-1}.  The (-1)^n factor makes the radial wave
function positive at the origin.
"""
from __future__ import annotations

import math
from collections import defaultdict
from functools import lru_cache

Poly = dict  # exponent tuple -> float

_SQ2 = math.sqrt(2.0)


def _fact_prod(expo) -> float:
    out = 1.0
    for e in expo:
        out *= math.factorial(e)
    return out


def inner(a: Poly, b: Poly) -> float:
    if len(a) > len(b):
        a, b = b, a
    s = 0.0
    for k, v in a.items():
        w = b.get(k)
        if w is not None:
            s += v * w * _fact_prod(k)
    return s


def mul(a: Poly, b: Poly) -> Poly:
    out = defaultdict(float)
    for ka, va in a.items():
        for kb, vb in b.items():
            out[tuple(x + y for x, y in zip(ka, kb))] += va * vb
    return dict(out)


def _solid_harmonic(l: int, m: int) -> Poly:
    # exponents ordered (+1, 0, -1)
    out = {}
    for q in range(0, l + 1):
        p = q + m
        s = l - p - q
        if p < 0 or s < 0:
            continue
        out[(p, s, q)] = 1.0 / (_SQ2 ** (p + q) * math.factorial(p) * math.factorial(q) * math.factorial(s))
    return out


_BDOTB = {(0, 2, 0): 1.0, (1, 0, 1): -2.0}


@lru_cache(maxsize=None)
def single(n: int, l: int, m: int) -> tuple:
    """Normalised |n l m> as a frozen polynomial (tuple of items)."""
    p = _solid_harmonic(l, m)
    for _ in range(n):
        p = mul(p, _BDOTB)
    norm = math.sqrt(inner(p, p))
    sign = -1.0 if n % 2 else 1.0
    return tuple((k, sign * v / norm) for k, v in p.items())


def product(s1: tuple, s2: tuple) -> Poly:
    """Two-particle polynomial from single-particle polynomials (6 exponents)."""
    out = defaultdict(float)
    for k1, v1 in s1:
        for k2, v2 in s2:
            out[k1 + k2] += v1 * v2
    return dict(out)


@lru_cache(maxsize=None)
def _mix(a: int, b: int) -> tuple:
    """(C + r)^a (C - r)^b / sqrt2^(a+b) as ((rel_power, coeff), ...)."""
    coeffs = defaultdict(float)
    for i in range(a + 1):
        for j in range(b + 1):
            coeffs[i + j] += math.comb(a, i) * math.comb(b, j) * (-1) ** j
    scale = _SQ2 ** -(a + b)
    return tuple((k, v * scale) for k, v in coeffs.items() if v != 0)


def to_rel_cm(p: Poly) -> Poly:
    """Substitute b1 = (B + b)/sqrt2, b2 = (B - b)/sqrt2 componentwise.

    Output exponents are ordered (rel +1, rel 0, rel -1, cm +1, cm 0, cm -1)
    with rel the coordinate (r1 - r2)/sqrt2 and cm (r1 + r2)/sqrt2.
    """
    out = defaultdict(float)
    for k, v in p.items():
        parts = [_mix(k[c], k[c + 3]) for c in range(3)]
        tot = (k[0] + k[3], k[1] + k[4], k[2] + k[5])
        for r0, c0 in parts[0]:
            for r1, c1 in parts[1]:
                for r2, c2 in parts[2]:
                    out[(r0, r1, r2, tot[0] - r0, tot[1] - r1, tot[2] - r2)] += v * c0 * c1 * c2
    return dict(out)
