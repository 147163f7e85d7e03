#!/usr/bin/env python3
"""Regenerate sodium_quasipotential.csv from the closed-form slope.

Independent of the C++ code: fixed points by brentq on the averaged field,
phi by adaptive quadrature of Phi0'(x) = -N (a f - (a + b) g) / (g (f - g)).
"""
import json
import pathlib

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

HERE = pathlib.Path(__file__).resolve().parent
GRID = 65

cfg = json.loads((HERE.parent.parent / "models" / "sodium_channel.json").read_text())
P = cfg["params"]
lo, hi = cfg["domain"]


def alpha(x):
    return P["beta"] * np.exp(P["k_alpha"] * (x - P["v1"]) / P["v2"])


def f(x):
    return P["g_Na"] * (P["V_Na"] - x)


def g(x):
    return -P["g_L"] * (P["V_L"] - x) - P["I"]


def fbar(x):
    a, b = alpha(x), P["beta"]
    return a / (a + b) * f(x) - g(x)


def phi_prime(x):
    a, b = alpha(x), P["beta"]
    return -P["N"] * (a * f(x) - (a + b) * g(x)) / (g(x) * (f(x) - g(x)))


scan = np.linspace(lo, hi, 20001)
vals = fbar(scan)
roots = [brentq(fbar, scan[i], scan[i + 1], xtol=1e-15, rtol=1e-15)
         for i in range(len(scan) - 1) if vals[i] * vals[i + 1] < 0]
x_minus, x0 = roots[0], roots[1]

xs = np.linspace(x_minus, x0, GRID)
phi = [0.0]
for a, b in zip(xs[:-1], xs[1:]):
    phi.append(phi[-1] + quad(phi_prime, a, b, epsabs=1e-15, epsrel=1e-13)[0])

with open(HERE / "sodium_quasipotential.csv", "w", newline="\n") as out:
    out.write("x,phi\n")
    for x, v in zip(xs, phi):
        out.write(f"{x:.17g},{v:.17g}\n")
