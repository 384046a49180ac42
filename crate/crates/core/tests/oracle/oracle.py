"""Independent reference values for the test suite.

The double-sine values come from the convergent q-series when |Im x| is
large enough and from a tanh-sinh integral on a shifted line otherwise.
Contour integrals use scipy's adaptive quadrature on those values.
Writes ../fixtures/oracle.json.
"""
import json
import os

import mpmath as mp
import numpy as np
from scipy.integrate import quad

mp.mp.dps = 20


class Angle:
    def __init__(self, w):
        self.w = mp.mpf(w)
        w = self.w
        self.W = 1 + 1 / w
        self.kappa = mp.pi * 1j / 4 + mp.pi * 1j / 12 * (w + 1 / w)
        self.q = mp.exp(2j * mp.pi * w)
        self.Q = mp.exp(2j * mp.pi / w)

    def lsig(self, x):
        w = self.w
        return mp.pi * 1j * ((1 + w) * x - w * x * x)

    def series(self, x):
        w = self.w
        s = self.kappa
        k = 1
        while True:
            a = mp.exp(2j * mp.pi * w * k * x) / (k * (self.q ** k - 1))
            b = mp.exp(2j * mp.pi * k * x) / (k * (self.Q ** k - 1))
            s += a + b
            if abs(a) + abs(b) < mp.mpf(10) ** (-18) and k > 5:
                return s
            k += 1

    def line(self, x):
        # Valid for 0 < Re x < W.
        w, W = self.w, self.W
        v0 = mp.pi / 2 * min(1, w)
        f = lambda u: (lambda t: mp.exp((W - 2 * x) * t) / (t * mp.sinh(t) * mp.sinh(t / w)))(u - 1j * v0)
        return self.kappa - mp.quad(f, [-mp.inf, -5, 0, 5, mp.inf]) / 4

    def log(self, x):
        x = mp.mpc(x)
        w = self.w
        if x.imag >= 0.3:
            return self.series(x)
        if x.imag <= -0.3:
            return self.lsig(x) - self.series(self.W - x)
        acc = mp.mpc(0)
        step = 1 if w <= 1 else 1 / w
        c = self.W / 2
        while x.real > c + step / 2:
            x -= step
            acc -= mp.log(1 - mp.exp(2j * mp.pi * (w if step == 1 else 1) * x))
        while x.real < c - step / 2:
            acc += mp.log(1 - mp.exp(2j * mp.pi * (w if step == 1 else 1) * x))
            x += step
        return acc + self.line(x)

    def val(self, x):
        return complex(mp.exp(self.log(x)))


def cplx(z):
    return [float(z.real), float(z.imag)]


def vertical(A, log_integrand, rho):
    cache = {}

    def f(y):
        if y not in cache:
            z = mp.mpc(rho, y)
            cache[y] = complex(1j * mp.exp(log_integrand(z)))
        return cache[y]
    opts = dict(limit=800, epsabs=1e-15, epsrel=1e-12)
    re = quad(lambda y: f(y).real, -np.inf, np.inf, **opts)[0]
    im = quad(lambda y: f(y).imag, -np.inf, np.inf, **opts)[0]
    return complex(re, im)


def jp_log(A, alpha, gammas, gprimes):
    w = A.w

    def L(z):
        s = 2j * mp.pi * w * alpha * z
        for g in gprimes:
            s += A.log(z + g)
        for g in gammas:
            s -= A.log(z + g)
        return s
    return L


def main():
    out = {}
    r2 = mp.sqrt(2)
    moduli = {"inv_sqrt2": 1 / r2, "sqrt2": r2, "sqrt2_over_16": r2 / 16}
    points = {
        "inv_sqrt2": [(1, 0), (float(r2), 0), (0.37, 0.8), (1.5, -2.3), (0.2, 4.7),
                      (2.1, -0.5), (0.9, 0.1), (-1.3, 0.7), (3.7, 1.2), (1.1, -0.05)],
        "sqrt2": [(1, 0), (0.6, 0.4), (1.3, -1.7), (-0.4, 0.9)],
        "sqrt2_over_16": [(1, 0), (3.2, 0.6), (6.0, -0.2), (-2.5, 1.1)],
    }
    angles = []
    for name, w in moduli.items():
        A = Angle(w)
        for (re, im) in points[name]:
            v = A.val(mp.mpc(re, im))
            angles.append({"omega": name, "x": [re, im], "value": cplx(v)})
    out["angle"] = angles
    print("angles done", flush=True)

    A = Angle(1 / r2)
    W = A.W
    # q-Beta: t^alpha <z+W>/<z+beta>, kernel factor 1 (absorbed form).
    a, b = 0.4, 0.9
    qb = vertical(A, jp_log(A, a, [b], [W]), -0.45)
    print("qbeta done", flush=True)
    out["qbeta"] = {"alpha": a, "beta": b, "numeric": cplx(qb)}

    # Hypergeometric integral: exponent x, denominators alpha, beta, numerators W, gamma.
    al, be, ga, x = 0.4, 1.2, 1.3, 0.3
    raw = vertical(A, jp_log(A, x, [al, be], [W, ga]), -0.35)
    pref = A.val(al) * A.val(be) / (A.val(1) * A.val(ga))
    print("psi done", flush=True)
    out["psi"] = {"alpha": al, "beta": be, "gamma": ga, "x": x, "value": cplx(pref * raw)}

    # 2x2 pairing determinant, basis 1/(1-c'_j t), 1/(1-C'_k T).
    alpha, gam, gp = 0.5, [1.1, 1.6], [0.5, 0.8]
    m = np.zeros((2, 2), dtype=complex)
    for j in range(2):
        for k in range(2):
            g = list(gp)
            g[j] = g[j] + 1
            g[k] = g[k] + 1 / A.w
            g = [float(v) for v in g]
            m[j, k] = vertical(A, jp_log(A, alpha, gam, g), -0.95)
    out["det2"] = {"alpha": alpha, "gammas": gam, "gamma_primes": gp,
                   "matrix": [[cplx(m[j, k]) for k in range(2)] for j in range(2)],
                   "det": cplx(np.linalg.det(m))}

    path = os.path.join(os.path.dirname(__file__), "..", "fixtures", "oracle.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
