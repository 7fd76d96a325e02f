"""Frozen reference values for the Lerch evaluation tests.

Values are computed with mpmath at 40 significant digits, using the exact
binary values of the double inputs. Lerch values come from mpmath's
``lerchphi`` and are cross-checked against the Hurwitz decomposition
L(s; a, p/q) = q^{-s} sum_r e(pr/q) zeta(s, (r+a)/q) before writing.

Run from this directory:  python3 generate.py > ../data/oracle.json
"""

import json
import random

from mpmath import mp, mpf, mpc, exp, pi, zeta, lerchphi, diff

mp.dps = 40


def lerch(s, a, lam):
    if lam == 1:
        return zeta(s, a)
    return lerchphi(exp(2j * pi * lam), s, a)


def pair(z):
    z = mpc(z)
    return [float(z.real), float(z.imag)]


def point(rng, sigmas, tmax):
    while True:
        sigma = rng.choice(sigmas) if isinstance(sigmas, list) else rng.uniform(*sigmas)
        t = rng.uniform(-tmax, tmax)
        if abs(complex(sigma - 1, t)) > 0.1:
            return sigma, t


def check_decomposition():
    a = 1 / mp.pi
    for s in [mpc(0.75, 2), mpc(0.3, -17), mpc(1.5, 29)]:
        direct = lerchphi(exp(2j * pi * mpf(1) / 3), s, a)
        split = sum(exp(2j * pi * mpf(r) / 3) * mpf(3) ** (-s) * zeta(s, (r + a) / 3) for r in range(3))
        assert abs(direct - split) < mpf(10) ** -30, (s, direct, split)


def main():
    check_decomposition()
    rng = random.Random(20240611)
    inv_pi = float(1 / mp.pi)
    out = {"alpha_inv_pi": inv_pi}

    identity = []
    for _ in range(50):
        sigma, t = point(rng, [0.55, 0.75, 1.5, 2.0], 30.0)
        s = mpc(sigma, t)
        z = zeta(s)
        identity.append({
            "sigma": sigma, "t": t,
            "zeta": pair(z),
            "eta": pair((1 - mpf(2) ** (1 - s)) * z),
            "hurwitz_inv_pi": pair(zeta(s, mpf(inv_pi))),
            "hurwitz_0_3": pair(zeta(s, mpf(0.3))),
        })
    out["identity"] = identity

    overlap = []
    for i in range(200):
        sigma = rng.uniform(1.05, 3.0)
        t = rng.uniform(-30.0, 30.0)
        alpha = rng.uniform(0.05, 1.0)
        lam = 1.0 if i % 10 == 0 else rng.uniform(0.05, 1.0)
        overlap.append({
            "sigma": sigma, "t": t, "alpha": alpha, "lambda": lam,
            "value": pair(lerch(mpc(sigma, t), mpf(alpha), mpf(lam))),
        })
    out["overlap"] = overlap

    strip = []
    for i in range(120):
        sigma, t = point(rng, (0.05, 3.0), 40.0)
        alpha = rng.choice([1.0, inv_pi, 0.3, rng.uniform(0.02, 1.0)])
        lam = rng.choice([1.0, 0.5, 1.0 / 3.0, 2.0 / 3.0, rng.uniform(0.02, 0.98)])
        strip.append({
            "sigma": sigma, "t": t, "alpha": alpha, "lambda": lam,
            "value": pair(lerch(mpc(sigma, t), mpf(alpha), mpf(lam))),
        })
    out["strip"] = strip

    derivs = []
    for i in range(24):
        sigma, t = point(rng, (0.55, 0.95), 30.0)
        alpha = rng.choice([1.0, inv_pi, 0.3])
        lam = rng.choice([1.0, 0.5, 1.0 / 3.0, rng.uniform(0.05, 0.95)])
        k = 1 + i % 2
        f = lambda s: lerch(s, mpf(alpha), mpf(lam))
        derivs.append({
            "sigma": sigma, "t": t, "alpha": alpha, "lambda": lam, "k": k,
            "value": pair(diff(f, mpc(sigma, t), k)),
        })
    out["derivatives"] = derivs

    s2 = mpf(2)
    eta = lambda s: (1 - mpf(2) ** (1 - s)) * zeta(s)
    out["examples"] = {
        "zeta_0_75": float(zeta(mpf(0.75))),
        "lerch_0_75_2i_inv_pi_third": pair(lerch(mpc(0.75, 2), mpf(inv_pi), mpf(1.0 / 3.0))),
        "zeta_prime_2": float(zeta(s2, 1, 1)),
        "eta_prime_2": float(diff(eta, s2)),
    }
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
