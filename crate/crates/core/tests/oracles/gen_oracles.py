"""Independent reference values for the Rust test-suite (mpmath, 60 digits).

Run: python3 gen_oracles.py
The printed values are frozen into the Rust tests; nothing here is used at
runtime.
"""
from mpmath import mp, mpf, quad, log, exp, pi, inf, binomial, factorial, zeta, gamma, diff, findroot, sqrt, e

mp.dps = 60


def F(z, terms=10):
    f = lambda t: log(t) ** z * t ** mpf(-0.75) * sum(exp(-pi * k * k * t) for k in range(1, terms + 1))
    return quad(f, [1, 1.5, 2, 3, 5, 10, 20, 50, 100, 200, 400, inf])


def gamma_coeff(M):
    # Taylor coefficient of xi(1/2 + z) in the gamma(M)/M! z^(2M) convention.
    return factorial(M) / factorial(2 * M) * (32 * binomial(2 * M, 2) * F(2 * M - 2) - F(2 * M)) / 2 ** (2 * M + 2)


def xi(s):
    return s * (s - 1) / 2 * pi ** (-s / 2) * gamma(s / 2) * zeta(s)


def L_of(M):
    return findroot(lambda L: L * (pi * exp(L) + mpf(3) / 4) - M, log(M))


if __name__ == "__main__":
    print("e^-1            ", mp.nstr(exp(-1), 50))
    print("int t^-3/4 e^-pi t", mp.nstr(quad(lambda t: t ** mpf(-0.75) * exp(-pi * t), [1, 2, 5, 20, inf]), 50))
    print("zeta(1/2)       ", mp.nstr(zeta(mpf(1) / 2), 50))
    print("Gamma(1/4)      ", mp.nstr(gamma(mpf(1) / 4), 50))
    print("xi(1/2)         ", mp.nstr(xi(mpf(1) / 2), 50))
    print("F(0)            ", mp.nstr(F(0), 50))
    print("F(2)            ", mp.nstr(F(2), 50))
    print("F(18)           ", mp.nstr(F(18), 50))
    for M in [1, 2, 3, 5, 10]:
        g = gamma_coeff(M)
        t = diff(lambda z: xi(mpf(1) / 2 + z), 0, 2 * M) / factorial(2 * M) * factorial(M)
        print("gamma(%d)" % M, mp.nstr(g, 40), "taylor:", mp.nstr(t, 40))
    print("L(2)            ", mp.nstr(L_of(2), 40))
    print("L(1e6)          ", mp.nstr(L_of(10 ** 6), 40))
