"""Mean-of-bin discrete gamma rates by direct quadrature.

Independent of the library path: quantiles come from bisection on a
quadrature CDF and bin means from quadrature of x * pdf(x).
"""
import math
import sys

from scipy import integrate


def pdf(x, alpha):
    # Gamma(shape=alpha, rate=alpha), mean one.
    if x <= 0.0:
        return 0.0
    return math.exp(alpha * math.log(alpha) + (alpha - 1.0) * math.log(x)
                    - alpha * x - math.lgamma(alpha))


def cdf(x, alpha):
    # substitute x = u^(1/alpha) to remove the singularity at zero
    upper = x ** alpha
    f = lambda u: math.exp(alpha * math.log(alpha) - alpha * u ** (1.0 / alpha)
                           - math.lgamma(alpha)) / alpha
    val, _ = integrate.quad(f, 0.0, upper, epsabs=1e-15, epsrel=1e-13, limit=500)
    return val


def quantile(p, alpha):
    lo, hi = 0.0, 1.0
    while cdf(hi, alpha) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid, alpha) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rates(alpha, count):
    cuts = [0.0] + [quantile(k / count, alpha) for k in range(1, count)] + [math.inf]
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m, _ = integrate.quad(lambda x: x * pdf(x, alpha), a, b,
                              epsabs=1e-15, epsrel=1e-13, limit=500)
        out.append(m * count)
    mean = sum(out) / count
    return [r / mean for r in out]


if __name__ == "__main__":
    for alpha, count in [(0.5, 4), (1.0, 4), (2.0, 3)]:
        print(alpha, count, " ".join(f"{r:.15e}" for r in rates(alpha, count)))
