"""Reference computations written independently of the package."""

import math
from fractions import Fraction

from scipy.integrate import quad

def oracle_ranks(values):
    """Rank = 1 + #smaller + (#equal - 1) / 2, computed exactly."""
    return [Fraction(1 + sum(w < v for w in values)) + Fraction(sum(w == v for w in values) - 1, 2) for v in values]


def oracle_spearman(x, y):
    rx, ry = oracle_ranks(x), oracle_ranks(y)
    n = len(x)
    mx, my = sum(rx) / n, sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return float(cov) / math.sqrt(float(vx) * float(vy))


def classic(x, y):
    rx, ry = oracle_ranks(x), oracle_ranks(y)
    n = len(x)
    d2 = sum((a - b) ** 2 for a, b in zip(rx, ry))
    return float(1 - Fraction(6) * d2 / (n * (n * n - 1)))


def t_pdf(t, df):
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    return c * (1 + t * t / df) ** (-(df + 1) / 2)


def integrated_p(rho, n):
    t = abs(rho) * math.sqrt((n - 2) / (1 - rho * rho))
    tail, _ = quad(t_pdf, t, math.inf, args=(n - 2,), epsabs=1e-14, epsrel=1e-12)
    return 2 * tail
