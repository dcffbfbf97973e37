"""Coefficient table for the Clausen series, computed exactly once."""

from fractions import Fraction
from math import comb, factorial

NTERMS = 30


def bernoulli(n: int) -> list[Fraction]:
    """B_0..B_n (B_1 = -1/2) from the standard recurrence."""
    B = [Fraction(0)] * (n + 1)
    B[0] = Fraction(1)
    for m in range(1, n + 1):
        B[m] = -sum(comb(m + 1, j) * B[j] for j in range(m)) / (m + 1)
    return B


def clausen_coefficients(nterms: int = NTERMS) -> list[float]:
    """c_k = |B_2k| / (2k (2k+1)!) for k = 1..nterms."""
    B = bernoulli(2 * nterms)
    return [float(abs(B[2 * k]) / (2 * k * factorial(2 * k + 1))) for k in range(1, nterms + 1)]


COEFFICIENTS = tuple(clausen_coefficients())
