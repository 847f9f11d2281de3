"""Exact integer oracles: gcd, modular powers, orders, continued fractions.

Everything here is plain Python integer arithmetic, so results never
overflow. ``multiplicative_order`` is a deliberate brute-force scan; it is
the ground truth the quantum pipeline is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


class DomainError(ValueError):
    """Raised when an argument falls outside an operation's domain."""


def gcd(a: int, b: int) -> int:
    if a < 0 or b < 0:
        raise DomainError(f"gcd expects non-negative integers, got ({a}, {b})")
    if a == 0 and b == 0:
        raise DomainError("gcd(0, 0) is undefined")
    while b:
        a, b = b, a % b
    return a


def mod_pow(a: int, e: int, N: int) -> int:
    """Return ``a**e mod N`` by left-to-right square-and-multiply."""
    if e < 0:
        raise DomainError(f"exponent must be non-negative, got {e}")
    if N < 2:
        raise DomainError(f"modulus must be >= 2, got {N}")
    result = 1
    base = a % N
    for bit in bin(e)[2:]:
        result = result * result % N
        if bit == "1":
            result = result * base % N
    return result


def multiplicative_order(A: int, N: int) -> int:
    """Smallest r >= 1 with A**r = 1 (mod N), found by repeated multiplication."""
    if N < 2:
        raise DomainError(f"modulus must be >= 2, got {N}")
    A %= N
    if math.gcd(A, N) != 1:
        raise DomainError(f"{A} is not coprime to {N}")
    r, x = 1, A
    while x != 1 % N:
        x = x * A % N
        r += 1
    return r


@dataclass(frozen=True)
class ModMulParams:
    """A modular-multiplication instance: modulus N, multiplier A, register width L.

    ``exact_modulus=True`` admits the test-only modulus N = 2**L, for which
    every reset phase vanishes and the DFT circuit is exact.
    """

    N: int
    A: int
    L: int
    exact_modulus: bool = False

    def __post_init__(self) -> None:
        N, A, L = self.N, self.A, self.L
        if self.exact_modulus:
            if N != 1 << L:
                raise DomainError(f"exact_modulus requires N == 2**L, got N={N}, L={L}")
        else:
            if N < 3 or N % 2 == 0:
                raise DomainError(f"modulus must be odd and >= 3, got {N}")
            if L < N.bit_length():
                raise DomainError(f"L={L} cannot hold N={N}; need L >= {N.bit_length()}")
        if A % 2 == 0 or not 1 <= A < 2 * N:
            raise DomainError(f"multiplier must be odd with 1 <= A < 2N, got A={A}")
        if math.gcd(A, N) != 1:
            raise DomainError(f"multiplier {A} not coprime to modulus {N}")

    @classmethod
    def minimal(cls, N: int, A: int) -> "ModMulParams":
        """Params with the smallest register width that holds N."""
        return cls(N, A, N.bit_length())

    @classmethod
    def power_of_two(cls, L: int, A: int) -> "ModMulParams":
        return cls(1 << L, A, L, exact_modulus=True)


def modmul_permutation(params: ModMulParams, m: int) -> int:
    if not 0 <= m < params.N:
        raise DomainError(f"m must lie in [0, {params.N}), got {m}")
    return params.A * m % params.N


@dataclass(frozen=True)
class Convergent:
    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        if self.denominator <= 0 or self.numerator < 0:
            raise DomainError(f"invalid convergent {self.numerator}/{self.denominator}")

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


def partial_quotients(y: int, Q: int) -> list[int]:
    quotients = []
    while Q:
        a, rem = divmod(y, Q)
        quotients.append(a)
        y, Q = Q, rem
    return quotients


def continued_fraction_convergents(y: int, Q: int, r_max: int) -> list[Convergent]:
    """Candidate fractions p/q approximating y/Q, with q <= r_max.

    Returns the convergents together with the intermediate fractions
    (semiconvergents) lying between consecutive convergents, ordered by
    strictly increasing denominator. Where two candidates share a
    denominator only the closer one is kept.
    """
    if Q <= 0 or r_max <= 0:
        raise DomainError("Q and r_max must be positive")
    if not 0 <= y < Q:
        raise DomainError(f"y must lie in [0, {Q}), got {y}")
    if y == 0:
        return [Convergent(0, 1)]

    target = Fraction(y, Q)
    out: list[Convergent] = []

    def push(p: int, q: int) -> None:
        if q > r_max:
            return
        if out and out[-1].denominator == q:
            if abs(Fraction(p, q) - target) < abs(out[-1].as_fraction() - target):
                out[-1] = Convergent(p, q)
            return
        out.append(Convergent(p, q))

    p_prev, q_prev = 0, 1
    p_cur, q_cur = 1, 0
    for k, a in enumerate(partial_quotients(y, Q)):
        # semiconvergents (p_prev + j*p_cur)/(q_prev + j*q_cur) for 0 < j < a
        if k > 0:
            for j in range(1, a):
                push(p_prev + j * p_cur, q_prev + j * q_cur)
        p_prev, q_prev, p_cur, q_cur = p_cur, q_cur, a * p_cur + p_prev, a * q_cur + q_prev
        if q_cur > r_max:
            break
        push(p_cur, q_cur)
    return out


def canonical_odd_multiplier(A_raw: int, N: int) -> int:
    """Odd representative of ``A_raw mod N``: the residue itself, or residue + N."""
    if N < 3 or N % 2 == 0:
        raise DomainError(f"modulus must be odd and >= 3, got {N}")
    a = A_raw % N
    if a == 0 or math.gcd(a, N) != 1:
        raise DomainError(f"multiplier {A_raw} not coprime to {N}")
    return a if a % 2 else a + N


def order_from_convergents(A: int, N: int, candidates: list[Convergent]) -> int | None:
    """Smallest candidate denominator q with A**q = 1 (mod N), if any."""
    for c in candidates:
        if mod_pow(A, c.denominator, N) == 1:
            return c.denominator
    return None


def factors_from_order(A: int, r: int, N: int) -> tuple[int, int] | None:
    """Nontrivial split of N from gcd(A**(r/2) +- 1, N), or None."""
    if r % 2:
        return None
    half = mod_pow(A, r // 2, N)
    if half == N - 1:
        return None
    for d in (math.gcd(half - 1, N), math.gcd(half + 1, N)):
        if 1 < d < N:
            return tuple(sorted((d, N // d)))
    return None
