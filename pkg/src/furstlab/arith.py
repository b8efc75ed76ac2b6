"""Small integer number theory helpers: factoring, totients, orders, roots."""
from __future__ import annotations

from functools import lru_cache
from math import gcd

TRIAL_DIVISION_LIMIT = 10 ** 12


@lru_cache(maxsize=4096)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    out = []
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    f = 5
    while f * f <= n:
        for p in (f, f + 2):
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                out.append((p, e))
        f += 6
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division (n <= 10**12)."""
    if n < 1:
        raise ValueError("can only factor positive integers")
    if n > TRIAL_DIVISION_LIMIT:
        raise ValueError(f"{n} exceeds the trial-division limit")
    return dict(_factor(n))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def totient(n: int) -> int:
    result = n
    for p in factorize(n):
        result -= result // p
    return result


def multiplicative_order(a: int, m: int) -> int:
    """Order of a modulo m; requires gcd(a, m) = 1. Returns 1 for m = 1."""
    if m == 1:
        return 1
    if gcd(a, m) != 1:
        raise ValueError(f"{a} is not invertible mod {m}")
    order = totient(m)
    for p in factorize(order):
        while order % p == 0 and pow(a, order // p, m) == 1:
            order //= p
    return order


def iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 0:
        raise ValueError("iroot of a negative number")
    if n < 2 or k == 1:
        return n
    x = 1 << -(-n.bit_length() // k)  # upper bound
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def valuation(n: int, p: int) -> int | None:
    """Exact p-adic valuation of a nonzero integer; None for zero."""
    if n == 0:
        return None
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def crt(residues: list[int], moduli: list[int]) -> int:
    x, m = 0, 1
    for r, n in zip(residues, moduli):
        if gcd(m, n) != 1:
            raise ValueError("moduli must be pairwise coprime")
        t = (r - x) * pow(m, -1, n) % n
        x += m * t
        m *= n
    return x % m
