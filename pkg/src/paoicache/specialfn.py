"""Real-argument special functions used by the PAoI formulas.

Only the domains that the interference integrals actually hit are
covered: positive Beta arguments and the Gauss hypergeometric function
on the non-positive real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Argument outside the supported domain."""


class SeriesConvergenceError(ArithmeticError):
    """A power series did not reach the requested tolerance."""

    def __init__(self, message: str, partial_sum: float, terms: int):
        super().__init__(f"{message} (partial sum {partial_sum!r} after {terms} terms)")
        self.partial_sum = partial_sum
        self.terms = terms


@dataclass(frozen=True)
class SeriesControl:
    """Truncation rule shared by every infinite series in the package."""

    rel_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1e-3:
            raise DomainError(f"rel_tol must lie in (0, 1e-3), got {self.rel_tol}")
        if self.max_terms < 50:
            raise DomainError(f"max_terms must be >= 50, got {self.max_terms}")


DEFAULT_CONTROL = SeriesControl()


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def beta(a: float, b: float) -> float:
    """Euler Beta function B(a, b), evaluated through log-gamma."""
    if not (a > 0 and b > 0):
        raise DomainError(f"beta needs a > 0 and b > 0, got a={a}, b={b}")
    if a > b:
        a, b = b, a  # makes beta(a, b) == beta(b, a) bit for bit
    return math.exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b))


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _hyp_series(a: float, b: float, c: float, z: float, control: SeriesControl) -> float:
    total = 1.0
    term = 1.0
    for k in range(control.max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= control.rel_tol * abs(total):
            # one more term must also be small, guards against a lucky cancellation
            nxt = term * (a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2)) * z
            if abs(nxt) <= control.rel_tol * abs(total):
                return total
    raise SeriesConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) series not converged", total, control.max_terms
    )


def _pfaff(a: float, b: float, c: float, z: float, control: SeriesControl) -> float:
    # 2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1))
    w = z / (z - 1.0)
    return (1.0 - z) ** (-a) * _hyp_series(a, c - b, c, w, control)


def _signed_lgamma(x: float) -> tuple[float, float]:
    """(ln|Gamma(x)|, sign Gamma(x)) for x not a non-positive integer."""
    if x > 0:
        return math.lgamma(x), 1.0
    return math.lgamma(x), -1.0 if math.floor(-x) % 2 == 0 else 1.0


def _gamma_ratio(num: tuple[float, float], den: tuple[float, float]) -> float:
    log_value = 0.0
    sign = 1.0
    for x in num:
        lg, sg = _signed_lgamma(x)
        log_value += lg
        sign *= sg
    for x in den:
        if _is_nonpositive_int(x):
            return 0.0  # 1/Gamma vanishes at the poles
        lg, sg = _signed_lgamma(x)
        log_value -= lg
        sign *= sg
    return sign * math.exp(log_value)


def _inverse(a: float, b: float, c: float, z: float, control: SeriesControl) -> float:
    # connection formula to argument 1/z, valid for z < -1 and a - b not an integer
    w = 1.0 / z
    first = _gamma_ratio((c, b - a), (b, c - a)) * (-z) ** (-a)
    second = _gamma_ratio((c, a - b), (a, c - b)) * (-z) ** (-b)
    total = 0.0
    if first != 0.0:
        total += first * _hyp_series(a, a - c + 1.0, a - b + 1.0, w, control)
    if second != 0.0:
        total += second * _hyp_series(b, b - c + 1.0, b - a + 1.0, w, control)
    return total


def gauss_2f1(
    a: float,
    b: float,
    c: float,
    z: float,
    control: SeriesControl = DEFAULT_CONTROL,
    method: str = "auto",
) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0.

    ``method`` selects the route: ``"series"`` sums the defining power
    series (needs z > -1), ``"pfaff"`` sums the series of the Pfaff
    transform, whose argument z/(z-1) lies in [0, 1), and ``"inverse"``
    the connection formula to 1/z (needs z < -1 and a - b not an integer).
    ``"auto"`` uses the inverse route below z = -max(2, a/4) when it applies, else the
    Pfaff transform below z = -1/2 (or whenever the transformed series has
    only positive terms), else the direct series.
    """
    if _is_nonpositive_int(c):
        raise DomainError(f"2F1 undefined for non-positive integer c={c}")
    if z > 0:
        raise DomainError(f"gauss_2f1 supports z <= 0 only, got z={z}")
    if z == 0.0:
        return 1.0
    if method == "series":
        if z <= -1.0:
            raise DomainError(f"direct series diverges for z={z} <= -1")
        return _hyp_series(a, b, c, z, control)
    if method == "pfaff":
        return _pfaff(a, b, c, z, control)
    if method == "inverse":
        if z >= -1.0 or float(a - b).is_integer():
            raise DomainError(f"inverse route needs z < -1 and a - b non-integer, got z={z}")
        return _inverse(a, b, c, z, control)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    # the two inverse-route terms cancel when |z| is small next to a
    if z < -max(2.0, 0.25 * abs(a)) and not float(a - b).is_integer():
        return _inverse(a, b, c, z, control)
    positive_pfaff = a > 0 and c - b >= 0 and c > 0
    if z < -0.5 or positive_pfaff:
        return _pfaff(a, b, c, z, control)
    return _hyp_series(a, b, c, z, control)
