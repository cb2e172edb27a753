"""Low-degree real polynomials and their unique positive root.

Both equilibrium equations of the staking economy reduce to a polynomial in
``x = sqrt(S)`` whose coefficients have exactly one sign change, so by
Descartes' rule there is exactly one positive root.  The solver here brackets
that root geometrically, narrows it by bisection and polishes it with a
safeguarded Newton iteration.  Closed-form cubic/quartic formulas are avoided
on purpose: the coefficients routinely span ten or more orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import (
    ConvergenceError,
    DegeneratePolynomialError,
    DescartesPreconditionError,
    NoRootError,
)

MAX_DEGREE = 4
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200

# Bisect until the bracket is this narrow (relative) before handing off to Newton.
_COARSE_WIDTH = 1.0 / 4.0


@dataclass(frozen=True)
class PolynomialCoeffs:
    """Real polynomial of degree <= 4, coefficients in ascending order.

    ``coeffs[k]`` multiplies ``x**k``.  Trailing exact zeros are trimmed on
    construction; nothing else is rounded away, so the sign pattern seen by
    :func:`count_sign_changes` is exactly what the caller supplied.
    """

    coeffs: tuple[float, ...]
    _desc: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = list(map(float, self.coeffs))
        if not all(map(math.isfinite, values)):
            raise DegeneratePolynomialError(f"non-finite coefficient in {values!r}")
        while values and values[-1] == 0.0:
            values.pop()
        if not values:
            raise DegeneratePolynomialError("all coefficients are zero")
        if len(values) - 1 > MAX_DEGREE:
            raise DegeneratePolynomialError(
                f"degree {len(values) - 1} exceeds the supported maximum {MAX_DEGREE}"
            )
        object.__setattr__(self, "coeffs", tuple(values))
        object.__setattr__(self, "_desc", tuple(reversed(values)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def __call__(self, x: float) -> float:
        return evaluate(self, x)


@dataclass(frozen=True)
class RootResult:
    """Unique positive root together with its certificate.

    Attributes:
        root: the positive root.
        residual: polynomial value at ``root``.
        iterations: bisection plus Newton iterations spent after bracketing.
        bracket: final ``(lo, hi)`` interval known to enclose the root.
    """

    root: float
    residual: float
    iterations: int
    bracket: tuple[float, float]


def _as_poly(poly) -> PolynomialCoeffs:
    if isinstance(poly, PolynomialCoeffs):
        return poly
    return PolynomialCoeffs(tuple(poly))


def evaluate(poly: PolynomialCoeffs, x: float) -> float:
    """Horner evaluation.  Overflow propagates as +/-inf."""
    desc = _as_poly(poly)._desc
    acc = desc[0]
    for a in desc[1:]:
        acc = acc * x + a
    return acc


def _eval_with_derivative(desc: Sequence[float], x: float) -> tuple[float, float]:
    p = desc[0]
    dp = 0.0
    for a in desc[1:]:
        dp = dp * x + p
        p = p * x + a
    return p, dp


def count_sign_changes(poly: PolynomialCoeffs | Sequence[float]) -> int:
    """Number of sign alternations among the nonzero coefficients.

    Raises:
        DegeneratePolynomialError: if every coefficient is zero.
    """
    coeffs = poly.coeffs if isinstance(poly, PolynomialCoeffs) else tuple(poly)
    changes = 0
    prev = None
    for c in coeffs:
        if c != 0:
            positive = c > 0
            if prev is not None and positive != prev:
                changes += 1
            prev = positive
    if prev is None:
        raise DegeneratePolynomialError("cannot count sign changes of the zero polynomial")
    return changes


def unique_positive_root(
    poly: PolynomialCoeffs | Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    guess: float | None = None,
) -> RootResult:
    """Return the single positive root of a polynomial with one sign change.

    The initial bracket comes from the Fujiwara bounds on the root and on its
    reciprocal, which for these polynomials are usually within a small
    factor of the root.  Should rounding make either end fail its sign check,
    the bracket is grown from ``(0, 1]`` instead: the upper end is pushed out
    geometrically (factor 2, 4, 16, 256, ...) or the lower end pulled in the
    same way until the sign flips, never past the Cauchy bound on the
    positive roots (or on their reciprocals).  The bracket is then
    bisected (geometric midpoints while the endpoints differ by more than a
    factor of two) down to a relative width of 1/4, and Newton takes over
    from the secant point of the bracket,
    falling back to bisection whenever a step leaves the bracket or the
    derivative is too small for the step to stay inside it.

    A positive ``guess`` (e.g. the root of a nearby polynomial) is tried
    first: the solver steps away from it toward the root with growing
    factors and, if the sign flips within a few steps, uses that bracket in
    place of the Fujiwara one.  The result does not depend on the guess
    beyond the last few bits.

    Iteration stops when ``|p(x)| <= tol * scale`` with ``scale`` the
    absolute-term sum ``sum |a_k| x^k`` at the upper bracket end, or when the
    bracket is narrower than ``tol * x``.  A converged iterate gets
    one extra Newton correction, which costs nothing and removes the
    dependence of the last bits on where the stopping test happened to fire.

    Raises:
        DescartesPreconditionError: the sign-change count is not 1.
        NoRootError: no sign change before the root bound.
        ConvergenceError: ``max_iter`` refinement steps were not enough.
    """
    poly = _as_poly(poly)
    n_changes = count_sign_changes(poly)
    if n_changes != 1:
        raise DescartesPreconditionError(
            f"expected exactly one coefficient sign change, found {n_changes}", n_changes
        )

    # p(x) = x^k q(x); q has the same positive root and a nonzero constant term.
    low = 0
    while poly.coeffs[low] == 0.0:
        low += 1
    q = poly.coeffs[low:]
    desc = tuple(reversed(q))
    pos0 = q[0] > 0
    lead = q[-1]

    def value(x):
        acc = desc[0]
        for a in desc[1:]:
            acc = acc * x + a
        return acc

    flo = fhi = None
    if guess is not None and guess > 0.0 and math.isfinite(guess):
        found = _bracket_from_guess(value, pos0, guess)
        if found is not None:
            lo, flo, hi, fhi = found
    if flo is None:
        lo, hi = _fujiwara_bracket(q)
        flo, fhi = value(lo), value(hi)
    if not (lo > 0.0 and math.isfinite(hi) and math.isfinite(flo) and math.isfinite(fhi)):
        flo = fhi = math.nan
    elif flo == 0.0:
        return _finish(poly, lo, 0, (lo, lo))
    if fhi == 0.0:
        return _finish(poly, hi, 0, (hi, hi))
    if flo != flo or (flo > 0) != pos0 or (fhi > 0) == pos0:
        # Rounding defeated the bounds; expand geometrically from 1 instead.
        upper_bound = 1.0 + max(map(abs, q[:-1])) / abs(lead)
        lower_bound = 1.0 / (1.0 + max(map(abs, q[1:])) / abs(q[0]))
        lo, hi, exact = _expand_from_one(value, pos0, upper_bound, lower_bound)
        if exact is not None:
            return _finish(poly, exact, 0, (exact, exact))
        flo, fhi = value(lo), value(hi)

    iterations = 0
    # Bisection down to the coarse width: geometric midpoints while the
    # endpoints are more than a factor of two apart, arithmetic after that.
    while hi - lo > _COARSE_WIDTH * hi:
        if iterations >= max_iter:
            raise ConvergenceError("bisection did not narrow the bracket", (lo, hi))
        iterations += 1
        if hi > 2.0 * lo:
            mid = math.sqrt(lo) * math.sqrt(hi)
        else:
            mid = 0.5 * (lo + hi)
        fmid = value(mid)
        if fmid == 0.0:
            return _finish(poly, mid, iterations, (mid, mid))
        if (fmid > 0) == pos0:
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid

    absdesc = tuple(abs(a) for a in desc)
    # secant point of the bracket; falls back to the midpoint if it degenerates
    x = lo + (hi - lo) * (flo / (flo - fhi))
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    while True:
        if iterations >= max_iter:
            raise ConvergenceError(f"no convergence after {max_iter} iterations", (lo, hi))
        iterations += 1
        fx, dfx = _eval_with_derivative(desc, x)
        if fx == 0.0:
            return _finish(poly, x, iterations, (x, x))
        if (fx > 0) == pos0:
            lo = x
        else:
            hi = x
        scale = absdesc[0]
        for a in absdesc[1:]:
            scale = scale * hi + a
        if abs(fx) <= tol * scale:
            x, fx = _polish(desc, x, fx, dfx, lo, hi)
            return _finish(poly, x, iterations, (lo, hi), fx if low == 0 else None)
        width = hi - lo
        if width <= tol * x:
            return _finish(poly, x, iterations, (lo, hi))
        # Derivative safeguard: |p'| must be large enough that the Newton
        # step stays shorter than the bracket.
        if abs(dfx) * width > abs(fx):
            x_new = x - fx / dfx
            if lo < x_new < hi:
                x = x_new
                continue
        x = 0.5 * (lo + hi)


def _fujiwara_bracket(q):
    """Fujiwara bounds on the positive root of ``q`` (ascending, q[0] != 0).

    ``|z| <= 2 max_k |a_k / a_n|^(1/(n-k))`` (the constant term halved), and
    the same bound applied to the reversed polynomial bounds ``1/|z|``.
    """
    n = len(q) - 1
    lead = abs(q[-1])
    const = abs(q[0])
    upper = 0.0
    inv_lower = 0.0
    for k in range(n):
        a = abs(q[k])
        if a != 0.0:
            if k == 0:
                a *= 0.5
            upper = max(upper, (a / lead) ** (1.0 / (n - k)))
    for k in range(1, n + 1):
        a = abs(q[k])
        if a != 0.0:
            if k == n:
                a *= 0.5
            inv_lower = max(inv_lower, (a / const) ** (1.0 / k))
    if inv_lower == 0.0 or not math.isfinite(upper):
        return math.nan, math.nan  # ratios under/overflowed; the caller falls back
    return 0.5 / inv_lower, 2.0 * upper


def _bracket_from_guess(value, pos0, guess):
    # Step away from the guess with factors 1.05, 1.05^2, 1.05^4, ... toward
    # the root; give up after a few tries and let the caller use the bounds.
    fg = value(guess)
    if fg == 0.0:
        return guess, fg, guess, fg
    below = (fg > 0) == pos0  # guess lies below the root
    factor = 1.05
    x, fx = guess, fg
    for _ in range(6):
        y = x * factor if below else x / factor
        fy = value(y)
        if fy == 0.0:
            return y, fy, y, fy
        if ((fy > 0) == pos0) != below:
            return (x, fx, y, fy) if below else (y, fy, x, fx)
        x, fx = y, fy
        factor *= factor
    return None


def _expand_from_one(value, pos0, upper_bound, lower_bound):
    # Geometric expansion away from 1 with a factor that squares each time,
    # so a root near 1e60 is bracketed in ~8 evaluations instead of ~200.
    f1 = value(1.0)
    if f1 == 0.0:
        return 1.0, 1.0, 1.0
    factor = 2.0
    if (f1 > 0) == pos0:
        lo, hi = 1.0, 2.0
        fhi = value(hi)
        while fhi != 0.0 and (fhi > 0) == pos0:
            if hi > upper_bound:
                raise NoRootError(f"no sign change below the root bound {upper_bound:.6g}")
            factor *= factor
            lo, hi = hi, min(hi * factor, 2.0 * upper_bound)
            if not math.isfinite(hi):
                raise NoRootError("the positive root exceeds the floating-point range")
            fhi = value(hi)
        return lo, hi, (hi if fhi == 0.0 else None)
    lo, hi = 0.5, 1.0
    flo = value(lo)
    while flo == 0.0 or (flo > 0) != pos0:
        if flo == 0.0:
            return lo, lo, lo
        if lo < lower_bound:
            raise NoRootError(f"no sign change above the root bound {lower_bound:.6g}")
        factor *= factor
        lo, hi = max(lo / factor, 0.5 * lower_bound), lo
        if lo == 0.0:
            raise NoRootError("the positive root is below the floating-point range")
        flo = value(lo)
    return lo, hi, None


def _polish(desc, x, fx, dfx, lo, hi):
    if dfx == 0.0:
        return x, fx
    x_new = x - fx / dfx
    if not lo <= x_new <= hi:
        return x, fx
    f_new = _eval_with_derivative(desc, x_new)[0]
    return (x_new, f_new) if abs(f_new) <= abs(fx) else (x, fx)


def _finish(poly, x, iterations, bracket, residual=None):
    if residual is None:
        residual = evaluate(poly, x)
    return RootResult(root=x, residual=residual, iterations=iterations, bracket=bracket)
