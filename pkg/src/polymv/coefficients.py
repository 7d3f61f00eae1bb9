"""Mean-value coefficients from Vandermonde determinants and minors.

The weights c_1, ..., c_m of the solid mean value identity for m-polyharmonic
functions are ratios of first-column minors to the determinant of the even
Vandermonde matrix V = [alpha_i^(2(j-1))].  Everything here is computed with
exact rational arithmetic; float inputs are rationalized bit-exactly first and
only the *output* is rendered as floats, so the structural identities
(positivity, alternating sum equal to one) hold by construction in both modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Scalar = Union[int, Fraction, float]


def _is_exact(value: Scalar) -> bool:
    return isinstance(value, (int, Fraction))


def to_fraction(value: Scalar) -> Fraction:
    """Exact rationalization; floats convert via their binary expansion."""
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


@dataclass(frozen=True)
class AlphaVector:
    """Strictly increasing radii 0 < alpha_1 < ... < alpha_m <= 1.

    ``cap``, when given, additionally enforces alpha_{m-1} <= cap; this is the
    constrained variant used when the averaging domain replaces the outermost
    ball (there alpha_m is pinned to 1 and the free radii must stay below the
    inradius/diameter ratio).
    """

    alphas: tuple
    cap: Scalar | None = None

    def __post_init__(self):
        alphas = tuple(self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if len(alphas) < 2:
            raise ValueError("need at least two radii (m >= 2)")
        if not alphas[0] > 0:
            raise ValueError("radii must be positive")
        for a, b in zip(alphas, alphas[1:]):
            if not a < b:
                raise ValueError("radii must be strictly increasing")
        if not alphas[-1] <= 1:
            raise ValueError("largest radius must not exceed 1")
        if self.cap is not None and len(alphas) >= 2:
            if not alphas[-2] <= self.cap:
                raise ValueError(
                    f"alpha_(m-1)={alphas[-2]} exceeds cap {self.cap}"
                )

    @property
    def m(self) -> int:
        return len(self.alphas)

    @property
    def exact(self) -> bool:
        return all(_is_exact(a) for a in self.alphas)

    def as_fractions(self) -> tuple[Fraction, ...]:
        return tuple(to_fraction(a) for a in self.alphas)

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(a) for a in self.alphas)


@dataclass(frozen=True)
class CoefficientSet:
    """Positive weights with alternating sum equal to one."""

    c: tuple
    arithmetic_mode: str  # "exact" | "float"

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(self.c))
        if self.arithmetic_mode not in ("exact", "float"):
            raise ValueError(f"unknown arithmetic mode {self.arithmetic_mode!r}")
        if any(not ck > 0 for ck in self.c):
            raise ValueError("coefficients must all be positive")
        s = self.alternating_sum()
        if self.arithmetic_mode == "exact":
            if s != 1:
                raise ValueError(f"alternating sum is {s}, expected exactly 1")
        else:
            if abs(s - 1.0) > 1e-12:
                raise ValueError(f"alternating sum {s!r} off by more than 1e-12")

    @property
    def m(self) -> int:
        return len(self.c)

    def alternating_sum(self):
        s = 0
        for k, ck in enumerate(self.c):
            s = s + ck if k % 2 == 0 else s - ck
        return s

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(ck) for ck in self.c)


@dataclass(frozen=True)
class VandermondeMatrix:
    """Even-power Vandermonde matrix: entry (i, j) = alpha_i^(2(j-1)), 1-based."""

    entries: tuple
    alphas: AlphaVector

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple(tuple(row) for row in self.entries)
        )

    @property
    def m(self) -> int:
        return len(self.entries)


def build_vandermonde(alphas: AlphaVector) -> VandermondeMatrix:
    rows = []
    for a in alphas.alphas:
        a2 = a * a
        row = []
        p = 1 if _is_exact(a) else 1.0
        for _ in range(alphas.m):
            row.append(p)
            p = p * a2
        rows.append(tuple(row))
    return VandermondeMatrix(tuple(rows), alphas)


def _det_fraction_free(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Bareiss fraction-free elimination; exact over the rationals."""
    a = [list(row) for row in rows]
    size = len(a)
    if size == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(size - 1):
        if a[k][k] == 0:
            for i in range(k + 1, size):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
            a[i][k] = Fraction(0)
        prev = a[k][k]
    return sign * a[-1][-1]


def _vandermonde_rows(alphas: AlphaVector) -> list[list[Fraction]]:
    rows = []
    for a in alphas.as_fractions():
        a2 = a * a
        row = [Fraction(1)]
        for _ in range(alphas.m - 1):
            row.append(row[-1] * a2)
        rows.append(row)
    return rows


def det_vandermonde(alphas: AlphaVector) -> Scalar:
    """Determinant of V by fraction-free elimination (no closed form)."""
    det = _det_fraction_free(_vandermonde_rows(alphas))
    return det if alphas.exact else float(det)


def det_vandermonde_closed(alphas: AlphaVector) -> Scalar:
    """Product formula det V = prod_{i<j} (alpha_j^2 - alpha_i^2)."""
    fr = alphas.as_fractions()
    det = Fraction(1)
    for i in range(len(fr)):
        for j in range(i + 1, len(fr)):
            det *= fr[j] * fr[j] - fr[i] * fr[i]
    return det if alphas.exact else float(det)


def minor_v_k1(alphas: AlphaVector, k: int) -> Scalar:
    """Minor of V with row k and the first column removed (1-based k)."""
    if not 1 <= k <= alphas.m:
        raise IndexError(f"k={k} out of range 1..{alphas.m}")
    rows = _vandermonde_rows(alphas)
    sub = [row[1:] for i, row in enumerate(rows) if i != k - 1]
    minor = _det_fraction_free(sub)
    return minor if alphas.exact else float(minor)


def coefficients(alphas: AlphaVector) -> CoefficientSet:
    """Mean-value weights c_k = v_{k,1} / det V, positive, alternating sum 1."""
    rows = _vandermonde_rows(alphas)
    det = _det_fraction_free(rows)
    cs = []
    for k in range(alphas.m):
        sub = [row[1:] for i, row in enumerate(rows) if i != k]
        cs.append(_det_fraction_free(sub) / det)
    if alphas.exact:
        return CoefficientSet(tuple(cs), "exact")
    return CoefficientSet(tuple(float(c) for c in cs), "float")


def biharmonic_coefficients(alpha: Scalar) -> tuple[Scalar, Scalar]:
    """The m=2 closed form (1/(1-a^2), a^2/(1-a^2))."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha={alpha} must lie in (0, 1)")
    a = to_fraction(alpha)
    c1 = 1 / (1 - a * a)
    c2 = a * a * c1
    if _is_exact(alpha):
        return c1, c2
    return float(c1), float(c2)


def geometric_alphas(m: int, r: Scalar, d: Scalar) -> AlphaVector:
    """Geometric radii alpha_k = (r/(2d))^(m-k) for k < m, with alpha_m = 1.

    Requires 2r <= d, which makes the ratio at most 1/4 and the sequence
    strictly increasing.  The cap r/d is attached for the constrained setting.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if not (r > 0 and d > 0):
        raise ValueError("lengths must be positive")
    if not 2 * to_fraction(r) <= to_fraction(d):
        raise ValueError(f"need 2r <= d, got r={r}, d={d}")
    exact = _is_exact(r) and _is_exact(d)
    x = to_fraction(r) / (2 * to_fraction(d))
    cap = to_fraction(r) / to_fraction(d)
    alphas = [x ** (m - k) for k in range(1, m)] + [Fraction(1)]
    if exact:
        return AlphaVector(tuple(alphas), cap=cap)
    return AlphaVector(tuple(float(a) for a in alphas[:-1]) + (1,), cap=float(cap))


def geometric_coefficient_bound(m: int, x: Scalar, k: int) -> Scalar:
    """Dominating value x^(k^2-k) / (1-x^2)^(m-1) for the geometric weights."""
    xf = to_fraction(x)
    bound = xf ** (k * k - k) / (1 - xf * xf) ** (m - 1)
    return bound if _is_exact(x) else float(bound)


def geometric_coefficients(m: int, x: Scalar) -> CoefficientSet:
    """Closed-form weights for the geometric radii (x^(m-1), ..., x, 1).

    c_k = x^(k^2-k) / (prod_{i<k} (1-x^(2(k-i))) * prod_{j>k} (1-x^(2(j-k)))).
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if not 0 < x < 1:
        raise ValueError(f"x={x} must lie in (0, 1)")
    xf = to_fraction(x)
    cs = []
    for k in range(1, m + 1):
        den = Fraction(1)
        for i in range(1, k):
            den *= 1 - xf ** (2 * (k - i))
        for j in range(k + 1, m + 1):
            den *= 1 - xf ** (2 * (j - k))
        cs.append(xf ** (k * k - k) / den)
    if _is_exact(x):
        return CoefficientSet(tuple(cs), "exact")
    return CoefficientSet(tuple(float(c) for c in cs), "float")


def coefficient_bound_check(m: int, r: Scalar, d: Scalar) -> bool:
    """True iff every geometric weight obeys c_k <= 2^(m-1) (r/d)^(k^2-k)."""
    if not 2 * to_fraction(r) <= to_fraction(d):
        raise ValueError(f"need 2r <= d, got r={r}, d={d}")
    rf, df = to_fraction(r), to_fraction(d)
    cs = geometric_coefficients(m, rf / (2 * df))
    ratio = rf / df
    for k, ck in enumerate(cs.c, start=1):
        if not to_fraction(ck) <= 2 ** (m - 1) * ratio ** (k * k - k):
            return False
    return True


def stability_exponent_margin(m: int, k: int) -> int:
    """3m + k^2 - 6k - 1, the exponent slack in the stability estimate.

    Nonnegative for every 1 <= k <= m-1 with m >= 2; the stability bound
    discards these powers of r/d, which is only valid because of that.
    """
    if not (m >= 2 and 1 <= k <= m - 1):
        raise ValueError(f"need m >= 2 and 1 <= k <= m-1, got m={m}, k={k}")
    return 3 * m + k * k - 6 * k - 1
