"""Exact symbolic calculus for polyharmonicity certificates.

Two closed algebras live here:

* :class:`MultiPoly` -- multivariate polynomials with exact rational (or, on
  the purely numeric path, float) coefficients, closed under the Laplacian.
* :class:`PoleFunction` -- finite sums P(w) * |w|^e with integer exponents e
  and w = x - z the offset from a fixed pole z.  This algebra houses the
  inversion-type functions: it is closed under the Laplacian, and admits an
  exact zero test, which is what turns "apply the Laplacian m times and look"
  into a certificate.

Zero testing canonicalizes each term: negative exponents absorb every |w|^2
factor of their polynomial part, exponents >= 2 fold back into the polynomial,
and equal exponents merge.  Exponents of different parity are never mixed (the
representation would stop being unique).  After that pass the function is
identically zero iff no terms remain.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .coefficients import AlphaVector, to_fraction

Scalar = Union[int, Fraction, float]
Monomial = tuple  # exponent multi-index, one entry per variable


def _is_exact_scalar(c) -> bool:
    return isinstance(c, (int, Fraction))


def _grlex(mono: Monomial):
    return (sum(mono), mono)


class MultiPoly:
    """Immutable multivariate polynomial; no zero coefficients are stored."""

    __slots__ = ("n", "terms", "_fcache")

    def __init__(self, n: int, terms: dict | None = None):
        if n < 1:
            raise ValueError("need at least one variable")
        clean = {}
        for mono, c in (terms or {}).items():
            if c == 0:
                continue
            mono = tuple(int(e) for e in mono)
            if len(mono) != n or any(e < 0 for e in mono):
                raise ValueError(f"bad multi-index {mono} for n={n}")
            clean[mono] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_fcache", None)

    def __setattr__(self, name, value):
        raise AttributeError("MultiPoly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "MultiPoly":
        return cls(n, {})

    @classmethod
    def const(cls, n: int, c: Scalar) -> "MultiPoly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> "MultiPoly":
        mono = tuple(1 if j == i else 0 for j in range(n))
        return cls(n, {mono: Fraction(1)})

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def exact(self) -> bool:
        return all(_is_exact_scalar(c) for c in self.terms.values())

    @property
    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"MultiPoly({self.canonical_text()})"

    # -- ring operations ----------------------------------------------------

    def __add__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            return self + MultiPoly.const(self.n, other)
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            s = terms.get(mono, 0) + c
            if s == 0:
                terms.pop(mono, None)
            else:
                terms[mono] = s
        return MultiPoly(self.n, terms)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            if other == 0:
                return MultiPoly.zero(self.n)
            return MultiPoly(
                self.n, {m: c * other for m, c in self.terms.items()}
            )
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(mono, 0) + c1 * c2
                if s == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = s
        return MultiPoly(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = MultiPoly.const(self.n, Fraction(1))
        for _ in range(k):
            out = out * self
        return out

    def diff(self, i: int) -> "MultiPoly":
        out = {}
        for mono, c in self.terms.items():
            if mono[i] == 0:
                continue
            dm = list(mono)
            dm[i] -= 1
            out[tuple(dm)] = c * mono[i]
        return MultiPoly(self.n, out)

    def shift(self, offset: Sequence[Scalar]) -> "MultiPoly":
        """Translate the argument: returns q with q(t) = p(t + offset)."""
        if len(offset) != self.n:
            raise ValueError("offset dimension mismatch")
        p = self
        for i, a in enumerate(offset):
            if a == 0:
                continue
            out: dict = {}
            for mono, c in p.terms.items():
                e = mono[i]
                base = list(mono)
                ap = [1]
                for _ in range(e):
                    ap.append(ap[-1] * a)
                for j in range(e + 1):
                    base[i] = j
                    coef = c * math.comb(e, j) * ap[e - j]
                    key = tuple(base)
                    s = out.get(key, 0) + coef
                    if s == 0:
                        out.pop(key, None)
                    else:
                        out[key] = s
            p = MultiPoly(self.n, out)
        return p

    def divide_exact(self, divisor: "MultiPoly") -> "MultiPoly | None":
        """Exact quotient self / divisor, or None if the division leaves a
        remainder.  Division by a single divisor has a unique remainder, so
        a nonzero one proves indivisibility."""
        if divisor.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        if not (self.exact and divisor.exact):
            raise ValueError("exact division requires exact coefficients")
        lead = max(divisor.terms, key=_grlex)
        lead_c = divisor.terms[lead]
        work = dict(self.terms)
        quot: dict = {}
        while work:
            mono = max(work, key=_grlex)
            c = work.pop(mono)
            diff = tuple(a - b for a, b in zip(mono, lead))
            if any(d < 0 for d in diff):
                return None
            q = Fraction(c) / lead_c
            quot[diff] = quot.get(diff, 0) + q
            for dm, dc in divisor.terms.items():
                if dm == lead:
                    continue
                key = tuple(a + b for a, b in zip(diff, dm))
                s = work.get(key, 0) - q * dc
                if s == 0:
                    work.pop(key, None)
                else:
                    work[key] = s
        return MultiPoly(self.n, quot)

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, x: Sequence[Scalar]):
        """Exact Fraction at exact points of an exact polynomial, else float."""
        if len(x) != self.n:
            raise ValueError("point dimension mismatch")
        exact = self.exact and all(_is_exact_scalar(v) for v in x)
        if exact:
            total = Fraction(0)
            for mono, c in self.terms.items():
                term = Fraction(c)
                for xi, e in zip(x, mono):
                    term *= Fraction(xi) ** e
                total += term
            return total
        return float(self.eval_many(np.asarray([x], dtype=float))[0])

    def _compiled(self):
        cache = self._fcache
        if cache is None:
            monos = sorted(self.terms, key=_grlex)
            exps = np.array(monos, dtype=np.int64).reshape(len(monos), self.n)
            coeffs = np.array([float(self.terms[m]) for m in monos])
            cache = (exps, coeffs)
            object.__setattr__(self, "_fcache", cache)
        return cache

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation at an (N, n) array of points."""
        pts = np.asarray(pts, dtype=float)
        exps, coeffs = self._compiled()
        out = np.zeros(pts.shape[0])
        if len(coeffs) == 0:
            return out
        maxdeg = exps.max(axis=0)
        powers = []
        for i in range(self.n):
            col = np.empty((maxdeg[i] + 1, pts.shape[0]))
            col[0] = 1.0
            for d in range(1, maxdeg[i] + 1):
                col[d] = col[d - 1] * pts[:, i]
            powers.append(col)
        for t in range(len(coeffs)):
            term = np.full(pts.shape[0], coeffs[t])
            for i in range(self.n):
                e = exps[t, i]
                if e:
                    term = term * powers[i][e]
            out += term
        return out

    # -- serialization --------------------------------------------------------

    def canonical_text(self, var: str = "x") -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms, key=_grlex, reverse=True):
            c = self.terms[mono]
            factors = [str(Fraction(c)) if _is_exact_scalar(c) else repr(float(c))]
            for i, e in enumerate(mono):
                if e == 1:
                    factors.append(f"{var}{i}")
                elif e > 1:
                    factors.append(f"{var}{i}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)


def squared_radius(n: int) -> MultiPoly:
    """|x|^2 as a polynomial."""
    return MultiPoly(
        n, {tuple(2 if j == i else 0 for j in range(n)): Fraction(1) for i in range(n)}
    )


def linear_form(coeffs: Sequence[Scalar], n: int) -> MultiPoly:
    """sum_i coeffs[i] * x_i."""
    return MultiPoly(
        n,
        {
            tuple(1 if j == i else 0 for j in range(n)): c
            for i, c in enumerate(coeffs)
            if c != 0
        },
    )


def laplacian_poly(p: MultiPoly) -> MultiPoly:
    """Exact Laplacian: sum of second partials."""
    out: dict = {}
    for mono, c in p.terms.items():
        for i in range(p.n):
            e = mono[i]
            if e >= 2:
                dm = list(mono)
                dm[i] -= 2
                key = tuple(dm)
                s = out.get(key, 0) + c * e * (e - 1)
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
    return MultiPoly(p.n, out)


@dataclass(frozen=True)
class PoleValue:
    """Exact value a + b*sqrt(radicand) of a pole function at a rational point."""

    rational: Fraction
    radical: Fraction
    radicand: Fraction

    def to_float(self) -> float:
        return float(self.rational) + float(self.radical) * math.sqrt(
            float(self.radicand)
        )

    def sign(self) -> int:
        a, b, s = self.rational, self.radical, self.radicand
        if b == 0 or s == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        lhs, rhs = a * a, b * b * s
        if lhs == rhs:
            return 0
        bigger_rational = lhs > rhs
        return (1 if bigger_rational else -1) * (1 if a > 0 else -1)


class PoleFunction:
    """Finite sum of P_e(w) * |w|^e terms, w = x - pole, integer exponents e.

    Polynomial parts are stored in the offset variable w; each exponent
    appears at most once and zero polynomials are dropped.  ``normalized``
    produces the canonical representative used by the exact zero test.
    """

    __slots__ = ("n", "pole", "terms", "_fcache")

    def __init__(self, n: int, pole: Sequence[Scalar], terms: dict | None = None):
        if n < 2:
            raise ValueError("pole functions need dimension n >= 2")
        if len(pole) != n:
            raise ValueError("pole dimension mismatch")
        clean: dict = {}
        for e, poly in (terms or {}).items():
            e = int(e)
            if poly.n != n:
                raise ValueError("polynomial dimension mismatch")
            if poly.is_zero:
                continue
            if e in clean:
                clean[e] = clean[e] + poly
                if clean[e].is_zero:
                    del clean[e]
            else:
                clean[e] = poly
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "pole", tuple(pole))
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_fcache", None)

    def __setattr__(self, name, value):
        raise AttributeError("PoleFunction is immutable")

    @classmethod
    def from_poly(cls, p: MultiPoly, pole: Sequence[Scalar]) -> "PoleFunction":
        """Re-express a plain polynomial p(x) in the offset variable w = x - pole."""
        return cls(p.n, pole, {0: p.shift(pole)})

    # -- structure -----------------------------------------------------------

    @property
    def exact(self) -> bool:
        return all(_is_exact_scalar(z) for z in self.pole) and all(
            p.exact for p in self.terms.values()
        )

    @property
    def exponents(self) -> tuple:
        return tuple(sorted(self.terms))

    def __repr__(self) -> str:
        return f"PoleFunction(n={self.n}, pole={self.pole}, e={self.exponents})"

    def __add__(self, other) -> "PoleFunction":
        if not isinstance(other, PoleFunction):
            return NotImplemented
        if other.n != self.n or tuple(other.pole) != self.pole:
            raise ValueError("pole functions with different poles do not add")
        terms = dict(self.terms)
        for e, poly in other.terms.items():
            terms[e] = terms.get(e, MultiPoly.zero(self.n)) + poly
        return PoleFunction(self.n, self.pole, terms)

    def __neg__(self) -> "PoleFunction":
        return PoleFunction(self.n, self.pole, {e: -p for e, p in self.terms.items()})

    def __sub__(self, other) -> "PoleFunction":
        return self + (-other)

    def __mul__(self, scalar) -> "PoleFunction":
        return PoleFunction(
            self.n, self.pole, {e: p * scalar for e, p in self.terms.items()}
        )

    __rmul__ = __mul__

    # -- canonical form --------------------------------------------------------

    def normalized(self) -> "PoleFunction":
        """Canonical representative: exponents >= 2 fold into the polynomial
        part, negative exponents give up every |w|^2 factor, equal exponents
        merge.  Exact coefficients only; the represented function is
        identically zero iff the result has no terms."""
        if not self.exact:
            raise ValueError("normalization requires exact coefficients")
        s2 = squared_radius(self.n)
        terms = {e: p for e, p in self.terms.items()}
        changed = True
        while changed:
            changed = False
            for e in sorted(terms):
                p = terms[e]
                if p.is_zero:
                    del terms[e]
                    changed = True
                    continue
                if e >= 2:
                    del terms[e]
                    moved = p * s2
                    tgt = e - 2
                    terms[tgt] = terms.get(tgt, MultiPoly.zero(self.n)) + moved
                    changed = True
                elif e < 0:
                    q = p.divide_exact(s2)
                    if q is not None:
                        del terms[e]
                        tgt = e + 2
                        terms[tgt] = terms.get(tgt, MultiPoly.zero(self.n)) + q
                        changed = True
        return PoleFunction(self.n, self.pole, terms)

    def is_identically_zero(self) -> bool:
        return not self.normalized().terms

    def equals(self, other: "PoleFunction") -> bool:
        """Exact equality as functions (poles must agree)."""
        return (self - other).is_identically_zero()

    # -- evaluation --------------------------------------------------------------

    def evaluate_exact(self, x: Sequence[Scalar]) -> PoleValue:
        """Exact value at a rational point, as a + b*sqrt(|x-z|^2)."""
        if not self.exact:
            raise ValueError("exact evaluation requires exact coefficients")
        w = [to_fraction(xi) - to_fraction(zi) for xi, zi in zip(x, self.pole)]
        s2 = sum(wi * wi for wi in w)
        if s2 == 0 and any(e < 0 for e in self.terms):
            raise ValueError("evaluation at the pole")
        rational = Fraction(0)
        radical = Fraction(0)
        for e, p in self.terms.items():
            val = p.evaluate(w)
            if e % 2 == 0:
                rational += val * s2 ** (e // 2)
            else:
                # |w|^e = |w|^(e-1) * sqrt(s2)
                radical += val * s2 ** ((e - 1) // 2)
        return PoleValue(rational, radical, s2)

    def evaluate(self, x: Sequence[Scalar]) -> float:
        if self.exact and all(_is_exact_scalar(v) for v in x):
            return self.evaluate_exact(x).to_float()
        pt = np.asarray([x], dtype=float)
        w = pt[0] - np.array([float(z) for z in self.pole])
        if not w.any() and any(e < 0 for e in self.terms):
            raise ValueError("evaluation at the pole")
        return float(self.eval_many(pt)[0])

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation at an (N, n) array of points."""
        pts = np.asarray(pts, dtype=float)
        w = pts - np.array([float(z) for z in self.pole])
        s2 = np.einsum("ij,ij->i", w, w)
        out = np.zeros(pts.shape[0])
        for e in sorted(self.terms):
            vals = self.terms[e].eval_many(w)
            if e != 0:
                vals = vals * np.power(s2, 0.5 * e)
            out += vals
        return out

    # -- serialization -------------------------------------------------------------

    def canonical_text(self) -> str:
        f = self.normalized() if self.exact else self
        pole = ", ".join(
            str(Fraction(z)) if _is_exact_scalar(z) else repr(float(z))
            for z in f.pole
        )
        lines = [f"pole-function n={f.n} pole=({pole})"]
        for e in sorted(f.terms, reverse=True):
            lines.append(f"[e={e}] {f.terms[e].canonical_text(var='w')}")
        return "\n".join(lines)


def laplacian_pole(f: PoleFunction) -> PoleFunction:
    """Laplacian inside the pole algebra.

    For rho = |w|:  Lap(P * rho^a) = (Lap P) rho^a
                                     + [2a (grad P . w) + a(a+n-2) P] rho^(a-2),
    so exponents only shift by -2 and the algebra is closed.
    """
    n = f.n
    out: dict = {}

    def _acc(e, poly):
        if poly.is_zero:
            return
        out[e] = out.get(e, MultiPoly.zero(n)) + poly

    for a, p in f.terms.items():
        _acc(a, laplacian_poly(p))
        if a != 0:
            grad_dot_w = MultiPoly.zero(n)
            for i in range(n):
                grad_dot_w = grad_dot_w + p.diff(i) * MultiPoly.variable(n, i)
            _acc(a - 2, 2 * a * grad_dot_w + a * (a + n - 2) * p)
    return PoleFunction(n, f.pole, out)


def is_polyharmonic(f: Union[MultiPoly, PoleFunction], m: int) -> bool:
    """Exact certificate that the m-th Laplacian power annihilates f."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if isinstance(f, MultiPoly):
        g = f
        for _ in range(m):
            g = laplacian_poly(g)
        return g.is_zero
    if isinstance(f, PoleFunction):
        if not f.exact:
            raise ValueError("certification requires exact coefficients")
        g = f
        for _ in range(m):
            g = laplacian_pole(g)
        return g.is_identically_zero()
    raise TypeError(f"unsupported operand {type(f)!r}")


# -- the inversion construction ---------------------------------------------------


def build_h(z: Sequence[Scalar], lambdas: Sequence[Scalar], n: int) -> MultiPoly:
    """Seed polynomial of the inversion construction.

    h(x) = (z.x) * prod_k [ (l_k^2-|z|^2)|x|^2 - 2(l_k^2+|z|^2)(z.x)
                            + (l_k^2-|z|^2)|z|^2 ],
    a polynomial of degree 2m-1 for m-1 parameters l_k, hence automatically
    m-polyharmonic.
    """
    if len(z) != n:
        raise ValueError("pole dimension mismatch")
    if all(zi == 0 for zi in z):
        raise ValueError("pole must be nonzero")
    z2 = sum(to_fraction(zi) ** 2 for zi in z)
    zdot = linear_form([to_fraction(zi) for zi in z], n)
    x2 = squared_radius(n)
    h = zdot
    for lam in lambdas:
        l2 = to_fraction(lam) ** 2
        factor = (l2 - z2) * x2 - 2 * (l2 + z2) * zdot + MultiPoly.const(
            n, (l2 - z2) * z2
        )
        h = h * factor
    return h


def build_h_alt(z: Sequence[Scalar], lambdas: Sequence[Scalar], n: int) -> MultiPoly:
    """Equivalent factored form (z.x) * prod_k [ (l_k^2-|z|^2)|x-z|^2 - 4|z|^2 (z.x) ]."""
    if all(zi == 0 for zi in z):
        raise ValueError("pole must be nonzero")
    z2 = sum(to_fraction(zi) ** 2 for zi in z)
    zdot = linear_form([to_fraction(zi) for zi in z], n)
    x2 = squared_radius(n)
    # |x-z|^2 = |x|^2 - 2 z.x + |z|^2
    dist2 = x2 - 2 * zdot + MultiPoly.const(n, z2)
    h = zdot
    for lam in lambdas:
        l2 = to_fraction(lam) ** 2
        h = h * ((l2 - z2) * dist2 - 4 * z2 * zdot)
    return h


def kelvin_transform(h: MultiPoly, z: Sequence[Scalar], m: int) -> PoleFunction:
    """Inversion transform with pole z and weight |x-z|^(2m-n).

    K h(x) = |x-z|^(2m-n) h(z + 2|z|^2 (x-z)/|x-z|^2): each monomial w^b of
    h(z+w) contributes (2|z|^2)^|b| w^b |w|^(2m-n-2|b|).
    """
    n = h.n
    if len(z) != n:
        raise ValueError("pole dimension mismatch")
    if all(zi == 0 for zi in z):
        raise ValueError("pole must be nonzero")
    z2 = sum(to_fraction(zi) ** 2 for zi in z)
    g = h.shift([to_fraction(zi) for zi in z])
    terms: dict = {}
    for mono, c in g.terms.items():
        k = sum(mono)
        e = 2 * m - n - 2 * k
        add = MultiPoly(n, {mono: c * (2 * z2) ** k})
        terms[e] = terms.get(e, MultiPoly.zero(n)) + add
    return PoleFunction(n, z, terms).normalized()


def kelvin_closed_form(
    z: Sequence[Scalar], lambdas: Sequence[Scalar], n: int
) -> PoleFunction:
    """Target of the transform identity:

    4^(m-1) |z|^(4m-2) (|x|^2-|z|^2) |x-z|^(-n) prod_k (l_k^2 - |x|^2),
    written in the offset variable w where |x|^2 = |w|^2 + 2 z.w + |z|^2.
    """
    m = len(lambdas) + 1
    z2 = sum(to_fraction(zi) ** 2 for zi in z)
    if z2 == 0:
        raise ValueError("pole must be nonzero")
    s2 = squared_radius(n)
    zw = linear_form([to_fraction(zi) for zi in z], n)
    x2_in_w = s2 + 2 * zw + MultiPoly.const(n, z2)
    p = (x2_in_w - MultiPoly.const(n, z2)) * (Fraction(4) ** (m - 1) * z2 ** (2 * m - 1))
    for lam in lambdas:
        l2 = to_fraction(lam) ** 2
        p = p * (MultiPoly.const(n, l2) - x2_in_w)
    return PoleFunction(n, z, {-n: p}).normalized()


def kuran_function(
    r: Scalar, z: Sequence[Scalar], alphas: AlphaVector, n: int
) -> PoleFunction:
    """The sign-alternating m-polyharmonic function driving rigidity:

    u(x) = |x|^2 (r^2 - |x|^2) |x-z|^(-n) prod_{k=2}^{m-1} (a_k^2 r^2 - |x|^2)

    with |z| = r and a_m = 1.  Exact inputs yield the certified element;
    float inputs yield the evaluation-only variant.
    """
    if len(z) != n:
        raise ValueError("pole dimension mismatch")
    exact = (
        _is_exact_scalar(r)
        and all(_is_exact_scalar(zi) for zi in z)
        and alphas.exact
    )
    last = alphas.alphas[-1]
    if exact:
        if last != 1:
            raise ValueError("the outermost radius must equal 1")
        r2 = to_fraction(r) ** 2
        z2 = sum(to_fraction(zi) ** 2 for zi in z)
        if z2 != r2:
            raise ValueError(f"|z|^2={z2} differs from r^2={r2}")
        zf = [to_fraction(zi) for zi in z]
    else:
        if abs(float(last) - 1.0) > 1e-12:
            raise ValueError("the outermost radius must equal 1")
        r2 = float(r) ** 2
        z2 = sum(float(zi) ** 2 for zi in z)
        if abs(z2 - r2) > 1e-9 * max(r2, 1.0):
            raise ValueError(f"|z|^2={z2} differs from r^2={r2}")
        zf = [float(zi) for zi in z]
    s2 = squared_radius(n)
    zw = linear_form(zf, n)
    x2_in_w = s2 + 2 * zw + MultiPoly.const(n, z2)
    p = x2_in_w * (MultiPoly.const(n, r2) - x2_in_w)
    for a in alphas.alphas[1:-1]:
        a2r2 = (to_fraction(a) ** 2 * to_fraction(r) ** 2) if exact else float(a) ** 2 * float(r) ** 2
        p = p * (MultiPoly.const(n, a2r2) - x2_in_w)
    f = PoleFunction(n, zf, {-n: p})
    return f.normalized() if exact else f


# -- test-function generation --------------------------------------------------------


def _monomials(n: int, d: int) -> list:
    """All exponent multi-indices of total degree d, in descending grlex order."""
    if n == 1:
        return [(d,)]
    out = []
    for e in range(d, -1, -1):
        out.extend((e,) + rest for rest in _monomials(n - 1, d - e))
    return out


def _nullspace(rows: list, ncols: int) -> list:
    """Basis of the exact rational nullspace of a matrix given by rows."""
    mat = [list(r) for r in rows]
    pivots: list[int] = []
    rank = 0
    for col in range(ncols):
        piv = None
        for i in range(rank, len(mat)):
            if mat[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        pv = mat[rank][col]
        mat[rank] = [v / pv for v in mat[rank]]
        for i in range(len(mat)):
            if i != rank and mat[i][col] != 0:
                fct = mat[i][col]
                mat[i] = [a - fct * b for a, b in zip(mat[i], mat[rank])]
        pivots.append(col)
        rank += 1
        if rank == len(mat):
            break
    basis = []
    for free in range(ncols):
        if free in pivots:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pc in enumerate(pivots):
            vec[pc] = -mat[row][free]
        basis.append(tuple(vec))
    return basis


@functools.lru_cache(maxsize=None)
def harmonic_basis(n: int, d: int) -> tuple:
    """Deterministic exact basis of homogeneous degree-d harmonic polynomials."""
    monos = _monomials(n, d)
    if d <= 1:
        return tuple(MultiPoly(n, {m: Fraction(1)}) for m in monos)
    targets = _monomials(n, d - 2)
    row_index = {m: i for i, m in enumerate(targets)}
    rows = [[Fraction(0)] * len(monos) for _ in targets]
    for j, mono in enumerate(monos):
        for i in range(n):
            if mono[i] >= 2:
                dm = list(mono)
                dm[i] -= 2
                rows[row_index[tuple(dm)]][j] += mono[i] * (mono[i] - 1)
    basis = _nullspace(rows, len(monos))
    polys = []
    for vec in basis:
        polys.append(MultiPoly(n, {m: c for m, c in zip(monos, vec) if c != 0}))
    return tuple(polys)


def almansi_sample(m: int, n: int, degree: int, seed: int) -> MultiPoly:
    """Random certified m-polyharmonic polynomial.

    Draws harmonic parts h_0, ..., h_{m-1} with rational coefficients (h_{m-1}
    forced nonzero) and returns sum_j |x|^(2j) h_j, re-certifying the
    m-th-power Laplacian annihilation before handing it out.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    rng = random.Random(seed)
    s2 = squared_radius(n)

    def draw_harmonic(force_nonzero: bool) -> MultiPoly:
        h = MultiPoly.zero(n)
        for d in range(degree + 1):
            basis = harmonic_basis(n, d)
            for b in basis:
                if rng.random() < 0.35:
                    c = Fraction(rng.randint(-6, 6), rng.randint(1, 3))
                    if c != 0:
                        h = h + b * c
        if force_nonzero and h.is_zero:
            basis = harmonic_basis(n, min(1, degree))
            h = basis[rng.randrange(len(basis))] * Fraction(rng.randint(1, 5))
        return h

    u = MultiPoly.zero(n)
    for j in range(m):
        h = draw_harmonic(force_nonzero=(j == m - 1))
        u = u + s2 ** j * h
    if not is_polyharmonic(u, m):
        raise AssertionError("generated sample failed its own certificate")
    return u


# -- sign pattern verification ----------------------------------------------------------


@dataclass(frozen=True)
class SignPatternReport:
    """Per-region minima of the sign-corrected candidate over random samples."""

    region_labels: tuple
    region_mins: tuple
    region_counts: tuple
    all_nonnegative: bool


def sign_pattern_check(
    u: PoleFunction,
    domain,
    r: Scalar,
    alphas: AlphaVector,
    sample_budget: int = 400,
    seed: int = 0,
) -> SignPatternReport:
    """Checks the alternating sign structure of the rigidity candidate.

    Samples the annular regions (scaled copy of the domain minus the matching
    centered ball) for k = 1, ..., m-1 and the outer region (domain minus the
    central ball), and reports the minimum of (-1)^(k+1) u, resp.
    (-1)^(m+1) u, over the samples.  With exact inputs the sign at each
    rationalized sample point is decided exactly.
    """
    rng = random.Random(seed)
    m = alphas.m
    center = np.asarray(domain.center, dtype=float)
    n = domain.n
    rf = float(r)
    exact = u.exact and alphas.exact and _is_exact_scalar(r)
    regions = []  # (label, scale alpha_k or 1, inner radius float/exact, sign)
    for k in range(1, m):
        ak = float(alphas.alphas[k - 1])
        inner_q = to_fraction(alphas.alphas[k - 1]) * to_fraction(r) if exact else None
        regions.append(
            (f"scaled(alpha_{k})-minus-ball", ak, ak * rf, inner_q, 1 if k % 2 == 1 else -1)
        )
    regions.append(
        ("domain-minus-ball", 1.0, rf, to_fraction(r) if exact else None, 1 if m % 2 == 1 else -1)
    )

    labels, mins, counts = [], [], []
    ok = True
    per_region = max(1, sample_budget // len(regions))
    for label, scale, inner, inner_q, sign in regions:
        lo_min = None
        count = 0
        for _ in range(per_region * 4):
            if count >= per_region:
                break
            if n == 2:
                theta = rng.uniform(0.0, 2.0 * math.pi)
                direction = np.array([math.cos(theta), math.sin(theta)])
            else:
                direction = np.array([rng.gauss(0, 1) for _ in range(n)])
                direction /= np.linalg.norm(direction)
            rho = float(domain.radial(direction[None, :])[0]) * scale
            if rho <= inner * (1 + 1e-12):
                continue
            t = rng.uniform(inner, rho)
            x = center + t * direction
            if exact:
                xq = [Fraction(float(v)) for v in x]
                t2 = sum(
                    (Fraction(float(v)) - Fraction(float(c))) ** 2
                    for v, c in zip(x, center)
                )
                if not t2 > inner_q * inner_q:
                    continue
                val = u.evaluate_exact(xq)
                signed = sign * val.sign()
                fval = sign * val.to_float()
                if signed < 0:
                    ok = False
            else:
                fval = sign * float(u.eval_many(x[None, :])[0])
                if fval < -1e-9 * (abs(fval) + 1):
                    ok = False
            lo_min = fval if lo_min is None else min(lo_min, fval)
            count += 1
        labels.append(label)
        mins.append(lo_min)
        counts.append(count)
    return SignPatternReport(tuple(labels), tuple(mins), tuple(counts), ok)


def evaluate(f: Union[MultiPoly, PoleFunction], x: Sequence[Scalar]):
    """Value of f at x: exact Fraction on the fully exact polynomial path,
    float otherwise (see ``PoleFunction.evaluate_exact`` for certified signs)."""
    if isinstance(f, MultiPoly):
        return f.evaluate(x)
    if isinstance(f, PoleFunction):
        return f.evaluate(x)
    raise TypeError(f"unsupported operand {type(f)!r}")
