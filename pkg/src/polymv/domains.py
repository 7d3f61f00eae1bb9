"""Star-shaped domain geometry: radial boundary graphs around a center.

Every domain here is an open bounded set {x0 + t*d : 0 <= t < rho(d)} with a
positive radial function rho on the unit sphere.  Radial parameters are kept
as exact rationals so that rescaling acts exactly on the representation;
evaluation happens in floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre as npleg

from .coefficients import AlphaVector, to_fraction


@dataclass(frozen=True)
class StarDomain:
    """Star-shaped domain; ``params`` is kind-specific and exact.

    kinds: ``ball`` (r,), ``ellipse`` (semi-axes...), ``bump`` (r, eps, freq),
    ``table`` (angles..., radii...) in n = 2 only.
    """

    n: int
    kind: str
    params: tuple
    center: tuple

    # -- constructors -------------------------------------------------------

    @classmethod
    def ball(cls, r, n: int = 2, center: Sequence | None = None) -> "StarDomain":
        r = to_fraction(r)
        if r <= 0:
            raise ValueError("radius must be positive")
        return cls(n, "ball", (r,), cls._center(center, n))

    @classmethod
    def ellipsoid(cls, axes: Sequence, center: Sequence | None = None) -> "StarDomain":
        axes = tuple(to_fraction(a) for a in axes)
        if len(axes) < 2:
            raise ValueError("need at least two semi-axes")
        if any(a <= 0 for a in axes):
            raise ValueError("semi-axes must be positive")
        return cls(len(axes), "ellipse", axes, cls._center(center, len(axes)))

    @classmethod
    def bump(
        cls, r, eps, freq: int, n: int = 2, center: Sequence | None = None
    ) -> "StarDomain":
        """Perturbed ball rho = r (1 + eps * g); g = cos(freq*theta) in n=2 and
        the degree-freq Legendre profile of the polar angle in n=3."""
        r, eps = to_fraction(r), to_fraction(eps)
        if r <= 0:
            raise ValueError("radius must be positive")
        if not abs(eps) < 1:
            raise ValueError("|eps| must be below 1 to keep the boundary positive")
        if freq < 1 or int(freq) != freq:
            raise ValueError("frequency must be a positive integer")
        if n not in (2, 3):
            raise ValueError("bump domains are defined for n in {2, 3}")
        return cls(n, "bump", (r, eps, int(freq)), cls._center(center, n))

    @classmethod
    def from_table(
        cls, angles: Sequence, radii: Sequence, center: Sequence | None = None
    ) -> "StarDomain":
        """n=2 boundary given by samples (angle_i, rho_i); linear interpolation."""
        if len(angles) != len(radii) or len(angles) < 3:
            raise ValueError("need matching angle/radius samples, at least 3")
        ang = tuple(to_fraction(a) for a in angles)
        rad = tuple(to_fraction(r) for r in radii)
        if any(r <= 0 for r in rad):
            raise ValueError("radii must be positive")
        if any(b <= a for a, b in zip(ang, ang[1:])):
            raise ValueError("angles must be strictly increasing")
        return cls(2, "table", ang + rad, cls._center(center, 2))

    @staticmethod
    def _center(center, n) -> tuple:
        if center is None:
            return (Fraction(0),) * n
        if len(center) != n:
            raise ValueError("center dimension mismatch")
        return tuple(to_fraction(c) for c in center)

    # -- radial function -----------------------------------------------------

    def _f(self) -> tuple:
        cached = self.__dict__.get("_fparams")
        if cached is None:
            cached = tuple(float(p) for p in self.params)
            object.__setattr__(self, "_fparams", cached)
        return cached

    def center_f(self) -> np.ndarray:
        cached = self.__dict__.get("_fcenter")
        if cached is None:
            cached = np.array([float(c) for c in self.center])
            object.__setattr__(self, "_fcenter", cached)
        return cached

    def radial(self, dirs: np.ndarray) -> np.ndarray:
        """Boundary distance along each unit direction; dirs is (N, n)."""
        dirs = np.asarray(dirs, dtype=float)
        if dirs.ndim == 1:
            dirs = dirs[None, :]
        p = self._f()
        if self.kind == "ball":
            return np.full(dirs.shape[0], p[0])
        if self.kind == "ellipse":
            axes = np.array(p)
            return 1.0 / np.sqrt(np.einsum("ij,ij->i", dirs / axes, dirs / axes))
        if self.kind == "bump":
            r, eps, freq = p[0], p[1], int(p[2])
            if self.n == 2:
                theta = np.arctan2(dirs[:, 1], dirs[:, 0])
                return r * (1.0 + eps * np.cos(freq * theta))
            coeffs = np.zeros(freq + 1)
            coeffs[freq] = 1.0
            return r * (1.0 + eps * npleg.legval(dirs[:, 2], coeffs))
        if self.kind == "table":
            half = len(self.params) // 2
            ang = np.array(p[:half])
            rad = np.array(p[half:])
            theta = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2.0 * math.pi)
            return np.interp(
                theta,
                np.concatenate([ang, [ang[0] + 2.0 * math.pi]]),
                np.concatenate([rad, [rad[0]]]),
                period=2.0 * math.pi,
            )
        raise ValueError(f"unknown kind {self.kind!r}")

    def radial_at_angle(self, theta: np.ndarray) -> np.ndarray:
        if self.n != 2:
            raise ValueError("angle parametrization is n=2 only")
        theta = np.asarray(theta, dtype=float)
        return self.radial(np.column_stack([np.cos(theta), np.sin(theta)]))

    # -- descriptors -----------------------------------------------------------

    def spec_line(self) -> str:
        def fmt(v):
            fv = float(v)
            return f"{fv:.17g}"

        if self.kind == "ball":
            s = f"ball r={fmt(self.params[0])}"
        elif self.kind == "ellipse":
            names = "abc"[: len(self.params)]
            s = "ellipse " + " ".join(
                f"{nm}={fmt(v)}" for nm, v in zip(names, self.params)
            )
        elif self.kind == "bump":
            s = (
                f"bump r={fmt(self.params[0])} eps={fmt(self.params[1])}"
                f" freq={int(self.params[2])}"
            )
        else:
            s = f"table points={len(self.params) // 2}"
        if self.n != 2:
            s += f" n={self.n}"
        return s


def parse_domain(text: str) -> StarDomain:
    """Parse one-line domain descriptions: ``ball r=1``,
    ``ellipse a=1 b=1.2``, ``bump r=1 eps=0.2 freq=4`` (optionally ``n=3``)."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty domain description")
    kind = tokens[0].lower()
    kv = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ValueError(f"bad token {tok!r} in domain description")
        key, val = tok.split("=", 1)
        kv[key.lower()] = val
    n = int(kv.pop("n", "2"))

    def frac(s: str) -> Fraction:
        return Fraction(s)  # handles "1", "0.2", "1/4"

    if kind == "ball":
        return StarDomain.ball(frac(kv.pop("r")), n=n)
    if kind in ("ellipse", "ellipsoid"):
        axes = [frac(kv.pop(k)) for k in ("a", "b", "c", "d", "e") if k in kv]
        return StarDomain.ellipsoid(axes)
    if kind == "bump":
        return StarDomain.bump(
            frac(kv.pop("r")), frac(kv.pop("eps")), int(kv.pop("freq")), n=n
        )
    raise ValueError(f"unknown domain kind {kind!r}")


def rescale(domain: StarDomain, lam) -> StarDomain:
    """Dilation about the center: the radial function is multiplied by lam."""
    lam = to_fraction(lam)
    if lam <= 0:
        raise ValueError("scale factor must be positive")
    if domain.kind == "ball":
        params = (domain.params[0] * lam,)
    elif domain.kind == "ellipse":
        params = tuple(a * lam for a in domain.params)
    elif domain.kind == "bump":
        params = (domain.params[0] * lam,) + domain.params[1:]
    elif domain.kind == "table":
        half = len(domain.params) // 2
        params = domain.params[:half] + tuple(r * lam for r in domain.params[half:])
    else:
        raise ValueError(f"unknown kind {domain.kind!r}")
    return StarDomain(domain.n, domain.kind, params, domain.center)


def contains(domain: StarDomain, x: Sequence) -> bool:
    """Strict membership |x - x0| < rho(direction)."""
    x = np.asarray([float(v) for v in x])
    d = x - domain.center_f()
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        return True
    return dist < float(domain.radial((d / dist)[None, :])[0])


def inradius(domain: StarDomain) -> tuple[float, np.ndarray]:
    """Distance from the center to the boundary and a nearest boundary point.

    For a radial graph the boundary point along direction d sits at distance
    rho(d) from the center, so the inradius is simply min rho.
    """
    c = domain.center_f()
    if domain.kind == "ball":
        r = float(domain.params[0])
        direction = np.zeros(domain.n)
        direction[0] = 1.0
        return r, c + r * direction
    if domain.kind == "ellipse":
        axes = [float(a) for a in domain.params]
        i = int(np.argmin(axes))
        direction = np.zeros(domain.n)
        direction[i] = 1.0
        return axes[i], c + axes[i] * direction
    if domain.kind == "bump":
        r, eps, freq = float(domain.params[0]), float(domain.params[1]), int(domain.params[2])
        if domain.n == 2:
            theta = math.pi / freq if eps > 0 else 0.0
            rho = r * (1.0 - abs(eps))
            return rho, c + rho * np.array([math.cos(theta), math.sin(theta)])
        u, g = _legendre_extremum(freq, minimize=(eps > 0))
        rho = r * (1.0 + eps * g)
        direction = np.array([math.sqrt(max(0.0, 1.0 - u * u)), 0.0, u])
        return rho, c + rho * direction
    # table: exact minimum over the sample nodes (piecewise linear in between
    # stays above the smaller endpoint only in radius, so scan a dense grid)
    theta = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
    rho = domain.radial_at_angle(theta)
    i = int(np.argmin(rho))
    direction = np.array([math.cos(theta[i]), math.sin(theta[i])])
    return float(rho[i]), c + rho[i] * direction


def _legendre_extremum(freq: int, minimize: bool) -> tuple[float, float]:
    """Extremum of the Legendre profile on [-1, 1]: candidates are the
    endpoints and the roots of the derivative."""
    coeffs = np.zeros(freq + 1)
    coeffs[freq] = 1.0
    candidates = [-1.0, 1.0]
    der = npleg.legder(coeffs)
    roots = npleg.legroots(der)
    candidates.extend(float(u) for u in roots if abs(u.imag if np.iscomplexobj(u) else 0) < 1e-12 and -1 < u < 1)
    vals = [float(npleg.legval(u, coeffs)) for u in candidates]
    idx = int(np.argmin(vals)) if minimize else int(np.argmax(vals))
    return candidates[idx], vals[idx]


def max_radius(domain: StarDomain, resolution: int = 4096) -> float:
    """Maximum of the radial function (dense sample; exact for simple kinds)."""
    if domain.kind == "ball":
        return float(domain.params[0])
    if domain.kind == "ellipse":
        return float(max(domain.params))
    if domain.kind == "bump":
        r, eps, freq = float(domain.params[0]), float(domain.params[1]), int(domain.params[2])
        if domain.n == 2:
            return r * (1.0 + abs(eps))
        u, g = _legendre_extremum(freq, minimize=(eps < 0))
        return r * (1.0 + eps * g)
    theta = np.linspace(0.0, 2.0 * math.pi, resolution, endpoint=False)
    return float(np.max(domain.radial_at_angle(theta)))


def _boundary_points(domain: StarDomain, resolution: int) -> np.ndarray:
    c = domain.center_f()
    if domain.n == 2:
        theta = 2.0 * math.pi * np.arange(resolution) / resolution
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    elif domain.n == 3:
        k = max(8, int(round(math.sqrt(resolution / 2))))
        u = -1.0 + 2.0 * (np.arange(k + 1)) / k
        psi = 2.0 * math.pi * np.arange(2 * k) / (2 * k)
        uu, pp = np.meshgrid(u, psi, indexing="ij")
        s = np.sqrt(np.maximum(0.0, 1.0 - uu ** 2))
        dirs = np.column_stack(
            [(s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel(), uu.ravel()]
        )
    else:
        rng = np.random.default_rng(12345)
        dirs = rng.standard_normal((resolution, domain.n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rho = domain.radial(dirs)
    return c + rho[:, None] * dirs


def diameter(domain: StarDomain, angular_resolution: int = 2048) -> float:
    """Largest pairwise distance over sampled boundary points.

    The sample grids are nested under doubling, so the estimate is monotone
    nondecreasing in the resolution.
    """
    pts = _boundary_points(domain, angular_resolution)
    best = 0.0
    block = 512
    for i in range(0, len(pts), block):
        chunk = pts[i : i + block]
        d2 = np.sum((chunk[:, None, :] - pts[None, :, :]) ** 2, axis=2)
        best = max(best, float(np.sqrt(d2.max())))
    return best


def volume(domain: StarDomain, spec=None) -> float:
    """Measure of the domain, via the quadrature module with f = 1."""
    from . import quadrature

    return quadrature.volume(domain, spec)


def ball_volume(n: int, r: float) -> float:
    """pi^(n/2) r^n / Gamma(n/2 + 1)."""
    return math.pi ** (n / 2.0) * float(r) ** n / math.gamma(n / 2.0 + 1.0)


def inclusion_check(
    domain: StarDomain,
    alphas: AlphaVector,
    r,
    resolution: int = 4096,
) -> bool:
    """Scaled-copy inclusion chain: for k = 1, ..., m-1 the alpha_k-scaled
    domain must fit in the ball of radius alpha_{k+1} r.  (The matching lower
    inclusion, ball of radius alpha_k r inside the scaled domain, is automatic
    when r is the inradius.)  Evaluated on the radial function directly."""
    rho_max = max_radius(domain, resolution)
    rf = float(r)
    a = [float(v) for v in alphas.alphas]
    for k in range(len(a) - 1):
        if a[k] * rho_max > a[k + 1] * rf * (1.0 + 1e-12):
            return False
    return True


@dataclass(frozen=True)
class GeometryReport:
    """Measured geometry of a domain, with the resolutions that produced it."""

    inradius: float
    nearest_boundary_point: tuple
    diameter: float
    volume: float
    max_rho: float
    angular_resolution: int
    quad_spec: str


def geometry_report(domain: StarDomain, spec=None, angular_resolution: int = 2048) -> GeometryReport:
    r, zhat = inradius(domain)
    d = diameter(domain, angular_resolution)
    vol = volume(domain, spec)
    from . import quadrature

    spec_text = (spec or quadrature.QuadratureSpec()).text()
    return GeometryReport(
        inradius=r,
        nearest_boundary_point=tuple(float(v) for v in zhat),
        diameter=d,
        volume=vol,
        max_rho=max_radius(domain, angular_resolution),
        angular_resolution=angular_resolution,
        quad_spec=spec_text,
    )
