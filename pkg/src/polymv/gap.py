"""Mean-value residuals, the gap normalizer, and rigidity/stability reports.

The central objects: the residual of the solid mean value identity on balls
and on general star-shaped domains (with the outermost radius pinned to 1 and
the domain itself as averaging set), the normalizer M (mean of the absolute
value of the signed combination), and their ratio.  The ratio is a *lower
bound* for the supremal gap of the domain: only specific candidates and alpha
grids are ever evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from . import domains as dm
from . import quadrature as qd
from .coefficients import AlphaVector, coefficients, to_fraction
from .symbolic import MultiPoly, PoleFunction, almansi_sample, kuran_function

# The normalizer integrand carries absolute-value kinks along curves, so it
# converges slowly under refinement; its tolerance is floored accordingly.
# The gap only needs the normalizer to a few digits.
M_ALPHA_TOL_FLOOR = 1e-4
DEGENERATE_GUARD = 1e-12


class DegenerateCandidateError(RuntimeError):
    """The normalizer vanished relative to the candidate's sup-norm."""


@dataclass(frozen=True)
class GapReport:
    """One gap evaluation: geometry, residual, normalizer, ratio, bounds."""

    m: int
    n: int
    domain: str
    candidate: str
    alphas: tuple
    inradius: float
    diameter: float
    volume: float
    ball_volume: float
    vol_diff: float
    vol_ratio: float
    residual: float
    m_alpha: float
    gap: float
    finiteness_bound: float
    bound_factor: float
    stability_ratio: float | None
    note: str
    quad_spec: str
    seed: int = 0

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError("gap must be nonnegative")
        slack = 1e-6 * max(1.0, self.finiteness_bound)
        if self.gap > self.finiteness_bound + slack:
            raise ValueError(
                f"gap {self.gap} violates the finiteness bound {self.finiteness_bound}"
            )

    def to_json_dict(self) -> dict:
        out = {
            "m": self.m,
            "n": self.n,
            "domain": self.domain,
            "candidate": self.candidate,
            "alphas": [float(a) for a in self.alphas],
            "inradius": self.inradius,
            "diameter": self.diameter,
            "volume": self.volume,
            "ball_volume": self.ball_volume,
            "vol_diff": self.vol_diff,
            "vol_ratio": self.vol_ratio,
            "residual": self.residual,
            "m_alpha": self.m_alpha,
            "gap_lower_bound": self.gap,
            "finiteness_bound": self.finiteness_bound,
            "bound_factor": self.bound_factor,
            "stability_ratio": self.stability_ratio,
            "note": self.note,
            "quad_spec": self.quad_spec,
            "seed": self.seed,
        }
        return out


def _vector_fn(u) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(u, (MultiPoly, PoleFunction)):
        return u.eval_many
    if callable(u):
        return lambda pts: np.asarray(u(pts), dtype=float)
    raise TypeError(f"unsupported candidate type {type(u)!r}")


def _pole_of(u) -> np.ndarray | None:
    if isinstance(u, PoleFunction) and any(e != 0 for e in u.terms):
        return np.array([float(z) for z in u.pole])
    return None


def mvp_residual(
    u,
    x0: Sequence,
    r,
    alphas: AlphaVector,
    spec: qd.QuadratureSpec | None = None,
) -> float:
    """|u(x0) - sum_k (-1)^(k+1) c_k avg(u over ball of radius alpha_k r)|.

    Vanishes (up to quadrature error) exactly when u is m-polyharmonic on a
    neighborhood of the closed ball of radius r around x0.
    """
    spec = spec or qd.QuadratureSpec()
    n = len(x0)
    fn = _vector_fn(u)
    x0a = np.asarray([float(v) for v in x0])
    u0 = float(fn(x0a[None, :])[0])
    cs = coefficients(alphas).as_floats()
    total = 0.0
    for k, (a, c) in enumerate(zip(alphas.alphas, cs), start=1):
        ball = dm.StarDomain.ball(
            to_fraction(a) * to_fraction(r), n=n, center=[to_fraction(v) for v in x0]
        )
        avg = qd.average(u, ball, spec)
        total += (1.0 if k % 2 == 1 else -1.0) * c * avg
    return abs(u0 - total)


def _validate_free_alphas(alphas_free: Sequence, r: float, d: float) -> AlphaVector:
    full = AlphaVector(tuple(alphas_free) + (1,), cap=None)
    cap = r / d
    last_free = float(full.alphas[-2])
    if last_free > cap * (1.0 + 1e-9):
        raise ValueError(
            f"alpha_(m-1)={last_free} exceeds inradius/diameter ratio {cap}"
        )
    return full


def _combined_integrand(u_fn, x0: np.ndarray, alphas_full, coeffs, m: int):
    """(-1)^(m+1) c_m u(y) + sum_{k<m} (-1)^(k+1) c_k u(x0 + alpha_k (y-x0))."""
    sign_m = 1.0 if m % 2 == 1 else -1.0

    def g(pts: np.ndarray) -> np.ndarray:
        acc = sign_m * coeffs[m - 1] * u_fn(pts)
        for k in range(1, m):
            sign = 1.0 if k % 2 == 1 else -1.0
            scaled = x0[None, :] + float(alphas_full[k - 1]) * (pts - x0[None, :])
            acc = acc + sign * coeffs[k - 1] * u_fn(scaled)
        return acc

    return g


def _geometry(domain: dm.StarDomain, spec: qd.QuadratureSpec, angular_resolution=2048):
    r, zhat = dm.inradius(domain)
    d = dm.diameter(domain, angular_resolution)
    vol = qd.volume(domain, spec)
    return r, zhat, d, vol


def domain_mvp_residual(
    u,
    domain: dm.StarDomain,
    alphas_free: Sequence,
    spec: qd.QuadratureSpec | None = None,
    x0: Sequence | None = None,
    geometry=None,
) -> float:
    """Residual of the identity with the domain itself as averaging set.

    The outermost radius is pinned to 1; the m-1 free radii must not exceed
    the inradius/diameter ratio of the domain.
    """
    spec = spec or qd.QuadratureSpec()
    if x0 is not None and tuple(to_fraction(v) for v in x0) != domain.center:
        raise ValueError("base point must be the star center of the domain")
    r, zhat, d, vol = geometry or _geometry(domain, spec)
    full = _validate_free_alphas(alphas_free, r, d)
    m = full.m
    cs = coefficients(full).as_floats()
    fn = _vector_fn(u)
    center = domain.center_f()
    u0 = float(fn(center[None, :])[0])
    g = _combined_integrand(fn, center, full.as_floats(), cs, m)
    pole = _pole_of(u)
    sing = None if pole is None else pole - center
    total, _ = qd.integrate(g, domain, spec, singular_dir=sing)
    return abs(u0 - total / vol)


def m_alpha(
    u,
    domain: dm.StarDomain,
    alphas_free: Sequence,
    spec: qd.QuadratureSpec | None = None,
    x0: Sequence | None = None,
    geometry=None,
) -> float:
    """Mean over the domain of |signed combination|; the gap normalizer."""
    spec = spec or qd.QuadratureSpec()
    if x0 is not None and tuple(to_fraction(v) for v in x0) != domain.center:
        raise ValueError("base point must be the star center of the domain")
    r, zhat, d, vol = geometry or _geometry(domain, spec)
    full = _validate_free_alphas(alphas_free, r, d)
    m = full.m
    cs = coefficients(full).as_floats()
    fn = _vector_fn(u)
    center = domain.center_f()
    g = _combined_integrand(fn, center, full.as_floats(), cs, m)
    sup = {"v": 0.0}

    def abs_g(pts: np.ndarray) -> np.ndarray:
        vals = np.abs(g(pts))
        if len(vals):
            sup["v"] = max(sup["v"], float(vals.max()))
        return vals

    m_spec = replace(spec, tol=max(spec.tol, M_ALPHA_TOL_FLOOR))
    pole = _pole_of(u)
    sing = None if pole is None else pole - center
    total, _ = qd.integrate(abs_g, domain, m_spec, singular_dir=sing)
    value = total / vol
    if value < DEGENERATE_GUARD * sup["v"] or sup["v"] == 0.0:
        raise DegenerateCandidateError(
            f"normalizer {value} is degenerate against sup-norm {sup['v']}"
        )
    return value


def gap_term(
    u,
    domain: dm.StarDomain,
    alphas_free: Sequence,
    spec: qd.QuadratureSpec | None = None,
    candidate: str = "user",
    x0: Sequence | None = None,
    geometry=None,
    seed: int = 0,
) -> GapReport:
    """Residual over normalizer for one candidate and one alpha tuple."""
    spec = spec or qd.QuadratureSpec()
    geometry = geometry or _geometry(domain, spec)
    r, zhat, d, vol = geometry
    residual = domain_mvp_residual(u, domain, alphas_free, spec, x0, geometry)
    normalizer = m_alpha(u, domain, alphas_free, spec, x0, geometry)
    gap = residual / normalizer
    m = len(alphas_free) + 1
    ball_vol = dm.ball_volume(domain.n, r)
    vol_diff = max(0.0, vol - ball_vol)
    vol_ratio = vol_diff / vol
    bound = vol / ball_vol + 1.0
    bound_factor = (d / r) ** (m * m - m)
    note = ""
    if vol_ratio < 1e-9:
        note = "exact-ball"
        stability_ratio = None
    else:
        stability_ratio = vol_ratio / (bound_factor * gap) if gap > 0 else math.inf
    return GapReport(
        m=m,
        n=domain.n,
        domain=domain.spec_line(),
        candidate=candidate,
        alphas=tuple(float(a) for a in alphas_free) + (1.0,),
        inradius=r,
        diameter=d,
        volume=vol,
        ball_volume=ball_vol,
        vol_diff=vol_diff,
        vol_ratio=vol_ratio,
        residual=residual,
        m_alpha=normalizer,
        gap=gap,
        finiteness_bound=bound,
        bound_factor=bound_factor,
        stability_ratio=stability_ratio,
        note=note,
        quad_spec=spec.text(),
        seed=seed,
    )


def geometric_alpha_tuple(m: int, ratio: float) -> tuple:
    """Free radii (x^(m-1), ..., x) for the geometric family with ratio x."""
    return tuple(ratio ** (m - k) for k in range(1, m))


def default_alpha_grid(m: int, r: float, d: float) -> list:
    """Geometric tuples for x in {r/(2d), r/(1.5d), r/d}; the first one is the
    choice used by the stability argument."""
    ratios = []
    for div in (2.0, 1.5, 1.0):
        x = r / (div * d)
        if 0 < x < 1 and x not in ratios:
            ratios.append(x)
    return [geometric_alpha_tuple(m, x) for x in ratios]


def kuran_candidate(
    domain: dm.StarDomain, alphas_free: Sequence, r: float, zhat: Sequence
) -> PoleFunction:
    """The rigidity candidate for this domain: pole at a nearest boundary
    point, radii from the given alpha tuple (outermost pinned to 1)."""
    full = AlphaVector(tuple(alphas_free) + (1,))
    return kuran_function(float(r), [float(v) for v in zhat], full, domain.n)


def _almansi_scaled(m: int, n: int, degree: int, seed: int, center: np.ndarray, r: float):
    poly = almansi_sample(m, n, degree, seed)

    def fn(pts: np.ndarray) -> np.ndarray:
        return poly.eval_many((np.asarray(pts, float) - center[None, :]) / r)

    return fn


def gm_lower_bound(
    domain: dm.StarDomain,
    m: int,
    spec: qd.QuadratureSpec | None = None,
    candidates: Sequence = ("kuran", "almansi"),
    alpha_grid: Sequence | None = None,
    seed: int = 0,
    almansi_degree: int = 4,
    x0: Sequence | None = None,
) -> GapReport:
    """Best (largest) gap over the candidate set and the alpha grid.

    Always a lower bound for the supremal gap; the report records the argmax.
    """
    spec = spec or qd.QuadratureSpec()
    if x0 is not None and tuple(to_fraction(v) for v in x0) != domain.center:
        raise ValueError("base point must be the star center of the domain")
    geometry = _geometry(domain, spec)
    r, zhat, d, vol = geometry
    grid = list(alpha_grid) if alpha_grid is not None else default_alpha_grid(m, r, d)
    if not grid:
        raise ValueError("empty alpha grid")
    best: GapReport | None = None
    degenerate = 0
    total = 0
    for alphas_free in grid:
        for cand in candidates:
            total += 1
            if cand == "kuran":
                u = kuran_candidate(domain, alphas_free, r, zhat)
                label = "kuran"
            elif cand == "almansi":
                u = _almansi_scaled(m, domain.n, almansi_degree, seed, domain.center_f(), r)
                label = f"almansi(seed={seed})"
            else:
                u = cand
                label = "user"
            try:
                rep = gap_term(
                    u, domain, alphas_free, spec,
                    candidate=label, geometry=geometry, seed=seed,
                )
            except DegenerateCandidateError:
                degenerate += 1
                continue
            if best is None or rep.gap > best.gap:
                best = rep
    if best is None:
        raise DegenerateCandidateError(
            f"all {degenerate}/{total} candidate evaluations were degenerate"
        )
    return best


def stability_check(
    domain: dm.StarDomain,
    m: int,
    spec: qd.QuadratureSpec | None = None,
    seed: int = 0,
    candidates: Sequence = ("kuran",),
    x0: Sequence | None = None,
) -> GapReport:
    """Quantitative rigidity: compares the volume defect ratio against the
    computed gap lower bound times (diameter/inradius)^(m^2 - m).

    The reported stability ratio is the empirical constant for this domain;
    on an exact ball both sides vanish and the ratio is reported as such.
    """
    return gm_lower_bound(
        domain, m, spec, candidates=candidates, seed=seed, x0=x0
    )
