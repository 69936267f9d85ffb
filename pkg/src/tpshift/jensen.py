"""Zero counting and contour averages for the pure-Gaussian case.

A shift combination over a Gaussian generator extends to an entire function

    f(z) = sum_k c_k * amp * exp(-a*(z - k)**2),        a = pi**2/gamma,

whose zero set repeats vertically with period pi/a: if f(x) = 0 for real x
then f(x + i*pi*k/a) = 0 for every integer k.  Dividing out the order n of
f at the origin and normalizing,

    F(z) = C1 * z**(-n) * f(z) * exp((a/2) * z**2),  F(0) = 1,

is entire with |F(z)| <= C * exp((a/2)|z|^2).  The classical identity for
the zero counter n_F(t) = #{|z| <= t : F(z) = 0},

    integral_0^r n_F(t)/t dt = (1/2pi) integral_0^{2pi} log|F(r e^{i th})| dth,

ties the vertical-lattice zero count to a contour average bounded by
log(C)/r^2 + a/2 after dividing by r^2.  All magnitude work happens in
log space: exp((a/2) r^2) overflows doubles near r = 27 for a = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_hermite

from .density import circ_density_direct
from .errors import ChainViolationError, OrderDetectionError, PhaseTrackingError, \
    QuadratureError
from .sispace import PointSet, SISFunction, eval_f, find_zeros
from .generator import GeneratorParams

# Order detection: smallest derivative order at 0 clearly above noise.
ORDER_DETECT_TOL = 1e-8
ORDER_NOISE_FLOOR = 1e-12
MAX_ORDER = 6
# A zero this close to the counting circle makes phase tracking unreliable.
CIRCLE_CLEARANCE = 1e-6


def _require_gaussian(f: SISFunction):
    if f.params.m != 0:
        raise ValueError(
            "entire-extension machinery requires a pure Gaussian generator (m = 0)")


def _stable_terms(f: SISFunction, z):
    """Split f(z) into exp(scale) * inner with real scale = max term log-magnitude.

    inner is an order-one complex number unless the terms cancel; its
    magnitude is the size of f relative to the local term scale.
    """
    zz = np.asarray(z, dtype=complex)
    ks = f.coeffs.support_indices()
    cs = np.asarray(f.coeffs.coeffs)
    keep = cs != 0.0
    ks, cs = ks[keep], cs[keep]
    a = f.params.gauss_rate
    log_amp = math.log(f.params.time_amplitude)
    w = zz[..., None] - ks
    wr, wi = w.real, w.imag
    log_mag = log_amp + np.log(np.abs(cs)) - a * (wr * wr - wi * wi)
    phase = -2.0 * a * wr * wi + np.where(cs < 0, math.pi, 0.0)
    scale = np.max(log_mag, axis=-1)
    inner = np.sum(np.exp(log_mag - scale[..., None] + 1j * phase), axis=-1)
    return scale, inner


def log_abs_f_complex(f: SISFunction, z):
    """log|f(z)| for the entire extension, stable for large |Im z|.

    Returns -inf where the term sum cancels below the underflow floor.
    Accepts a scalar or an array of complex arguments.
    """
    _require_gaussian(f)
    scale, inner = _stable_terms(f, z)
    mag = np.abs(inner)
    with np.errstate(divide="ignore"):
        out = scale + np.log(mag)
    if np.ndim(z) == 0:
        return float(out[()])
    return out


def _derivatives_at_zero(f: SISFunction, max_order: int) -> list:
    """f^(j)(0) for j = 0..max_order from termwise Gaussian derivatives.

    d^j/dx^j exp(-a x^2) = a^(j/2) * (-1)^j * H_j(sqrt(a) x) * exp(-a x^2)
    with H_j the physicists' Hermite polynomial, so each derivative is an
    exact finite sum over the coefficient support.
    """
    a = f.params.gauss_rate
    amp = f.params.time_amplitude
    ks = f.coeffs.support_indices().astype(float)
    cs = np.asarray(f.coeffs.coeffs)
    base = amp * np.exp(-a * ks * ks)
    out = []
    for j in range(max_order + 1):
        h = eval_hermite(j, -math.sqrt(a) * ks)
        out.append(float(np.sum(cs * a ** (j / 2.0) * (-1) ** j * h * base)))
    return out


@dataclass(frozen=True)
class JensenContext:
    """Normalized entire extension of a Gaussian-case f and its real zeros.

    log_c1 normalizes F(0) = 1 for F(z) = C1 z^-n f(z) exp((a/2) z^2); n is
    the order of f at the origin; real_zeros excludes the origin.
    """

    f: SISFunction
    gauss_rate: float
    order: int
    log_c1: float
    real_zeros: PointSet

    @property
    def lattice_step(self) -> float:
        """Vertical period pi/a of the zero set of the extension."""
        return math.pi / self.gauss_rate


def build_context(f: SISFunction, zero_window: tuple = None) -> JensenContext:
    """Detect the order at the origin, normalize, and collect real zeros.

    The order n is the smallest derivative order at 0 with magnitude above
    ORDER_DETECT_TOL (orders up to MAX_ORDER); ambiguous magnitudes raise
    rather than misnormalize.  Real zeros come from a sign-change scan of the
    support window (or the window provided).
    """
    _require_gaussian(f)
    if f.coeffs.is_zero:
        raise ValueError("f must be nonzero")
    derivs = _derivatives_at_zero(f, MAX_ORDER)
    order = None
    for j, d in enumerate(derivs):
        if abs(d) > ORDER_DETECT_TOL:
            order = j
            break
    if order is None:
        raise OrderDetectionError(
            f"derivative magnitudes at orders 0..{MAX_ORDER} all below "
            f"{ORDER_DETECT_TOL} (floor {ORDER_NOISE_FLOOR}): {derivs}")
    log_c1 = math.lgamma(order + 1) - math.log(abs(derivs[order]))

    window = zero_window if zero_window is not None else f.support_window()
    zeros = find_zeros(f, window)
    pts = tuple(p for p in zeros.points if abs(p) > 1e-8)
    real_zeros = PointSet(points=pts, window=zeros.window,
                          touch_points=zeros.touch_points)
    return JensenContext(f=f, gauss_rate=f.params.gauss_rate, order=order,
                         log_c1=log_c1, real_zeros=real_zeros)


def lattice_zero_moduli(ctx: JensenContext, t: float) -> np.ndarray:
    """Sorted moduli of the vertical-lattice zeros x + i*(pi/a)*k with |z| <= t."""
    t = float(t)
    step = ctx.lattice_step
    lam = ctx.real_zeros.as_array()
    lam = np.abs(lam[np.abs(lam) <= t])
    mods = []
    for x in lam:
        kmax = int(math.floor(math.sqrt(max(t * t - x * x, 0.0)) / step))
        ks = np.arange(0, kmax + 1)
        m = np.sqrt(x * x + (step * ks) ** 2)
        m = m[m <= t]
        mods.append(m)
        mods.append(m[1:])  # negative k mirror
    if not mods:
        return np.empty(0)
    out = np.concatenate(mods)
    out.sort()
    return out


@dataclass(frozen=True)
class DiskZeroCount:
    """Zero count of F in a closed disk: lattice enumeration plus winding excess."""

    total: int
    lattice: int
    extra: int

    def __int__(self) -> int:
        return self.total


def _winding_number(ctx: JensenContext, t: float, n_start: int = 512,
                    n_max: int = 1 << 17) -> int:
    """Winding number of F around |z| = t by adaptive phase tracking.

    The phase of F along the contour is arg(f) - n*theta + (a/2) t^2 sin(2 theta)
    up to a constant; increments are accumulated from stabilized values of f
    and the grid is doubled until every increment is below pi/2 and two
    consecutive refinements agree on the integer winding.
    """
    a = ctx.gauss_rate
    n = ctx.order
    nt = n_start
    prev = None
    while nt <= n_max:
        theta = np.linspace(0.0, 2.0 * math.pi, nt + 1)
        zs = t * np.exp(1j * theta)
        _, inner = _stable_terms(ctx.f, zs)
        if np.any(np.abs(inner) == 0.0):
            raise PhaseTrackingError(f"contour |z|={t} passes through a zero")
        dphi = np.angle(inner[1:] * np.conj(inner[:-1]))
        incr = dphi - n * np.diff(theta) + 0.5 * a * t * t * np.diff(np.sin(2.0 * theta))
        if np.max(np.abs(dphi)) < 0.5 * math.pi and np.max(np.abs(incr)) < 0.5 * math.pi:
            w = float(np.sum(incr) / (2.0 * math.pi))
            k = int(round(w))
            if abs(w - k) < 0.01:
                if prev is not None and prev == k:
                    return k
                prev = k
            else:
                prev = None
        nt *= 2
    raise PhaseTrackingError(
        f"phase tracking did not stabilize at |z|={t} within {n_max} samples "
        "(zero near the contour?)")


def count_zeros_disk(ctx: JensenContext, t: float) -> DiskZeroCount:
    """Count zeros of F with |z| <= t.

    The vertical-lattice extension of the real zeros is enumerated exactly;
    the winding number of F over the circle counts all zeros, and the excess
    over the lattice count is reported separately (the zero set contains the
    lattice extension but equality is not promised).
    """
    t = float(t)
    if not t > 0:
        raise ValueError("t must be positive")
    mods = lattice_zero_moduli(ctx, t + 2.0 * CIRCLE_CLEARANCE)
    if mods.size and np.min(np.abs(mods - t)) < CIRCLE_CLEARANCE:
        raise ValueError(
            f"a lattice zero lies within {CIRCLE_CLEARANCE} of |z|={t}; perturb t")
    lattice = int(np.searchsorted(mods, t, side="right"))
    total = _winding_number(ctx, t)
    extra = total - lattice
    if extra < 0:
        raise PhaseTrackingError(
            f"winding count {total} below lattice count {lattice} at |z|={t}")
    return DiskZeroCount(total=total, lattice=lattice, extra=extra)


def jensen_lhs(ctx: JensenContext, r: float, verify_total: bool = False) -> float:
    """(1/r^2) integral_0^r n_F(t)/t dt from the enumerated lattice zeros.

    n_F(t)/t is piecewise constant with breakpoints at the zero moduli, so
    the integral telescopes exactly to sum over moduli m <= r of log(r/m).
    With verify_total, the disk count at r is cross-checked by the winding
    number first (propagating its errors).
    """
    r = float(r)
    if not r > 0:
        raise ValueError("r must be positive")
    if verify_total:
        count_zeros_disk(ctx, r)
    mods = lattice_zero_moduli(ctx, r)
    if mods.size == 0:
        return 0.0
    return float(np.sum(np.log(r / mods))) / (r * r)


def _contour_log_abs_F(ctx: JensenContext, r: float, nt: int) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * math.pi, nt, endpoint=False)
    zs = r * np.exp(1j * theta)
    log_f = log_abs_f_complex(ctx.f, zs)
    return (ctx.log_c1 - ctx.order * math.log(r) + log_f
            + 0.5 * ctx.gauss_rate * r * r * np.cos(2.0 * theta))


def jensen_rhs(ctx: JensenContext, r: float, n_theta: int = 64,
               tol: float = 1e-7) -> float:
    """(1/(2 pi r^2)) contour average of log|F(r e^{i theta})| by trapezoid.

    The grid is doubled until successive values differ by less than tol
    (default 1e-7: with a zero at clearance d the refinement error decays
    like exp(-n d / r), so the successive difference understates the true
    error and needs headroom).  Non-convergence signals a zero on or near
    the contour and the caller is expected to perturb r.
    """
    r = float(r)
    if n_theta < 64:
        raise ValueError("n_theta must be at least 64")
    prev = None
    nt = int(n_theta)
    while nt <= (1 << 18):
        vals = _contour_log_abs_F(ctx, r, nt)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError(f"contour |z|={r} hits a zero of F")
        cur = float(np.mean(vals)) / (r * r)
        if prev is not None and abs(cur - prev) < tol:
            return cur
        prev = cur
        nt *= 2
    raise QuadratureError(
        f"contour average at |z|={r} did not converge (zero near the contour?)")


def fit_growth_constant(ctx: JensenContext, radius: float, grid_step: float = 0.1,
                        extra_z: np.ndarray = None) -> float:
    """log(C) with C the empirical constant in |F(z)| <= C exp((a/2)|z|^2).

    Maximizes log|F(z)| - (a/2)|z|^2 over a grid of the disk |z| <= radius
    (plus any extra sample points, e.g. contour nodes so that contour
    averages are dominated by construction).  The maximum stabilizes as the
    grid radius grows.
    """
    xs = np.arange(-radius, radius + grid_step / 2, grid_step)
    zg = (xs[:, None] + 1j * xs[None, :]).ravel()
    zg = zg[(np.abs(zg) <= radius) & (np.abs(zg) > 0.05)]
    if extra_z is not None:
        zg = np.concatenate([zg, np.asarray(extra_z, dtype=complex).ravel()])
    log_f = log_abs_f_complex(ctx.f, zg)
    with np.errstate(invalid="ignore"):
        vals = (ctx.log_c1 - ctx.order * np.log(np.abs(zg)) + log_f
                + 0.5 * ctx.gauss_rate * (zg.real**2 - zg.imag**2)
                - 0.5 * ctx.gauss_rate * np.abs(zg) ** 2)
    vals = vals[np.isfinite(vals)]
    return float(np.max(vals))


def safe_radius(ctx: JensenContext, r: float, span: float = 0.25) -> float:
    """Deterministically nudge r upward to the radius in [r, r+span] farthest
    from every lattice-zero modulus (never closer than CIRCLE_CLEARANCE)."""
    mods = lattice_zero_moduli(ctx, r + span + 1.0)
    if mods.size == 0:
        return float(r)
    cands = r + np.arange(0, int(round(span / 1e-4)) + 1) * 1e-4
    dist = np.min(np.abs(mods[None, :] - cands[:, None]), axis=1)
    best = int(np.argmax(dist))
    if dist[best] < CIRCLE_CLEARANCE:
        raise PhaseTrackingError(f"no clear counting radius near {r}")
    return float(cands[best])


@dataclass(frozen=True)
class BaseCaseRow:
    r: float
    lhs: float
    rhs: float
    circ_scaled: float
    bound: float
    extra_zeros: int


@dataclass(frozen=True)
class BaseCaseReport:
    rows: tuple
    log_c_fit: float
    circ_values: tuple  # full-zero-set density profile values per radius

    def to_json_dict(self) -> dict:
        return {"log_c_fit": self.log_c_fit,
                "circ_values": list(self.circ_values),
                "rows": [{"r": w.r, "lhs": w.lhs, "rhs": w.rhs,
                          "circ_scaled": w.circ_scaled, "bound": w.bound,
                          "extra_zeros": w.extra_zeros} for w in self.rows]}


def verify_base_case(ctx: JensenContext, radii) -> BaseCaseReport:
    """Run the zero-count / contour-average / growth-bound chain per radius.

    Each nominal radius is nudged off the zero moduli, then the chain
        (a/2) * chord-density(real zeros) <= lhs ~ rhs <= log(C)/r^2 + a/2
    is checked with slack 20/r on the left link, 2e-6 between lhs and rhs
    (when the winding count confirms all zeros are enumerated), 1e-6 on the
    right link; the chord density of the full zero set must stay below
    1 + 40/r.  Violations raise with diagnostic values.
    """
    rs = [float(r) for r in radii]
    if not rs or any(r <= 0 for r in rs):
        raise ValueError("radii must be positive")
    a = ctx.gauss_rate
    lam = ctx.real_zeros
    full_pts = ctx.real_zeros.points
    if ctx.order >= 1:
        full_pts = tuple(sorted(full_pts + (0.0,)))
    full = PointSet(points=full_pts, window=ctx.real_zeros.window)

    rows = []
    contour_samples = []
    results = []
    for r0 in rs:
        r = safe_radius(ctx, r0)
        count = count_zeros_disk(ctx, r)
        lhs = jensen_lhs(ctx, r)
        rhs = jensen_rhs(ctx, r)
        # Keep trapezoid nodes in the growth fit so rhs <= bound structurally.
        theta = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
        contour_samples.append(r * np.exp(1j * theta))
        circ = circ_density_direct(lam, [r]).values[0] if len(lam) else 0.0
        circ_full = circ_density_direct(full, [r]).values[0] if len(full) else 0.0
        results.append((r, count, lhs, rhs, circ, circ_full))

    log_c = fit_growth_constant(ctx, radius=max(r for r, *_ in results) + 0.5,
                                extra_z=np.concatenate(contour_samples))

    circ_values = []
    for r, count, lhs, rhs, circ, circ_full in results:
        bound = log_c / (r * r) + 0.5 * a
        if count.extra == 0 and abs(lhs - rhs) > 2e-6:
            raise ChainViolationError(
                f"zero-sum {lhs} and contour average {rhs} disagree at r={r} "
                f"with all zeros enumerated")
        if rhs > bound + 1e-6 or lhs > bound + 1e-6:
            raise ChainViolationError(
                f"growth bound violated at r={r}: lhs={lhs} rhs={rhs} bound={bound}")
        if 0.5 * a * circ > lhs + 20.0 / r:
            raise ChainViolationError(
                f"scaled chord density {0.5 * a * circ} exceeds zero sum {lhs} "
                f"+ 20/r at r={r}")
        if circ_full > 1.0 + 40.0 / r:
            raise ChainViolationError(
                f"zero-set chord density {circ_full} exceeds 1 + 40/r at r={r}")
        rows.append(BaseCaseRow(r=r, lhs=lhs, rhs=rhs, circ_scaled=0.5 * a * circ,
                                bound=bound, extra_zeros=count.extra))
        circ_values.append(circ_full)
    return BaseCaseReport(rows=tuple(rows), log_c_fit=log_c,
                          circ_values=tuple(circ_values))
