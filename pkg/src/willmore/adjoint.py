"""Adjoint transforms of Willmore surfaces on sampled grids.

mu-fields live on a uniform square grid in the z-chart.  The co-touch
(Riccati) equation theta = mu_z - mu^2/2 - s = 0 is solved by the Bernoulli
substitution mu = mu0 + 1/w around the known dual solution mu0 of a minimal
surface; w is integrated along grid rows as a complexified characteristic:
for each target point the antiholomorphic argument is frozen at that point's
zbar, which is what makes the row ODE consistent with the Wirtinger PDE.

Grid derivatives (mu_z, the induced metric of the adjoint, the rebuilt frame
of the adjoint surface) use 4th-order central differences; the corresponding
tolerances are differencing-limited by design.
"""

import numpy as np
from dataclasses import dataclass, field

from . import jets as J
from . import moebius as mo
from .errors import (BlowUp, GridTooCoarse, NotImmersed, UmbilicPoint)
from .minkowski import metric_signs


# ---------------------------------------------------------------------------
# Grids and finite differences
# ---------------------------------------------------------------------------

@dataclass
class GridSpec:
    center: complex = 0.3 + 0.3j
    half: float = 0.1
    n: int = 41

    def axes(self):
        x = np.real(self.center) + np.linspace(-self.half, self.half, self.n)
        y = np.imag(self.center) + np.linspace(-self.half, self.half, self.n)
        return x, y

    def points(self):
        x, y = self.axes()
        return x[None, :] + 1j * y[:, None]

    @property
    def h(self):
        return 2.0 * self.half / (self.n - 1)


def _d6(a, axis, h):
    """6th-order central difference along an axis; borders become NaN."""
    if a.shape[axis] < 7:
        raise GridTooCoarse("need at least 7 points per axis")
    out = (np.roll(a, 3, axis) - 9 * np.roll(a, 2, axis)
           + 45 * np.roll(a, 1, axis) - 45 * np.roll(a, -1, axis)
           + 9 * np.roll(a, -2, axis) - np.roll(a, -3, axis)) / (-60.0 * h)
    idx = [slice(None)] * a.ndim
    for border in (slice(0, 3), slice(-3, None)):
        idx[axis] = border
        out[tuple(idx)] = np.nan
    return out


def fd_dz(a, grid):
    return 0.5 * (_d6(a, 1, grid.h) - 1j * _d6(a, 0, grid.h))


def fd_dzb(a, grid):
    return 0.5 * (_d6(a, 1, grid.h) + 1j * _d6(a, 0, grid.h))


def grid_frames(surface, grid, order=4):
    """Moebius frame field on the grid, reshaped to [n, n, ...]."""
    pts = grid.points().ravel()
    return mo.frame_field(surface, pts, order=order)


def _reshape(field_flat, grid):
    return field_flat.reshape((grid.n, grid.n) + field_flat.shape[1:])


# ---------------------------------------------------------------------------
# Pointwise adjoint data
# ---------------------------------------------------------------------------

def dual_mu(frame, umbilic_tol=1e-12):
    """Least-squares mu_bar with D_zbar kappa + (mu_bar/2) kappa = 0.

    Returns (mu_bar, residual) with the residual relative to |D_zbar kappa|.
    Raises UmbilicPoint when kappa vanishes at a sample.
    """
    dzb_k = J.jval(mo.normal_d(frame.kappa, frame, "zb", check=False))
    kv = frame.kappa_value()
    g = metric_signs(frame.dim)
    kk = np.einsum("...d,...d->...", kv * g, np.conj(kv)).real
    if np.any(kk <= umbilic_tol):
        raise UmbilicPoint("kappa vanishes at a sample point")
    num = np.einsum("...d,...d->...", dzb_k * g, np.conj(kv))
    mu_bar = -2.0 * num / kk
    resid_vec = dzb_k + 0.5 * mu_bar[..., None] * kv
    scale = np.linalg.norm(dzb_k, axis=-1) + np.linalg.norm(kv, axis=-1) * np.abs(mu_bar) / 2
    residual = np.linalg.norm(resid_vec, axis=-1) / (scale + 1e-300)
    return mu_bar, residual


def s_willmore_test(frame, tol=1e-7):
    """True iff D_zbar kappa is parallel to kappa at every sample.

    Uses the scale-free chi0 magnitude, so rescaling kappa cannot change
    the verdict.  Requires at least 20 samples.
    """
    if frame.kappa_value().shape[0] < 20:
        raise ValueError("need at least 20 samples for the S-Willmore verdict")
    _, chi_norm, _, _ = mo.chi0_theta0(frame, relative=True)
    return bool(np.max(chi_norm) < tol), float(np.max(chi_norm))


def conformal_roots(frame, tol=1e-8):
    """Solve (mu_bar^2/4)<k,k> + mu_bar <k, Dzb k> + <Dzb k, Dzb k> = 0.

    Classification: <k,k> == 0 -> "all" (any co-touch solution is adjoint);
    Theta0 != 0 -> "two"; Theta0 == 0 with <k,k> != 0 -> "one".
    """
    u = J.jval(mo.normal_d(frame.kappa, frame, "zb", check=False))
    v = frame.kappa_value()
    g = metric_signs(frame.dim)
    A = 0.25 * np.einsum("...d,...d->...", v * g, v)
    B = np.einsum("...d,...d->...", v * g, u)
    C = np.einsum("...d,...d->...", u * g, u)
    scale = (np.linalg.norm(v, axis=-1) ** 2 + 1e-300)
    _, _, theta0, _ = mo.chi0_theta0(frame)
    th_scale = (np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1)) ** 2 + 1e-300
    if np.all(np.abs(A) < tol * scale / 4):
        return {"case": "all", "roots": None,
                "theta0_max": float(np.max(np.abs(theta0) / th_scale))}
    disc = B ** 2 - 4 * A * C
    sq = np.sqrt(disc.astype(complex))
    r1 = (-B + sq) / (2 * A)
    r2 = (-B - sq) / (2 * A)
    if np.all(np.abs(theta0) < tol * th_scale):
        return {"case": "one", "roots": (r1,),
                "theta0_max": float(np.max(np.abs(theta0) / th_scale))}
    return {"case": "two", "roots": (r1, r2),
            "theta0_max": float(np.max(np.abs(theta0) / th_scale))}


def adjoint_lift(mu, frame):
    """Yhat = |mu|^2/2 Y + mu_bar Y_z + mu Y_zbar + N (values)."""
    mu = np.asarray(mu)
    Y = J.jval(frame.Y)
    Yz = J.jval(frame.Yz)
    Yzb = J.jval(frame.Yzb)
    N = J.jval(frame.N)
    m2 = (np.abs(mu) ** 2)[..., None]
    return 0.5 * m2 * Y + np.conj(mu)[..., None] * Yz + mu[..., None] * Yzb + N


def eta_field(mu, frame):
    """eta = D_zbar kappa + (mu_bar/2) kappa (values)."""
    dzb_k = J.jval(mo.normal_d(frame.kappa, frame, "zb", check=False))
    return dzb_k + 0.5 * np.conj(mu)[..., None] * frame.kappa_value()


def co_touch_residual(mu, frame, grid):
    """theta = mu_z - mu^2/2 - s on the grid interior (4th-order FD)."""
    mu = np.asarray(mu).reshape(grid.n, grid.n)
    s = _reshape(J.jval(frame.s), grid)
    mu_z = fd_dz(mu, grid)
    return mu_z - 0.5 * mu ** 2 - s


def rho_and_metric(mu, frame, grid):
    """rho = mu_bar_z - 2<kappa, kappabar>, the adjoint metric, and the
    metric-identity residual on the grid.

    Expanding Yhat_z in the frame (co-touch assumed) gives

        <Yhat_z, Yhat_zbar> = |rho|^2 / 2 + 4 <eta, etabar>,

    which reduces to the dual-surface identity |rho|^2/2 when eta = 0.  The
    residual is relative to the local term scale, so it is meaningful for
    adjoint lifts of any magnitude.
    """
    mu = np.asarray(mu).reshape(grid.n, grid.n)
    kv = _reshape(frame.kappa_value(), grid)
    g = metric_signs(kv.shape[-1])
    kk = np.einsum("...d,...d->...", kv * g, np.conj(kv)).real
    rho = fd_dz(np.conj(mu), grid) - 2.0 * kk
    Yhat = _reshape(adjoint_lift(mu.ravel(), frame), grid)
    Yh_z = fd_dz(Yhat, grid)
    Yh_zb = fd_dzb(Yhat, grid)
    metric = np.einsum("...d,...d->...", Yh_z * metric_signs(Yhat.shape[-1]),
                       Yh_zb)
    eta = _reshape(eta_field(mu.ravel(), frame), grid)
    eta2 = np.einsum("...d,...d->...", eta * g, np.conj(eta)).real
    scale = np.maximum.reduce([np.abs(metric), 0.5 * np.abs(rho) ** 2,
                               4.0 * np.abs(eta2),
                               np.ones_like(np.abs(metric))])
    identity = np.abs(metric - 0.5 * np.abs(rho) ** 2 - 4.0 * eta2) / scale
    return rho, metric, identity


# ---------------------------------------------------------------------------
# Riccati extension (Bernoulli substitution along complexified rows)
# ---------------------------------------------------------------------------

class _PolarizedDual:
    """mu0(zeta, xi) = <F''(zeta), G'(xi)> / <F'(zeta), G'(xi)>,
    G = conjugate-coefficient copy of F; on xi = conj(zeta) this is the dual
    Riccati solution mu0 = 2 omega_z of the minimal surface.

    Evaluation runs in extended precision (clongdouble): the Riccati field is
    later differenced to fourth order, which amplifies pointwise evaluation
    noise by h^-4, so a double-precision floor would dominate the adjoint
    Willmore residual.
    """

    def __init__(self, surface):
        F1 = surface.F.derivative()
        F2 = F1.derivative()
        self._n1 = _ld_coeffs(F1)
        self._n2 = _ld_coeffs(F2)
        self._d1 = (F1.a, F1.b, F1.n)
        self._d2 = (F2.a, F2.b, F2.n)

    @staticmethod
    def _den(z, abn):
        a, b, n = abn
        return z ** a * (z ** n - 1.0) ** b

    def __call__(self, zeta, xi):
        zeta = np.asarray(zeta, dtype=np.clongdouble)
        xi = np.asarray(xi, dtype=np.clongdouble)
        g = np.conj(_horner(self._n1, np.conj(xi))) / \
            np.conj(self._den(np.conj(xi), self._d1))[..., None]
        f2 = _horner(self._n2, zeta) / self._den(zeta, self._d2)[..., None]
        f1 = _horner(self._n1, zeta) / self._den(zeta, self._d1)[..., None]
        num = (f2 * g).sum(axis=-1)
        den = (f1 * g).sum(axis=-1)
        return num / den


def _ld_coeffs(f):
    """Numerator coefficients of a VRatFn as a clongdouble array [dim, deg+1]."""
    deg = max((p.degree() for p in f.nums), default=0)
    out = np.zeros((f.dim, deg + 1), dtype=np.clongdouble)
    for i, p in enumerate(f.nums):
        for k, c in enumerate(p.coeffs):
            re = np.longdouble(int(c.re.numerator)) / np.longdouble(int(c.re.denominator))
            im = np.longdouble(int(c.im.numerator)) / np.longdouble(int(c.im.denominator))
            out[i, k] = re + 1j * im
    return out


def _horner(coeffs, z):
    """Horner evaluation of [dim, deg+1] coefficients at z; -> z.shape + (dim,)."""
    acc = np.zeros(np.shape(z) + (coeffs.shape[0],), dtype=np.clongdouble)
    for k in range(coeffs.shape[1] - 1, -1, -1):
        acc = acc * np.asarray(z)[..., None] + coeffs[:, k]
    return acc


@dataclass
class RiccatiResult:
    mu: np.ndarray           # [n, n], NaN on the blow-up locus
    mu0: np.ndarray          # dual solution on the grid diagonal
    w: np.ndarray
    blowup_mask: np.ndarray
    grid: GridSpec


def riccati_extend(surface, grid, g_init=0.6, substeps=2, blowup_tol=1e-7,
                   direction="lr"):
    """Extend the dual Riccati solution: mu = mu0 + 1/w, w_z = -mu0 w - 1/2.

    w is the polarized Bernoulli variable w(zeta, xi) with initial data
    w(zeta0, xi) = g(xi) posed at the single base point zeta0 (grid center of
    the left column; xi plays the role of zbar).  Every grid target keeps its
    own frozen xi = zbar(target) while zeta travels from zeta0 (vertical leg
    to the target row, then horizontally along it), so the grid field is the
    diagonal restriction of one smooth solution and satisfies the Wirtinger
    co-touch PDE.  g_init may be a constant or a callable of zbar; None
    encodes g == inf, returning mu = mu0 itself.

    direction="rl" integrates the rows right-to-left from consistent data
    (the left-to-right solution transported along the base row); used by the
    path-invariance check.

    Points where w crosses zero are the adjoint branch locus: masked NaN and
    reported, never interpolated across.
    """
    mu0 = _PolarizedDual(surface)
    x, y = grid.axes()
    n = grid.n
    pts = grid.points()
    mu0_diag = mu0(pts, np.conj(pts))
    if g_init is None:
        w = np.full((n, n), np.inf, dtype=complex)
        return RiccatiResult(mu=mu0_diag.copy(), mu0=mu0_diag, w=w,
                             blowup_mask=np.zeros((n, n), bool), grid=grid)

    gfun = g_init if callable(g_init) else (lambda zb: np.full_like(
        zb, g_init, dtype=np.clongdouble))
    qc = n // 2
    hx = np.longdouble(x[-1] - x[0]) / (n - 1) / substeps
    hy = np.longdouble(y[-1] - y[0]) / (n - 1) / substeps

    def rhs(Z, Wv, xi):
        return -mu0(Z, xi) * Wv - 0.5

    def march_x(w, xi, y_level, p_from, p_to):
        """Advance w along the row y_level from column p_from to p_to."""
        step = 1 if p_to >= p_from else -1
        h = hx * step
        p = p_from
        while p != p_to:
            zeta = x[p] + 1j * y_level
            for _ in range(substeps):
                w = _rk4_step(lambda Z, Wv: rhs(Z, Wv, xi), zeta, w, h)
                zeta = zeta + h
            p += step
        return w

    def march_y(w, xi, x_level, q_from, q_to):
        step = 1 if q_to >= q_from else -1
        h = hy * step
        q = q_from
        while q != q_to:
            yv = y[q]
            for _ in range(substeps):
                w = _rk4_step(lambda Y_, Wv: 1j * rhs(x_level + 1j * Y_, Wv, xi),
                              yv, w, h)
                yv = yv + h
            q += step
        return w

    base_col = 0 if direction == "lr" else n - 1
    mu = np.empty((n, n), dtype=np.clongdouble)
    wgrid = np.empty((n, n), dtype=np.clongdouble)
    for q in range(n):
        xi = (x - 1j * y[q]).astype(np.clongdouble)   # frozen zbar per target
        w = gfun(xi).astype(np.clongdouble)
        if direction == "rl":
            # transport the initial data along the base row to the right edge
            w = march_x(w, xi, y[qc], 0, n - 1)
        w = march_y(w, xi, x[base_col], qc, q)
        if direction == "lr":
            wgrid[q, 0] = w[0]
            for p in range(n - 1):
                w = march_x(w, xi, y[q], p, p + 1)
                wgrid[q, p + 1] = w[p + 1]
        else:
            wgrid[q, n - 1] = w[n - 1]
            for p in range(n - 1, 0, -1):
                w = march_x(w, xi, y[q], p, p - 1)
                wgrid[q, p - 1] = w[p - 1]
        mu[q] = mu0_diag[q] + 1.0 / wgrid[q]
    blow = np.abs(wgrid).astype(float) < blowup_tol
    mu[blow] = np.nan
    return RiccatiResult(mu=mu, mu0=mu0_diag, w=wgrid, blowup_mask=blow,
                         grid=grid)


def _rk4_step(f, t, yv, h):
    k1 = f(t, yv)
    k2 = f(t + 0.5 * h, yv + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, yv + 0.5 * h * k2)
    k4 = f(t + h, yv + h * k3)
    return yv + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


# ---------------------------------------------------------------------------
# Willmore residual of an adjoint surface (finite-difference frame)
# ---------------------------------------------------------------------------

def adjoint_willmore_residual(Yhat, grid, immersion_tol=1e-8, metric=None):
    """Rebuild a canonical-lift frame from the Yhat grid by differencing and
    evaluate the Willmore residual on the deep interior.

    `metric` may supply <Yhat_z, Yhat_zbar> analytically (e.g. from
    rho_and_metric); otherwise it is differenced from the grid.  Returns
    (residual, mask): residual relative to the |kappa| scale, NaN off the
    valid region.  Raises NotImmersed when no point survives the metric
    threshold (measured against the Yhat magnitude, so a constant dual point
    is rejected rather than kept through rounding noise).
    """
    Yhat = np.asarray(Yhat, dtype=complex)
    gs = metric_signs(Yhat.shape[-1])
    if metric is None:
        mz = fd_dz(Yhat, grid)
        mzb = fd_dzb(Yhat, grid)
        metric = np.einsum("...d,...d->...", mz * gs, mzb)
    E = 2.0 * np.real(metric)
    yscale = np.nanmax(np.einsum("...d,...d->...", Yhat, np.conj(Yhat)).real)
    immersed = E > immersion_tol * max(yscale, 1e-30)
    if not np.any(immersed & np.isfinite(E)):
        raise NotImmersed("adjoint metric degenerates on the whole grid")
    Y = Yhat / np.sqrt(np.where(immersed, E, np.nan))[..., None]

    Yz, Yzb = fd_dz(Y, grid), fd_dzb(Y, grid)
    Yzz, Yzzb = fd_dz(Yz, grid), fd_dzb(Yz, grid)
    q = np.einsum("...d,...d->...", Yzzb * gs, Yzzb)
    N = 2.0 * Yzzb + 2.0 * q[..., None] * Y
    s = 2.0 * np.einsum("...d,...d->...", Yzz * gs, N)
    kappa = Yzz + 0.5 * s[..., None] * Y

    def proj_off_V(Wf):
        return Wf - (-np.einsum("...d,...d->...", Wf * gs, N)[..., None] * Y
                     - np.einsum("...d,...d->...", Wf * gs, Y)[..., None] * N
                     + 2 * np.einsum("...d,...d->...", Wf * gs, Yzb)[..., None] * Yz
                     + 2 * np.einsum("...d,...d->...", Wf * gs, Yz)[..., None] * Yzb)

    d1 = proj_off_V(fd_dzb(kappa, grid))
    d2 = proj_off_V(fd_dzb(d1, grid))
    wv = d2 + 0.5 * np.conj(s)[..., None] * kappa
    kn = np.linalg.norm(kappa, axis=-1)
    res = np.linalg.norm(wv, axis=-1) / (np.nanmean(kn[np.isfinite(kn)]) + 1e-300)
    mask = np.isfinite(res)
    return res, mask
