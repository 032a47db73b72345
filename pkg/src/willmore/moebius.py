"""Light-cone lifts, Moebius frames and Willmore invariants on jet fields.

A surface is carried as its exact primitive F (so x = F + conj F) and every
frame quantity is evaluated through truncated Wirtinger jets seeded from F:
no grid differencing enters this module.  All fields are vectorized over a
leading sample axis.

Frame conventions follow the light-cone model: canonical lift Y with
<Y_z, Y_zbar> = 1/2, frame {Y, Y_z, Y_zbar, N} with <N,N> = <N,Y_z> = 0,
<N,Y> = -1, Schwarzian s and Hopf field kappa from Y_zz = -(s/2) Y + kappa.
"""

import numpy as np
from dataclasses import dataclass, field

from . import jets as J
from .crational import CPoly, VRatFn
from .errors import (BranchPoint, DegenerateV, NotNormal,
                     QuadratureNonconvergent)
from .minkowski import metric_signs
from .weierstrass import integrate_primitive

DEFAULT_ORDER = 6


# ---------------------------------------------------------------------------
# Surface model
# ---------------------------------------------------------------------------

def south_transform(f):
    """The chart change w = 1/z of a structured rational function.

    f(1/w) = (-1)^b rev(N)(w) w^{a + n b - deg N} / (w^n - 1)^b
    where rev reverses the coefficient list of the numerator.
    """
    shift = None
    nums = []
    d = max((p.degree() for p in f.nums), default=0)
    shift = f.a + f.n * f.b - d
    if shift < 0:
        raise ValueError("pole at infinity; cannot move to the south chart")
    for p in f.nums:
        rev = list(p.coeffs[::-1])
        rev = [c for c in rev]
        q = CPoly((0,) * (d - p.degree()) + tuple(rev)) if not p.is_zero() \
            else CPoly(())
        q = q.shift(shift)
        if f.b % 2 == 1:
            q = -q
        nums.append(q)
    return VRatFn(nums, a=0, b=f.b, n=f.n)


class SurfaceModel:
    """x = F + conj(F) for an exact rational primitive F."""

    def __init__(self, F, name="", params=None, chart="north"):
        self.F = F
        self.name = name
        self.params = dict(params or {})
        self.chart = chart
        self._xz = F.derivative()

    @staticmethod
    def from_weierstrass(W):
        F = integrate_primitive(W)
        return SurfaceModel(F, name="weierstrass",
                            params={"k": W.k, "m": W.m,
                                    "ambient_dim": W.ambient_dim})

    @staticmethod
    def plane():
        from .crational import QC, mpq
        f = VRatFn((CPoly.from_dict({1: QC(mpq(1, 2))}),
                    CPoly.from_dict({1: QC(0, mpq(-1, 2))})), a=0, b=0)
        return SurfaceModel(f, name="plane")

    @property
    def dim(self):
        return self.F.dim

    def xz(self):
        return self._xz

    def south(self):
        return SurfaceModel(south_transform(self.F), name=self.name + "/south",
                            params=self.params, chart="south")

    def ends(self, tol=1e-12):
        """Finite-chart pole locations of x_z (0 and/or the n-th roots)."""
        f = self._xz
        out = []
        cands = []
        if f.a > 0:
            cands.append(0j)
        if f.b > 0:
            n = f.n
            cands.extend(np.exp(2j * np.pi * np.arange(1, n + 1) / n))
        for p in cands:
            vals = np.array([q.eval(p) for q in f.nums])
            if np.linalg.norm(vals) > tol:
                out.append(complex(p))
        return out

    def x_jets(self, points, order=DEFAULT_ORDER):
        """Jets of x = F + conj(F) at the given points; [P, dim, J+1, J+1].

        The antiholomorphic slots are conj(F^(b)(z0))/b!: Taylor data of F at
        the same base point with conjugated coefficients.
        """
        pts = np.asarray(points, dtype=complex)
        hol = J.seed_vratfn(self.F, pts, order)
        anti = J.seed_vratfn(self.F, pts, order, conjugated=True)
        return hol + anti

    def sample_points(self, count=50, seed=7, rmin=0.2, rmax=0.82):
        """Deterministic interior samples away from the ends."""
        rng = np.random.default_rng(seed)
        ends = self.ends()
        pts = []
        while len(pts) < count:
            rho = np.sqrt(rng.uniform(rmin ** 2, rmax ** 2))
            th = rng.uniform(0, 2 * np.pi)
            z = rho * np.exp(1j * th)
            if all(abs(z - e) > 0.12 for e in ends):
                pts.append(z)
        return np.array(pts)


# ---------------------------------------------------------------------------
# Lifts
# ---------------------------------------------------------------------------

def light_cone_lift(xj):
    """Jets of Ytilde = ((1+|x|^2)/2, (1-|x|^2)/2, x) in R^{dim+2}_1."""
    P, dim = xj.shape[:-3] + (xj.shape[-3],), xj.shape[-3]
    order = J.order_of(xj)
    q = None
    for i in range(dim):
        t = J.jmul(xj[..., i, :, :], xj[..., i, :, :])
        q = t if q is None else q + t
    half = J.jconst(np.full(q.shape[:-2], 0.5), order)
    out = np.concatenate([
        (half + 0.5 * q)[..., None, :, :],
        (half - 0.5 * q)[..., None, :, :],
        xj,
    ], axis=-3)
    return out


@dataclass
class CanonicalLiftField:
    points: np.ndarray
    Y: np.ndarray            # jets [P, D, J+1, J+1]
    omega: np.ndarray        # scalar jets [P, J+1, J+1]

    @property
    def dim(self):
        return self.Y.shape[-3]


def jet_mdot(u, v):
    """Lorentz pairing of jet vectors (bilinear, contracting axis -3)."""
    return J.jdotmul(u, v, signs=metric_signs(u.shape[-3]))


def canonical_lift(Yt, points=None, tol=1e-9):
    """Scale Ytilde to the canonical lift: Y with <Y_z, Y_zbar> = 1/2.

    e^{2 omega} = 2 <Ytilde_z, Ytilde_zbar>; raises BranchPoint where the
    induced metric degenerates.
    """
    E = 2.0 * jet_mdot(J.jderiv_z(Yt), J.jderiv_zb(Yt))
    E0 = E[..., 0, 0]
    if np.any(np.abs(E0) <= tol):
        raise BranchPoint("induced metric degenerates at a sample point")
    omega = 0.5 * J.jlog(E)
    Y = J.jmul(Yt, J.jpow(E, -0.5)[..., None, :, :])
    return CanonicalLiftField(points=points, Y=Y, omega=omega)


def inverted_chart_lift(surface, points, order=DEFAULT_ORDER, tol=1e-9):
    """Canonical lift computed from the inverted chart Ytilde / |x|^2.

    Smooth across the surface's planar ends (where |x| blows up), because
    u = 1/|x|^2 and x u = x/|x|^2 stay rational with nonvanishing
    denominators there.  Away from ends it agrees with canonical_lift.
    """
    pts = np.asarray(points, dtype=complex)
    F = surface.F
    num_h = J.seed_vratfn(VRatFn(F.nums, 0, 0, F.n), pts, order)
    num_a = J.seed_vratfn(VRatFn(F.nums, 0, 0, F.n), pts, order,
                          conjugated=True)
    den = F.denominator()
    dh = J.from_univariate(den.taylor_at(pts, order), order)
    da = J.from_univariate(np.conj(den.taylor_at(pts, order)), order,
                           conjugated=True)
    # x_i = A_i/D + conj(A_i/D); |x|^2 = S / (D Dbar) with S = sum |A_i D... |
    ddb = J.jmul(dh, da)
    xnum = (J.jmul(num_h, da[..., None, :, :])
            + J.jmul(num_a, dh[..., None, :, :]))     # x * D*Dbar
    S = None
    for i in range(surface.dim):
        t = J.jmul(xnum[..., i, :, :], xnum[..., i, :, :])
        S = t if S is None else S + t
    # u = 1/|x|^2 = (D Dbar)^2 / S ; x u = xnum * (D Dbar) / S
    if np.any(np.abs(S[..., 0, 0]) <= tol):
        raise BranchPoint("surface passes through the inversion center")
    Sinv = J.jinv(S)
    u = J.jmul(J.jmul(ddb, ddb), Sinv)
    xu = J.jmul(J.jmul(xnum, ddb[..., None, :, :]), Sinv[..., None, :, :])
    order_ = J.order_of(u)
    one = J.jconst(np.ones(u.shape[:-2]), order_)
    Yt = np.concatenate([
        (0.5 * (one + u))[..., None, :, :],
        (0.5 * (u - one))[..., None, :, :],
        xu,
    ], axis=-3)
    return canonical_lift(Yt, points=pts, tol=tol)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

@dataclass
class MoebiusFrameField:
    points: np.ndarray
    Y: np.ndarray
    Yz: np.ndarray
    Yzb: np.ndarray
    Yzz: np.ndarray
    Yzzb: np.ndarray
    N: np.ndarray
    s: np.ndarray            # Schwarzian jets
    kappa: np.ndarray        # Hopf jets (normal-valued)
    omega: np.ndarray = None

    @property
    def dim(self):
        return self.Y.shape[-3]

    @property
    def order(self):
        return J.order_of(self.Y)

    def kappa_value(self):
        return J.jval(self.kappa)

    def normal_basis(self, tol=1e-9):
        """Per-point Euclidean-orthonormal basis of the complement of V."""
        vals = [J.jval(self.Y), J.jval(self.Yz).real, J.jval(self.Yz).imag,
                J.jval(self.N)]
        V = np.stack(vals, axis=-2)
        out = []
        for p in range(V.shape[0]):
            u, sv, vh = np.linalg.svd(V[p])
            r = int((sv > tol * sv[0]).sum())
            if r < 4:
                raise DegenerateV(f"rank of V is {r} at sample {p}")
            out.append(vh[4:].conj())
        return np.array(out)


def frame_field(surface, points, order=DEFAULT_ORDER, lift=None):
    """Build the Moebius frame jets at the given points."""
    if lift is None:
        xj = surface.x_jets(points, order)
        Yt = light_cone_lift(xj)
        lift = canonical_lift(Yt, points=np.asarray(points, dtype=complex))
    return frame_from_lift(lift)


def frame_from_lift(lift):
    Y = lift.Y
    Yz = J.jderiv_z(Y)
    Yzb = J.jderiv_zb(Y)
    Yzz = J.jderiv_z(Yz)
    Yzzb = J.jderiv_zb(Yz)
    # N = 2 Y_zzbar + 2 <Y_zzbar, Y_zzbar> Y  satisfies the frame conditions
    q = jet_mdot(Yzzb, Yzzb)
    N = 2.0 * Yzzb + 2.0 * J.jmul(Y, q[..., None, :, :])
    s = 2.0 * jet_mdot(Yzz, N)
    kappa = Yzz + 0.5 * J.jmul(Y, s[..., None, :, :])
    return MoebiusFrameField(points=lift.points, Y=Y, Yz=Yz, Yzb=Yzb,
                             Yzz=Yzz, Yzzb=Yzzb, N=N, s=s, kappa=kappa,
                             omega=lift.omega)


def project_off_V(W, frame):
    """Remove the V-component using the dual frame pairings."""
    comp = (J.jmul(frame.Y, -jet_mdot(W, frame.N)[..., None, :, :])
            + J.jmul(frame.N, -jet_mdot(W, frame.Y)[..., None, :, :])
            + J.jmul(frame.Yz, 2.0 * jet_mdot(W, frame.Yzb)[..., None, :, :])
            + J.jmul(frame.Yzb, 2.0 * jet_mdot(W, frame.Yz)[..., None, :, :]))
    return W - comp


def normal_d(xi, frame, direction="z", check=True, tol=1e-6):
    """Normal connection D applied to a normal-valued jet field."""
    if check:
        scale = np.sqrt(np.abs(J.jval(jet_mdot(xi, J.jconj(xi))))) + 1e-30
        for ref in (frame.Y, frame.Yz, frame.Yzb, frame.N):
            rs = np.sqrt(np.abs(J.jval(jet_mdot(ref, J.jconj(ref))))) + 1e-30
            pairing = np.abs(J.jval(jet_mdot(xi, ref)))
            if np.any(pairing > tol * scale * np.maximum(rs, 1.0)):
                raise NotNormal("input field is not normal to V")
    d = J.jderiv_z(xi) if direction == "z" else J.jderiv_zb(xi)
    return project_off_V(d, frame)


def willmore_vector(frame):
    """Jet field of D_zbar D_zbar kappa + (sbar/2) kappa."""
    d1 = normal_d(frame.kappa, frame, "zb", check=False)
    d2 = normal_d(d1, frame, "zb", check=False)
    sbar = J.jconj(frame.s)
    return d2 + 0.5 * J.jmul(frame.kappa, sbar[..., None, :, :])


def willmore_residual(frame, relative=True):
    """|D_zbar D_zbar kappa + (sbar/2) kappa| per sample.

    With relative=True the norms are divided by the RMS Hermitian norm of
    kappa over the sample set.
    """
    w = J.jval(willmore_vector(frame))
    res = np.linalg.norm(w, axis=-1)
    if not relative:
        return res
    kv = frame.kappa_value()
    scale = np.sqrt(np.mean(np.abs(kv) ** 2) * kv.shape[-1]) + 1e-300
    return res / scale


def integrability_residuals(frame, probes=2):
    """(gauss, codazzi, ricci) residual magnitudes per sample.

    Each defect is normalized by the magnitude of its largest constituent
    term, so the residuals are scale-free and stay meaningful near umbilics.
    """
    kbar = J.jconj(frame.kappa)
    dzkbar = normal_d(kbar, frame, "z", check=False)
    dzk = normal_d(frame.kappa, frame, "z", check=False)
    t1 = 0.5 * J.jval(J.jderiv_zb(frame.s))
    t2 = 3.0 * J.jval(jet_mdot(dzkbar, frame.kappa))
    t3 = J.jval(jet_mdot(kbar, dzk))
    gscale = np.maximum.reduce([np.abs(t1), np.abs(t2), np.abs(t3)]) + 1e-300
    gauss = np.abs(t1 - t2 - t3) / gscale

    d1 = normal_d(frame.kappa, frame, "zb", check=False)
    d2 = J.jval(normal_d(d1, frame, "zb", check=False))
    sk = 0.5 * J.jval(J.jmul(frame.kappa, J.jconj(frame.s)[..., None, :, :]))
    wscale = np.maximum(np.linalg.norm(d2, axis=-1),
                        np.linalg.norm(sk, axis=-1)) + 1e-300
    codazzi = np.linalg.norm((d2 + sk).imag, axis=-1) / wscale

    ricci = np.zeros(gauss.shape)
    kval = frame.kappa_value()
    kbv = np.conj(kval)
    g = metric_signs(frame.dim)
    for c in range(probes):
        e = np.zeros((frame.dim,), dtype=complex)
        e[2 + c] = 1.0
        const = J.jconst(np.broadcast_to(e, frame.Y.shape[:-2][:-1] + (frame.dim,)),
                         frame.order)
        xi = project_off_V(const, frame)
        dz = normal_d(xi, frame, "z", check=False)
        dzb = normal_d(xi, frame, "zb", check=False)
        ta = J.jval(normal_d(dz, frame, "zb", check=False))
        tb = J.jval(normal_d(dzb, frame, "z", check=False))
        xv = J.jval(xi)
        tc = 2.0 * np.einsum("...d,...d->...", xv * g, kval)[..., None] * kbv
        td = 2.0 * np.einsum("...d,...d->...", xv * g, kbv)[..., None] * kval
        r = np.linalg.norm(ta - tb - tc + td, axis=-1)
        scale = np.maximum.reduce([np.linalg.norm(t, axis=-1)
                                   for t in (ta, tb, tc, td)]) + 1e-300
        ricci = np.maximum(ricci, r / np.maximum(scale, 1e-6))
    return gauss, codazzi, ricci


def chi0_theta0(frame, relative=True):
    """chi0 = D_zbar kappa ^ kappa and Theta0, with the identity residual.

    Theta0 = <D_zbar kappa, kappa>^2 - <D_zbar kappa, D_zbar kappa><kappa, kappa>
    equals the wedge self-pairing of chi0 in the paper's sign convention.
    With relative=True the chi0 magnitude is normalized by |D_zbar kappa||kappa|
    (parallelism defect), so it is invariant under rescaling kappa.
    """
    u = J.jval(normal_d(frame.kappa, frame, "zb", check=False))
    v = frame.kappa_value()
    chi = u[..., :, None] * v[..., None, :] - u[..., None, :] * v[..., :, None]
    g = metric_signs(frame.dim)
    uu = np.einsum("...d,...d->...", u * g, u)
    vv = np.einsum("...d,...d->...", v * g, v)
    uv = np.einsum("...d,...d->...", u * g, v)
    theta0 = uv ** 2 - uu * vv
    wedge = -0.5 * np.einsum("...ab,...ab->...", chi * g[:, None] * g[None, :], chi)
    chi_norm = np.linalg.norm(chi, axis=(-2, -1)) / np.sqrt(2.0)
    norm_uv = (np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1))
    if relative:
        chi_norm = chi_norm / (norm_uv + 1e-300)
    theta_scale = norm_uv ** 2 + 1e-300
    return chi, chi_norm, theta0, np.abs(theta0 - wedge) / theta_scale


def moebius_isotropy_order(frame, tol=1e-7, max_k=None):
    """Largest k with |<D_z^(a) kappa, D_z^(b) kappa>| < tol for a+b <= 2k-1.

    Relative tolerance against the Hermitian norms.  Returns "total" when the
    vanishing persists to the jet capacity (or to max_k when given).
    """
    avail = frame.order - 2                 # reliable D_z applications
    kmax = max_k if max_k is not None else max((avail - 1) // 2 + 1, 1)
    depth = min(2 * kmax - 1, avail)
    derivs = [frame.kappa]
    for _ in range(depth):
        derivs.append(normal_d(derivs[-1], frame, "z", check=False))
    vals = [J.jval(d) for d in derivs]
    norms = [np.sqrt(np.sum(np.abs(v) ** 2, axis=-1)) + 1e-300 for v in vals]
    g = metric_signs(frame.dim)

    def pair_ok(a, b):
        p = np.abs(np.einsum("...d,...d->...", vals[a] * g, vals[b]))
        return np.all(p < tol * norms[a] * norms[b])

    k = 0
    while k < kmax:
        need = [(a, b) for a in range(len(vals)) for b in range(a, len(vals))
                if a + b <= 2 * (k + 1) - 1]
        if any(b >= len(vals) for _, b in need) or 2 * (k + 1) - 1 > depth:
            break
        if all(pair_ok(a, b) for a, b in need):
            k += 1
        else:
            return k
    return "total"


def apply_lorentz(jets_or_lift, T):
    """Apply a Lorentz matrix to a jet vector field (axis -3)."""
    if isinstance(jets_or_lift, CanonicalLiftField):
        Y = np.einsum("ab,...bjk->...ajk", T, jets_or_lift.Y)
        return CanonicalLiftField(points=jets_or_lift.points, Y=Y,
                                  omega=jets_or_lift.omega)
    return np.einsum("ab,...bjk->...ajk", T, jets_or_lift)


# ---------------------------------------------------------------------------
# Willmore energy
# ---------------------------------------------------------------------------

def energy_density(surface, points, chunk=8192):
    """4 <kappa, kappabar> at the given chart points (order-2 jets)."""
    pts = np.asarray(points, dtype=complex).ravel()
    out = np.empty(pts.shape, dtype=float)
    for i in range(0, len(pts), chunk):
        sl = slice(i, i + chunk)
        fr = frame_field(surface, pts[sl], order=2)
        kv = fr.kappa_value()
        g = metric_signs(fr.dim)
        out[sl] = 4.0 * np.real(np.einsum("...d,...d->...", kv * g,
                                          np.conj(kv)))
    return out.reshape(np.asarray(points).shape)


def _gl_on_panels(edges, n_nodes):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _mid_clustered_edges(a, b, levels=9, ratio=0.55):
    """Panel edges on [a, b] geometrically clustered at the midpoint.

    The Moebius density of the compactified surfaces concentrates at the
    points half-way between adjacent circle ends; these meshes resolve the
    O(1e-2)-wide bumps there.
    """
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    d = half * ratio ** np.arange(levels + 1)
    return np.concatenate([[a], mid - d[1:], (mid + d[1:])[::-1], [b]])


def _angular_quad(angles, delta, levels=9, ratio=0.55, n_nodes=6, sector=None):
    """Angular nodes/weights over the circle minus arcs of half-width delta.

    `angles` are the circle-end angles; each gap between consecutive ends is
    paneled with midpoint clustering and trimmed by delta.  With sector=i only
    the i-th gap is quadratured (callers multiply by the symmetry factor).
    """
    if not angles:
        m = 256
        th = 2 * np.pi * np.arange(m) / m
        return th, np.full(m, 2 * np.pi / m)
    ang = np.sort(np.asarray(angles))
    nodes, weights = [], []
    gaps = range(len(ang)) if sector is None else [sector]
    for gi in gaps:
        a0 = ang[gi] + delta
        b0 = ang[(gi + 1) % len(ang)] + (2 * np.pi if gi + 1 == len(ang) else 0.0) - delta
        if b0 <= a0:
            continue
        t, w = _gl_on_panels(_mid_clustered_edges(a0, b0, levels, ratio), n_nodes)
        nodes.append(t)
        weights.append(w)
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _rotation_symmetric(surface, angles, tol=1e-9):
    """Detect the Z_n chart symmetry dens(e^{2 pi i/n} z) = dens(z)."""
    if len(angles) < 2:
        return False
    eps = np.exp(2j * np.pi / len(angles))
    pts = np.array([0.37 + 0.21j, 0.66 - 0.12j, 0.1 + 0.72j, 0.52 + 0.5j])
    d0 = energy_density(surface, pts)
    d1 = energy_density(surface, eps * pts)
    return bool(np.max(np.abs(d1 - d0)) <= tol * max(np.max(np.abs(d0)), 1.0))


def _panel_value(surface, a, b, r, angles, sector, n_nodes=7, ang_levels=8):
    """Energy integral over the radial panel [a, b] (one angular sector)."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    rho = 0.5 * (b - a) * x + 0.5 * (b + a)
    wr = 0.5 * (b - a) * w
    pts, wts = [], []
    for rh, wrr in zip(rho, wr):
        if angles:
            cosd = (rh ** 2 + 1.0 - r ** 2) / (2.0 * rh) if rh > 0 else 2.0
            delta = 0.0 if cosd >= 1.0 else float(np.arccos(np.clip(cosd, -1.0, 1.0)))
        else:
            delta = 0.0
        th, wt = _angular_quad(angles, delta, levels=ang_levels,
                               n_nodes=n_nodes, sector=sector)
        pts.append(rh * np.exp(1j * th))
        wts.append(wt * rh * wrr)
    dens = energy_density(surface, np.concatenate(pts))
    return float(np.dot(dens, np.concatenate(wts)))


def _region_integral(surface, r, n_nodes=7, rel_tol=3e-4, max_depth=11):
    """Adaptive energy integral over the chart disk minus r-disks.

    Radial panels are bisected until each panel agrees with its halves;
    the angular quadrature clusters at the gap midpoints where the Moebius
    density of these surfaces concentrates.  A Z_n chart symmetry, when
    detected, reduces the angular range to one sector.
    """
    ends = surface.ends()
    angles = [float(np.angle(e)) for e in ends if abs(abs(e) - 1.0) < 1e-9]
    center = any(abs(e) < 1e-9 for e in ends)
    lo = r if center else 0.0
    sector = None
    factor = 1.0
    if _rotation_symmetric(surface, angles):
        sector = 0
        factor = float(len(angles))

    def val(a, b):
        return _panel_value(surface, a, b, r, angles, sector, n_nodes)

    edges = np.unique(np.concatenate([
        np.linspace(lo, max(1.0 - 2 * r, lo + 1e-6), 9),
        1.0 - (1.0 - max(1.0 - 2 * r, lo)) * 0.5 ** np.arange(1, 7),
        [1.0]]))
    panels = [(a, b, val(a, b)) for a, b in zip(edges[:-1], edges[1:])]
    rough = sum(p[2] for p in panels)
    tol_abs = rel_tol * max(abs(rough), 1e-6)

    total = 0.0
    stack = [(a, b, v, 0) for a, b, v in panels]
    while stack:
        a, b, v, depth = stack.pop()
        mid = 0.5 * (a + b)
        v1, v2 = val(a, mid), val(mid, b)
        err = abs(v1 + v2 - v)
        share = tol_abs * (b - a) / max(1.0 - lo, 1e-9)
        if err < max(share, 1e-12) or depth >= max_depth:
            total += v1 + v2
        else:
            stack.append((a, mid, v1, depth + 1))
            stack.append((mid, b, v2, depth + 1))
    return factor * total


def _end_shell_integral(surface, end, r1, r2, n_nodes=6):
    """Integral over {r1 < |z - end| < r2} intersected with the unit disk."""
    if r2 <= r1:
        return 0.0
    rho, wr = _gl_on_panels(np.linspace(r1, r2, 7), n_nodes)
    total = 0.0
    on_circle = abs(abs(end) - 1.0) < 1e-9
    base = float(np.angle(end)) if on_circle else 0.0
    for rh, wrr in zip(rho, wr):
        if on_circle:
            # |end + rh e^{i th}| <= 1  <=>  cos(th - base) <= -rh/2
            half = float(np.arccos(np.clip(-rh / 2.0, -1.0, 1.0)))
            a0, b0 = base + half, base + 2 * np.pi - half
        else:
            a0, b0 = 0.0, 2 * np.pi
        th, wt = _gl_on_panels(np.linspace(a0, b0, 9), n_nodes)
        dens = energy_density(surface, end + rh * np.exp(1j * th))
        total += float(np.dot(dens, wt)) * rh * wrr
    return total


def willmore_energy(surface, radii=(0.1, 0.05, 0.025), n_nodes=6):
    """Two-chart Willmore energy with end excision and r^2 extrapolation.

    Integrates 4 <kappa, kappabar> over the z-chart and w = 1/z chart unit
    disks minus r-disks around the ends.  The region integral is evaluated
    once at the smallest radius; larger radii are obtained by subtracting
    shell integrals around each end, and the sequence is Richardson
    extrapolated in r^2.
    """
    radii = sorted(radii, reverse=True)
    rmin = radii[-1]
    charts = [surface, surface.south()]
    base = sum(_region_integral(ch, rmin) for ch in charts)
    vals = []
    for r in radii:
        shells = 0.0
        for ch in charts:
            ends = ch.ends()
            circle = [e for e in ends if abs(abs(e) - 1.0) < 1e-9]
            others = [e for e in ends if abs(abs(e) - 1.0) >= 1e-9]
            ang = [float(np.angle(e)) for e in circle]
            if circle and _rotation_symmetric(ch, ang):
                shells += len(circle) * _end_shell_integral(
                    ch, circle[0], rmin, r, n_nodes)
            else:
                for e in circle:
                    shells += _end_shell_integral(ch, e, rmin, r, n_nodes)
            for e in others:
                shells += _end_shell_integral(ch, e, rmin, r, n_nodes)
        vals.append(base - shells)
    extr = []
    for (r1, v1), (r2, v2) in zip(zip(radii, vals), zip(radii[1:], vals[1:])):
        extr.append(v2 + (v2 - v1) * r2 ** 2 / (r1 ** 2 - r2 ** 2))
    W = extr[-1] if extr else vals[-1]
    if len(extr) >= 2 and abs(extr[-1] - extr[-2]) > 0.05 * max(abs(W), 1.0):
        raise QuadratureNonconvergent(f"extrapolants disagree: {extr}")
    report = {"radii": list(radii), "raw": vals, "extrapolated": extr,
              "value": W, "over_4pi": W / (4 * np.pi)}
    return W, report
