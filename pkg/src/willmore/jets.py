"""Truncated Wirtinger jets: bivariate Taylor data in (z - z0, zbar - zbar0).

A jet of order J is an ndarray whose last two axes index (a, b) with
a + b <= J, storing d_z^a d_zbar^b f / (a! b!) at the base point.  Leading
axes are free (sample batches, ambient coordinates), so every operation here
is vectorized over fields of jets.

Conjugation swaps the two index axes and conjugates coefficients; the product
is the truncated 2-D Cauchy convolution.  Analytic functions of jets
(inv/sqrt/log/exp/pow) are truncated series around the constant term.
"""

import math

import numpy as np

from .errors import DivisionByZeroJet, NonpositiveBranch

_masks = {}


def trunc_mask(J):
    if J not in _masks:
        a = np.arange(J + 1)
        _masks[J] = (a[:, None] + a[None, :]) <= J
    return _masks[J]


def order_of(jet):
    return jet.shape[-1] - 1


def jzero(shape, J):
    return np.zeros(tuple(shape) + (J + 1, J + 1), dtype=complex)


def jconst(values, J):
    values = np.asarray(values, dtype=complex)
    out = jzero(values.shape, J)
    out[..., 0, 0] = values
    return out


def jvariable(z0, J, conjugated=False):
    """Jet of the coordinate function z (or zbar) at base point z0."""
    z0 = np.asarray(z0, dtype=complex)
    out = jzero(z0.shape, J)
    out[..., 0, 0] = z0
    if conjugated:
        out[..., 0, 1] = 1.0
    else:
        out[..., 1, 0] = 1.0
    return out


def jval(jet):
    return jet[..., 0, 0]


def jconj(jet):
    return np.conj(np.swapaxes(jet, -1, -2))


def jmul(f, g):
    """Truncated product; f, g broadcastable, same order."""
    J = order_of(f)
    out = np.zeros(np.broadcast_shapes(f.shape, g.shape), dtype=complex)
    for a in range(J + 1):
        for b in range(J + 1 - a):
            fa = f[..., a, b]
            out[..., a:, b:J + 1 - a] += fa[..., None, None] \
                * g[..., :J + 1 - a, :J + 1 - a - b]
    out *= trunc_mask(J)
    return out


def jdotmul(u, v, signs=None):
    """sum_d signs_d * u_d * v_d, contracting the third-from-last axis."""
    J = order_of(u)
    if signs is not None:
        u = u * np.asarray(signs)[:, None, None]
    out = np.zeros(np.broadcast_shapes(u.shape, v.shape)[:-3] + (J + 1, J + 1),
                   dtype=complex)
    for a in range(J + 1):
        for b in range(J + 1 - a):
            term = (u[..., :, a, b, None, None]
                    * v[..., :, :J + 1 - a, :J + 1 - a - b]).sum(axis=-3)
            out[..., a:, b:J + 1 - a] += term
    out *= trunc_mask(J)
    return out


def jderiv_z(f):
    J = order_of(f)
    out = np.zeros_like(f)
    k = np.arange(1, J + 1)
    out[..., :J, :] = f[..., 1:, :] * k[:, None]
    out *= trunc_mask(J)
    return out


def jderiv_zb(f):
    J = order_of(f)
    out = np.zeros_like(f)
    k = np.arange(1, J + 1)
    out[..., :, :J] = f[..., :, 1:] * k[None, :]
    out *= trunc_mask(J)
    return out


def _series_apply(f, coeff_fn, head):
    """head + sum_{k>=1} coeff_fn(k) * (f - f0)^k, truncated at the order."""
    J = order_of(f)
    c0 = f[..., 0, 0].copy()
    g = f.copy()
    g[..., 0, 0] = 0.0
    out = np.broadcast_to(jconst(np.asarray(head, dtype=complex), J),
                          f.shape).copy()
    p = None
    for k in range(1, J + 1):
        p = g if p is None else jmul(p, g)
        out += np.asarray(coeff_fn(k, c0))[..., None, None] * p
    return out


def jinv(f):
    c0 = f[..., 0, 0]
    if np.any(np.abs(c0) == 0):
        raise DivisionByZeroJet("jet inverse with zero constant term")
    return _series_apply(f, lambda k, c: (-1.0) ** k / c ** (k + 1), 1.0 / c0)


def jdiv(f, g):
    return jmul(f, jinv(g))


def jexp(f):
    c0 = f[..., 0, 0]
    e = np.exp(c0)
    return _series_apply(f, lambda k, c: e / math.factorial(k), e)


def jlog(f):
    c0 = f[..., 0, 0]
    if np.any(np.abs(c0) == 0):
        raise NonpositiveBranch("jet log with zero constant term")
    return _series_apply(f, lambda k, c: (-1.0) ** (k + 1) / (k * c ** k),
                         np.log(c0))


def jpow(f, alpha):
    """f**alpha via the binomial series around the constant term."""
    c0 = f[..., 0, 0]
    if np.any(np.abs(c0) == 0):
        raise NonpositiveBranch("jet power with zero constant term")
    head = c0 ** alpha

    def coeff(k, c):
        binom = 1.0
        for j in range(k):
            binom *= (alpha - j) / (j + 1)
        return binom * c ** (alpha - k)

    return _series_apply(f, coeff, head)


def jsqrt(f):
    return jpow(f, 0.5)


def from_univariate(taylor, J, conjugated=False):
    """Embed univariate Taylor data [..., K+1] into a bivariate jet.

    Holomorphic data goes into the (a, 0) row; with conjugated=True into
    the (0, b) column (antiholomorphic part).
    """
    taylor = np.asarray(taylor, dtype=complex)
    K = taylor.shape[-1] - 1
    out = jzero(taylor.shape[:-1], J)
    k = min(J, K)
    if conjugated:
        out[..., 0, :k + 1] = taylor[..., :k + 1]
    else:
        out[..., :k + 1, 0] = taylor[..., :k + 1]
    return out


def univariate_div(a, b):
    """Truncated univariate series division a/b along the last axis."""
    order = a.shape[-1] - 1
    if np.any(np.abs(b[..., 0]) == 0):
        raise DivisionByZeroJet("series division by zero constant term")
    q = np.zeros_like(a)
    for k in range(order + 1):
        s = a[..., k].copy()
        for j in range(1, min(k, b.shape[-1] - 1) + 1):
            s -= b[..., j] * q[..., k - j]
        q[..., k] = s / b[..., 0]
    return q


def seed_vratfn(f, z0, J, conjugated=False):
    """Jets of a VRatFn at base points z0; shape z0.shape + (dim, J+1, J+1).

    With conjugated=True the returned jets represent the antiholomorphic
    function zbar -> conj(f(z)) expanded at zbar0 = conj(z0): the Taylor data
    of f at z0 with conjugated coefficients, placed in the (0, b) column.
    For polarized seeding at an independent antiholomorphic base xi0, pass
    z0 = conj(xi0).
    """
    z0 = np.asarray(z0, dtype=complex)
    den = f.denominator()
    dt = den.taylor_at(z0, J)
    comps = []
    for p in f.nums:
        nt = p.taylor_at(z0, J)
        comps.append(univariate_div(nt, dt))
    tay = np.stack(comps, axis=-2)          # z0.shape + (dim, J+1)
    if conjugated:
        tay = np.conj(tay)
    return from_univariate(tay, J, conjugated=conjugated)


class Jet:
    """Convenience wrapper around a single bivariate jet array."""

    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.asarray(data, dtype=complex)

    @property
    def order(self):
        return order_of(self.data)

    @staticmethod
    def constant(value, J):
        return Jet(jconst(value, J))

    @staticmethod
    def variable(z0, J):
        return Jet(jvariable(z0, J))

    @staticmethod
    def seed(f, z0, J, conjugated=False):
        """Seed from a scalar (1-component) VRatFn."""
        arr = seed_vratfn(f, complex(z0), J, conjugated=conjugated)
        return Jet(arr[0])

    def value(self):
        return jval(self.data)

    def coefficient(self, a, b):
        return self.data[a, b]

    def conj(self):
        return Jet(jconj(self.data))

    def deriv_z(self):
        return Jet(jderiv_z(self.data))

    def deriv_zb(self):
        return Jet(jderiv_zb(self.data))

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.data + other.data)
        return Jet(self.data + jconst(other, self.order))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.data)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -complex(other))

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(jmul(self.data, other.data))
        return Jet(self.data * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return Jet(jdiv(self.data, other.data))
        return Jet(self.data / complex(other))

    def inv(self):
        return Jet(jinv(self.data))

    def exp(self):
        return Jet(jexp(self.data))

    def log(self):
        return Jet(jlog(self.data))

    def sqrt(self):
        return Jet(jsqrt(self.data))

    def pow(self, alpha):
        return Jet(jpow(self.data, alpha))

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.value():.6g})"
