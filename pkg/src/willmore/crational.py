"""Exact Gaussian-rational polynomial / rational-function calculus.

Coefficients live in Q(i): pairs of arbitrary-precision rationals.  All
polynomial identities used by the surface verifiers (conformality, residue
relations, isotropy pairings) are decided exactly here; floating point only
enters for evaluation at non-rational points (roots of unity) and for the
residue cross-checks.

Rational functions are kept in the structured form

    num(z) / (z^a * (z^n - 1)^b)

which covers every denominator occurring in the pipeline (Weierstrass data,
primitives, closed-form examples, plain polynomials with a = b = 0) and lets
the derivative be taken with minimal degree growth.
"""

import cmath

import numpy as np

from .errors import (DimensionMismatch, DivisionByZeroJet, NonzeroResidue,
                     PoleOrderMismatch)

try:
    from gmpy2 import mpq
except ImportError:  # pragma: no cover - gmpy2 is a hard dependency in practice
    from fractions import Fraction as mpq

_ZERO = mpq(0)
_ONE = mpq(1)


def _as_mpq(x):
    if isinstance(x, type(_ZERO)):
        return x
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, str):
        return mpq(x)
    # fractions.Fraction or anything with numerator/denominator
    return mpq(x.numerator, x.denominator)


class QC:
    """Exact complex rational a + b*i with a, b in Q."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _as_mpq(re)
        self.im = _as_mpq(im)

    def __add__(self, other):
        other = qc(other)
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __sub__(self, other):
        other = qc(other)
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return qc(other) - self

    def __mul__(self, other):
        other = qc(other)
        return QC(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = qc(other)
        nrm = other.re * other.re + other.im * other.im
        if nrm == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return QC((self.re * other.re + self.im * other.im) / nrm,
                  (self.im * other.re - self.re * other.im) / nrm)

    def __rtruediv__(self, other):
        return qc(other) / self

    def conjugate(self):
        return QC(self.re, -self.im)

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def __eq__(self, other):
        try:
            other = qc(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"QC({self.re})"
        return f"QC({self.re}, {self.im})"

    def sqrt(self):
        """Exact square root in Q(i) if one exists, else None."""
        for cand in _gaussian_sqrt_candidates(self.re, self.im):
            if cand * cand == self:
                return cand
        return None

    def to_strings(self):
        """Serialize as four decimal integer strings [re_num, re_den, im_num, im_den]."""
        return [str(self.re.numerator), str(self.re.denominator),
                str(self.im.numerator), str(self.im.denominator)]

    @staticmethod
    def from_strings(quad):
        if len(quad) != 4:
            raise ValueError("expected [re_num, re_den, im_num, im_den]")
        a, b, c, d = (int(s) for s in quad)
        return QC(mpq(a, b), mpq(c, d))


def qc(x):
    """Coerce ints, rationals and QC to QC."""
    if isinstance(x, QC):
        return x
    if isinstance(x, (int, str)) or hasattr(x, "numerator"):
        return QC(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to QC")


QC_ZERO = QC(0)
QC_ONE = QC(1)
QC_I = QC(0, 1)


def _rat_sqrt(q):
    """Exact sqrt of a nonnegative rational, or None."""
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn = _isqrt_exact(num)
    rd = _isqrt_exact(den)
    if rn is None or rd is None:
        return None
    return mpq(rn, rd)


def _isqrt_exact(n):
    import math
    r = math.isqrt(n)
    return r if r * r == n else None


def _gaussian_sqrt_candidates(a, b):
    # (x + iy)^2 = a + ib  =>  x^2 - y^2 = a, 2xy = b; |x+iy|^2 = sqrt(a^2+b^2)
    n2 = _rat_sqrt(a * a + b * b)
    if n2 is None:
        return
    for xx in ((a + n2) / 2,):
        x = _rat_sqrt(xx)
        if x is None:
            continue
        if x != 0:
            y = b / (2 * x)
            yield QC(x, y)
            yield QC(-x, -y)
        else:
            y = _rat_sqrt(-a)
            if y is not None:
                yield QC(0, y)
                yield QC(0, -y)


# ---------------------------------------------------------------------------
# Polynomials over Q(i)
# ---------------------------------------------------------------------------

class CPoly:
    """Dense polynomial with QC coefficients, ascending degree.

    Trailing zero coefficients are stripped; the zero polynomial has
    degree() == -1 (sentinel).
    """

    __slots__ = ("coeffs", "_f64")

    def __init__(self, coeffs=()):
        cs = [qc(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs = tuple(cs)
        self._f64 = None

    # -- constructors -----------------------------------------------------
    @staticmethod
    def zero():
        return CPoly(())

    @staticmethod
    def one():
        return CPoly((QC_ONE,))

    @staticmethod
    def monomial(k, c=QC_ONE):
        return CPoly((QC_ZERO,) * k + (qc(c),))

    @staticmethod
    def from_dict(d):
        if not d:
            return CPoly(())
        deg = max(d)
        cs = [QC_ZERO] * (deg + 1)
        for k, v in d.items():
            cs[k] = cs[k] + qc(v)
        return CPoly(cs)

    # -- structure ---------------------------------------------------------
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def __getitem__(self, k):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return QC_ZERO

    def __eq__(self, other):
        return isinstance(other, CPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"CPoly(deg={self.degree()})"

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] = out[k] + c
        return CPoly(out)

    def __neg__(self):
        return CPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, CPoly):
            if self.is_zero() or other.is_zero():
                return CPoly(())
            out = [QC_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a.is_zero():
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + a * b
            return CPoly(out)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c):
        c = qc(c)
        if c.is_zero():
            return CPoly(())
        return CPoly([a * c for a in self.coeffs])

    def shift(self, k):
        """Multiply by z^k."""
        if self.is_zero():
            return self
        return CPoly((QC_ZERO,) * k + self.coeffs)

    def mul_zn_minus_1(self, n):
        """Multiply by (z^n - 1) in O(deg) coefficient operations."""
        return self.shift(n) - self

    def derivative(self):
        return CPoly([qc(k) * c for k, c in enumerate(self.coeffs)][1:])

    # -- evaluation ----------------------------------------------------------
    def eval_exact(self, z):
        z = qc(z)
        acc = QC_ZERO
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def as_float_coeffs(self):
        if self._f64 is None:
            self._f64 = np.array([complex(c) for c in self.coeffs],
                                 dtype=complex)
        return self._f64

    def eval(self, z):
        """Horner evaluation at complex floats (scalar or ndarray)."""
        cs = self.as_float_coeffs()
        if cs.size == 0:
            return np.zeros_like(np.asarray(z, dtype=complex)) if np.ndim(z) else 0j
        acc = np.zeros_like(np.asarray(z, dtype=complex)) + cs[-1]
        for c in cs[-2::-1]:
            acc = acc * z + c
        return acc

    def taylor_at(self, z0, order):
        """Float Taylor coefficients (f^(a)(z0)/a!) for a = 0..order.

        z0 may be a scalar or ndarray; output shape is z0.shape + (order+1,).
        Synthetic-division Taylor shift, vectorized over sample points.
        """
        z0 = np.asarray(z0, dtype=complex)
        out = np.zeros(z0.shape + (order + 1,), dtype=complex)
        cs = self.as_float_coeffs()
        for c in cs[::-1]:
            for j in range(order, 0, -1):
                out[..., j] = out[..., j] * z0 + out[..., j - 1]
            out[..., 0] = out[..., 0] * z0 + c
        return out


def poly_gcd(p, q):
    """Monic gcd over Q(i) by the Euclidean algorithm."""
    a, b = p, q
    while not b.is_zero():
        a, b = b, _poly_mod(a, b)
    if a.is_zero():
        return a
    lead = a.coeffs[-1]
    return a.scale(QC_ONE / lead)


def _poly_mod(a, b):
    if b.is_zero():
        raise ZeroDivisionError("polynomial modulo zero")
    r = list(a.coeffs)
    db, lead = b.degree(), b.coeffs[-1]
    while len(r) - 1 >= db and r:
        c = r[-1] / lead
        off = len(r) - 1 - db
        for k, bc in enumerate(b.coeffs):
            r[off + k] = r[off + k] - c * bc
        while r and r[-1].is_zero():
            r.pop()
    return CPoly(r)


def poly_divexact(a, b):
    """Exact polynomial quotient; raises if the division leaves a remainder."""
    if b.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    r = list(a.coeffs)
    db, lead = b.degree(), b.coeffs[-1]
    q = [QC_ZERO] * max(len(r) - db, 0)
    while len(r) - 1 >= db and r:
        c = r[-1] / lead
        q[len(r) - 1 - db] = c
        off = len(r) - 1 - db
        for k, bc in enumerate(b.coeffs):
            r[off + k] = r[off + k] - c * bc
        while r and r[-1].is_zero():
            r.pop()
    if r:
        raise ValueError("inexact polynomial division")
    return CPoly(q)


# ---------------------------------------------------------------------------
# Structured rational functions
# ---------------------------------------------------------------------------

class VRatFn:
    """Vector rational function num_i(z) / (z^a (z^n - 1)^b).

    One CPoly numerator per ambient coordinate, shared denominator.  With
    a = b = 0 this is a plain polynomial vector.
    """

    __slots__ = ("nums", "a", "b", "n")

    def __init__(self, nums, a=0, b=0, n=1):
        self.nums = tuple(nums)
        if a < 0 or b < 0 or (b > 0 and n < 1):
            raise ValueError("invalid pole structure")
        self.a = a
        self.b = b
        self.n = n if b > 0 else max(n, 1)

    @property
    def dim(self):
        return len(self.nums)

    def denominator(self):
        d = CPoly.one().shift(self.a)
        for _ in range(self.b):
            d = d.mul_zn_minus_1(self.n)
        return d

    def derivative(self):
        """Exact d/dz keeping the structured denominator.

        d/dz [N / (z^a (z^n-1)^b)]
          = [N' z (z^n-1) - N (a (z^n-1) + b n z^n)] / (z^{a+1} (z^n-1)^{b+1})
        """
        a, b, n = self.a, self.b, self.n
        if a == 0 and b == 0:
            return VRatFn([p.derivative() for p in self.nums], 0, 0, n)
        out = []
        for p in self.nums:
            t1 = p.derivative().shift(1).mul_zn_minus_1(n)
            t2 = p.mul_zn_minus_1(n).scale(a) + p.shift(n).scale(b * n)
            out.append(t1 - t2)
        return VRatFn(out, a + 1, b + 1, n)

    def derivative_k(self, k):
        f = self
        for _ in range(k):
            f = f.derivative()
        return f

    def component(self, i):
        return VRatFn((self.nums[i],), self.a, self.b, self.n)

    def scale(self, c):
        return VRatFn([p.scale(c) for p in self.nums], self.a, self.b, self.n)

    def reduce(self):
        """Cancel common z^j and (z^n-1)^j factors between nums and denominator."""
        a, b, n = self.a, self.b, self.n
        nums = list(self.nums)
        while a > 0 and all(p.is_zero() or p[0].is_zero() for p in nums):
            if all(p.is_zero() for p in nums):
                break
            nums = [CPoly(p.coeffs[1:]) if not p.is_zero() else p for p in nums]
            a -= 1
        zn1 = CPoly.one().mul_zn_minus_1(n)
        while b > 0:
            try:
                nums = [poly_divexact(p, zn1) if not p.is_zero() else p
                        for p in nums]
                b -= 1
            except ValueError:
                break
        return VRatFn(nums, a, b, n)

    def eval(self, z):
        """Float evaluation; shape = z.shape + (dim,)."""
        z = np.asarray(z, dtype=complex)
        den = self._den_eval(z)
        vals = np.stack([p.eval(z) for p in self.nums], axis=-1)
        return vals / den[..., None]

    def _den_eval(self, z):
        return z ** self.a * (z ** self.n - 1.0) ** self.b

    def pairing(self, other):
        """Complex-bilinear Euclidean pairing as a scalar VRatFn."""
        if self.dim != other.dim:
            raise DimensionMismatch(
                f"pairing of dim {self.dim} with dim {other.dim}")
        if self.n != other.n and self.b > 0 and other.b > 0:
            raise ValueError("incompatible pole structures")
        n = self.n if self.b > 0 else other.n
        num = CPoly.zero()
        for p, q in zip(self.nums, other.nums):
            num = num + p * q
        return VRatFn((num,), self.a + other.a, self.b + other.b, n)

    def is_zero(self):
        return all(p.is_zero() for p in self.nums)

    def __eq__(self, other):
        if not isinstance(other, VRatFn):
            return NotImplemented
        d = self.sub(other)
        return d.is_zero()

    def sub(self, other):
        """Exact difference via cross-multiplication (same n required)."""
        if self.b > 0 and other.b > 0 and self.n != other.n:
            raise ValueError("incompatible pole structures")
        n = self.n if self.b > 0 else other.n
        a = max(self.a, other.a)
        b = max(self.b, other.b)
        out = []
        for p, q in zip(self.nums, other.nums):
            pp = p.shift(a - self.a)
            for _ in range(b - self.b):
                pp = pp.mul_zn_minus_1(n)
            qq = q.shift(a - other.a)
            for _ in range(b - other.b):
                qq = qq.mul_zn_minus_1(n)
            out.append(pp - qq)
        return VRatFn(out, a, b, n)


def bilinear_pairing_rat(f, g):
    """<f, g> = sum_i f_i g_i as an exact scalar rational function."""
    return f.pairing(g)


# ---------------------------------------------------------------------------
# Residues (floating point, with a contour-quadrature cross-check)
# ---------------------------------------------------------------------------

def residue_numeric(f, pole, pole_order, tol=1e-8):
    """Residue of f (VRatFn, scalar or vector) at `pole` of the given order.

    Uses the derivative formula res = (1/(o-1)!) d^{o-1}/dz^{o-1} [(z-p)^o f]
    evaluated in floating point.  The pole must be a root of the denominator
    of multiplicity `pole_order` within tolerance, else PoleOrderMismatch.
    """
    o = pole_order
    if o < 1:
        raise PoleOrderMismatch("pole order must be >= 1")
    p = complex(pole)
    den = f.denominator()
    dt = den.taylor_at(p, 2 * o + 1)
    scale = max(np.max(np.abs(dt)), 1.0)
    if any(abs(dt[j]) > tol * scale for j in range(o)) or abs(dt[o]) <= tol * scale:
        raise PoleOrderMismatch(
            f"denominator does not vanish to order exactly {o} at {p}")
    out = []
    dshift = dt[o:2 * o + 1]          # Taylor coeffs of den/(z-p)^o
    for num in f.nums:
        nt = num.taylor_at(p, o - 1)  # need (z-p)^{o-1} coefficient of num/dshift
        q = _series_div(nt, dshift, o - 1)
        out.append(q[o - 1])
    return out[0] if f.dim == 1 else np.array(out)


def _series_div(a, b, order):
    """Truncated power-series division a/b, b[0] != 0."""
    if abs(b[0]) == 0:
        raise DivisionByZeroJet("series division by zero constant term")
    q = np.zeros(order + 1, dtype=complex)
    for k in range(order + 1):
        s = a[k] if k < len(a) else 0.0
        for j in range(1, min(k, len(b) - 1) + 1):
            s -= b[j] * q[k - j]
        q[k] = s / b[0]
    return q


def contour_residue(f, pole, radius=0.05, points=256):
    """(1/2pi i) * closed contour integral of f on |z - pole| = radius."""
    theta = 2 * np.pi * np.arange(points) / points
    z = complex(pole) + radius * np.exp(1j * theta)
    vals = f.eval(z)                        # (points, dim)
    dz = radius * 1j * np.exp(1j * theta)
    integ = (vals * dz[:, None]).mean(axis=0)
    res = integ / 1j
    return res[0] if f.dim == 1 else res


def integrate_polynomial(p):
    """Exact antiderivative of a CPoly (constant of integration 0)."""
    return CPoly([QC_ZERO] + [c / qc(k + 1) for k, c in enumerate(p.coeffs)])
