"""Generation and exact verification of k-isotropic minimal surfaces.

The Weierstrass datum is the vector meromorphic function

    x_z = P(z) / (z^2 (z^n - 1)^2),      n = 2m + 1,

with P supported on {0, l-s..l+s, n, 2l, n+l-s..n+l+s, 2n}, l = m + 1,
s = 3k.  Planar ends force linear relations among the coefficient vectors;
conformality and higher isotropy reduce to a homogeneous rational linear
system on the pairings tau_j = <v_{l-j}, v_{l+j}>, which is solved exactly
and realized by explicit Gaussian-rational vectors in R^{6k+3}.

Every certificate here is exact: conformality and isotropy order are decided
at the level of polynomial identities over Q(i); only the per-end residue
magnitudes are floating point (they have an exact counterpart in the
residue-relation check).
"""

import random
from dataclasses import dataclass, field

import numpy as np

from .crational import (CPoly, QC, QC_I, QC_ONE, QC_ZERO, VRatFn, _as_mpq,
                        _rat_sqrt, mpq, qc, residue_numeric)
from .errors import (DegenerateSurface, InconsistentTargets,
                     NoNontrivialSolution, NonzeroResidue, NotConformal,
                     ParameterDomain)

_Q0 = mpq(0)
_Q1 = mpq(1)


def _ff(x, r):
    """Falling factorial x (x-1) ... (x-r+1); zero when 0 <= x < r."""
    out = _Q1
    for i in range(r):
        out *= (x - i)
    return out


# ---------------------------------------------------------------------------
# tau linear algebra
# ---------------------------------------------------------------------------

def _elimination_forms(k, m):
    """tau_{s+1}, tau_{s+2} as linear forms in (tau_0, ..., tau_s).

    From the conformal+residue solution:
      tau_{s+1} = -1/2 tau_0 - sum_j tau_j
      tau_{s+2} = -(m+1)/m tau_0
                  - sum_j ((m-j+1)/(m+j) + (m+j+1)/(m-j)) tau_j
    """
    s = 3 * k
    t1 = [_Q0] * (s + 1)
    t2 = [_Q0] * (s + 1)
    t1[0] = mpq(-1, 2)
    t2[0] = -mpq(m + 1, m)
    for j in range(1, s + 1):
        t1[j] = mpq(-1)
        t2[j] = -(mpq(m - j + 1, m + j) + mpq(m + j + 1, m - j))
    return t1, t2


def _unit_form(s, j):
    e = [_Q0] * (s + 1)
    e[j] = _Q1
    return e


def _form_add(f, g, c=_Q1):
    return [a + c * b for a, b in zip(f, g)]


def _form_scale(f, c):
    return [c * a for a in f]


def _lambda_forms(k, m):
    """Every potentially nonzero pairing lambda_{a,b} as a form in tau_0..s.

    Keys are unordered index pairs (a <= b).  Pairings follow from the vector
    recipe: the tau targets, plus the images under the residue relations
    v_{n+j} = ((n-j+1)/(j-1)) v_j and v_{2n} = (m+1)/m v_0 + 1/(2m) v_n.
    """
    s, n, l = 3 * k, 2 * m + 1, m + 1
    t1, t2 = _elimination_forms(k, m)
    lam = {}

    def put(a, b, form):
        key = (min(a, b), max(a, b))
        lam[key] = _form_add(lam.get(key, [_Q0] * (s + 1)), form)

    for j in range(0, s + 1):
        put(l - j, l + j, _unit_form(s, j))
        put(l - j, n + l + j, _form_scale(_unit_form(s, j), mpq(m - j + 1, m + j)))
        if j > 0:
            put(l + j, n + l - j, _form_scale(_unit_form(s, j), mpq(m + j + 1, m - j)))
        put(n + l - j, n + l + j,
            _form_scale(_unit_form(s, j),
                        mpq((m - j + 1) * (m + j + 1), (m + j) * (m - j))))
    put(0, 2 * l, t1)
    put(n, 2 * l, t2)
    put(2 * l, 2 * n, _form_add(_form_scale(t1, mpq(m + 1, m)),
                                _form_scale(t2, mpq(1, 2 * m))))
    return lam


def _support(k, m):
    s, n, l = 3 * k, 2 * m + 1, m + 1
    idx = {0, n, 2 * l, 2 * n}
    for j in range(0, s + 1):
        idx.update({l - j, l + j, n + l - j, n + l + j})
    return sorted(idx)


def _band_rows(k, m, r):
    """Rows of <P^(r), P^(r)> == 0 as forms in tau, one per coefficient band.

    Coefficient of z^{a+b-2r} collects ff(a,r) ff(b,r) lambda_{a,b} over all
    ordered support pairs with the same a+b.
    """
    lam = _lambda_forms(k, m)
    sup = _support(k, m)
    s = 3 * k
    bands = {}
    for a in sup:
        for b in sup:
            key = (min(a, b), max(a, b))
            if key not in lam:
                continue
            w = _ff(a, r) * _ff(b, r)
            if w == 0:
                continue
            c = a + b
            bands[c] = _form_add(bands.get(c, [_Q0] * (s + 1)), lam[key], w)
    return [f for f in bands.values() if any(x != 0 for x in f)]


def _rational_nullspace(rows, ncols):
    """Exact nullspace basis of the row system over Q."""
    mat = [list(r) for r in rows]
    pivots = []
    rix = 0
    for col in range(ncols):
        piv = None
        for i in range(rix, len(mat)):
            if mat[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        mat[rix], mat[piv] = mat[piv], mat[rix]
        inv = 1 / mat[rix][col]
        mat[rix] = [x * inv for x in mat[rix]]
        for i in range(len(mat)):
            if i != rix and mat[i][col] != 0:
                c = mat[i][col]
                mat[i] = [x - c * y for x, y in zip(mat[i], mat[rix])]
        pivots.append(col)
        rix += 1
        if rix == len(mat):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [_Q0] * ncols
        v[fc] = _Q1
        for prow, pcol in enumerate(pivots):
            v[pcol] = -mat[prow][fc]
        basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# Coefficient tables (printed-lemma shape, exact rationals)
# ---------------------------------------------------------------------------

@dataclass
class CoeffTables:
    """Factorial tables (a, b, c) of the k-isotropy system, rows i = 0..k-1.

    Row shapes:
      a[i][0] tau_0 + 2 sum_j a[i][j] tau_j = 0
      b[i][s+2] tau_{s+2} + b[i][0] tau_0 + sum_j b[i][j] tau_j = 0
      c[i][s+2] (2(m+1)/m tau_{s+1} + 1/m tau_{s+2})
          + c[i][0] tau_0 + 2 sum_j c[i][j] tau_j = 0
    """
    k: int
    m: int
    a: list
    b: list
    c: list

    @property
    def s(self):
        return 3 * self.k


def coefficient_tables(k, m):
    if k < 0:
        raise ParameterDomain("k must be >= 0")
    if k > 0 and m < 3 * k + 1:
        raise ParameterDomain(f"need m >= 3k+1 = {3 * k + 1}, got m = {m}")
    s, n, l = 3 * k, 2 * m + 1, m + 1
    ta, tb, tc = [], [], []
    for i in range(k):
        r = i + 1
        arow = {0: _ff(l, r) ** 2}
        brow = {0: _ff(l, r) * _ff(n + l, r) * mpq(m + 1, m),
                s + 2: _ff(n, r) * _ff(2 * l, r)}
        crow = {0: _ff(n + l, r) ** 2 * mpq((m + 1) ** 2, m * m),
                s + 2: _ff(2 * l, r) * _ff(2 * n, r)}
        for j in range(1, s + 1):
            arow[j] = _ff(l - j, r) * _ff(l + j, r)
            brow[j] = (_ff(l - j, r) * _ff(n + l + j, r) * mpq(m - j + 1, m + j)
                       + _ff(l + j, r) * _ff(n + l - j, r) * mpq(m + j + 1, m - j))
            crow[j] = (_ff(n + l - j, r) * _ff(n + l + j, r)
                       * mpq((m - j + 1) * (m + j + 1), (m + j) * (m - j)))
        ta.append(arow)
        tb.append(brow)
        tc.append(crow)
    return CoeffTables(k=k, m=m, a=ta, b=tb, c=tc)


def tables_rows(tables):
    """The three table rows per i as forms in (tau_0..tau_s), eliminated."""
    k, m, s = tables.k, tables.m, tables.s
    t1, t2 = _elimination_forms(k, m)
    rows = []
    for i in range(k):
        ra = [_Q0] * (s + 1)
        ra[0] = tables.a[i][0]
        for j in range(1, s + 1):
            ra[j] = 2 * tables.a[i][j]
        rows.append(ra)

        rb = _form_scale(t2, tables.b[i][s + 2])
        rb[0] += tables.b[i][0]
        for j in range(1, s + 1):
            rb[j] += tables.b[i][j]
        rows.append(rb)

        rc = _form_add(_form_scale(t1, 2 * mpq(m + 1, m) * tables.c[i][s + 2]),
                       _form_scale(t2, mpq(1, m) * tables.c[i][s + 2]))
        rc[0] += tables.c[i][0]
        for j in range(1, s + 1):
            rc[j] += 2 * tables.c[i][j]
        rows.append(rc)
    return rows


# ---------------------------------------------------------------------------
# tau solving
# ---------------------------------------------------------------------------

@dataclass
class TauVector:
    """Solution (tau_0 .. tau_{s+2}) of the conformal/isotropy system."""
    k: int
    m: int
    values: tuple
    nullspace_dim: int = 1

    @property
    def s(self):
        return 3 * self.k

    def __getitem__(self, j):
        return self.values[j]


def _tau_candidates(basis, s, m, seed):
    """Deterministic sequence of nullspace elements, generic first."""
    rng = random.Random(seed)
    d = len(basis)
    combos = [[_Q1] * d]
    for _ in range(6):
        combos.append([mpq(rng.randrange(1, 40), rng.randrange(1, 16))
                       for _ in range(d)])
    for c in combos:
        v = [_Q0] * (s + 1)
        for ci, bi in zip(c, basis):
            v = _form_add(v, bi, ci)
        if all(x == 0 for x in v):
            continue
        if v[0] != 0:
            v = _form_scale(v, mpq(2 * m) / v[0])   # normalize tau_0 = 2m
        yield v


def solve_tau(k, m, free_params=None, seed=0):
    """Exact nontrivial solution of the combined conformal/isotropy system.

    tau_{s+1}, tau_{s+2} are eliminated through the conformal-condition
    solution; the remaining unknowns (tau_0..tau_s) satisfy the isotropy
    band rows for derivative orders 1..k.  free_params, when given, are the
    coordinates in the exact nullspace basis (a single value is interpreted
    as a target for tau_0).
    """
    if k < 0:
        raise ParameterDomain("k must be >= 0")
    if k > 0 and m < 3 * k + 1:
        raise ParameterDomain(f"need m >= 3k+1 = {3 * k + 1}, got m = {m}")
    s = 3 * k
    for row in _band_rows(k, m, 0):
        if any(x != 0 for x in row):
            raise AssertionError("conformal band rows must vanish after elimination")
    rows = []
    for r in range(1, k + 1):
        rows.extend(_band_rows(k, m, r))
    basis = _rational_nullspace(rows, s + 1) if rows else [_unit_form(s, 0)]
    if not basis:
        raise NoNontrivialSolution(f"only the zero solution for (k, m) = ({k}, {m})")

    if free_params is not None:
        params = [_as_mpq(p) for p in free_params]
        if len(params) == 1 and len(basis) >= 1:
            v = basis[0]
            if v[0] == 0:
                for b in basis[1:]:
                    v = _form_add(v, b)
                    if v[0] != 0:
                        break
            if v[0] == 0:
                raise NoNontrivialSolution("tau_0 is forced to zero; cannot hit target")
            v = _form_scale(v, params[0] / v[0])
        else:
            if len(params) != len(basis):
                raise ParameterDomain(
                    f"free_params needs 1 or {len(basis)} entries")
            v = [_Q0] * (s + 1)
            for ci, bi in zip(params, basis):
                v = _form_add(v, bi, ci)
        if all(x == 0 for x in v):
            raise NoNontrivialSolution("free parameters gave the zero solution")
        chosen = v
    else:
        chosen = None
        for cand in _tau_candidates(basis, s, m, seed):
            chosen = cand
            if _is_strict_candidate(cand, k, m):
                break
        if chosen is None:
            raise NoNontrivialSolution("no nonzero candidate in nullspace")

    t1, t2 = _elimination_forms(k, m)
    tau_s1 = sum(a * b for a, b in zip(t1, chosen))
    tau_s2 = sum(a * b for a, b in zip(t2, chosen))
    return TauVector(k=k, m=m, values=tuple(chosen) + (tau_s1, tau_s2),
                     nullspace_dim=len(basis))


def _is_strict_candidate(tau_form, k, m):
    """Quick exact strictness probe: band rows at order k+1 not all zero."""
    for row in _band_rows(k, m, k + 1):
        if sum(a * b for a, b in zip(row, tau_form)) != 0:
            return True
    return False


# ---------------------------------------------------------------------------
# Vector assembly
# ---------------------------------------------------------------------------

@dataclass
class LambdaTable:
    """Exact pairing targets lambda_{a,b} plus the realized Gram scale.

    The assembled vectors satisfy <v_a, v_b> = scale * lambda_{a,b}; scale
    is 1 whenever tau_0 is a rational square (the only pairing that cannot
    always be realized rationally at scale 1 is the self-pairing of v_l).
    """
    entries: dict
    scale: object = _Q1

    def get(self, a, b):
        return self.entries.get((min(a, b), max(a, b)), _Q0)

    def items(self):
        return sorted(self.entries.items())


@dataclass
class EndReport:
    location: complex
    pole_order: int
    residue_mag: float
    leading: object
    leading_isotropy: float
    classification: str


@dataclass
class WeierstrassData:
    """Exact Weierstrass datum x_z = P(z) / (z^2 (z^n - 1)^2)."""
    k: int
    m: int
    ambient_dim: int
    vectors: dict                 # power -> tuple of QC, length ambient_dim
    tau: TauVector = None
    lambda_scale: object = _Q1
    provenance: dict = field(default_factory=dict)

    @property
    def n(self):
        return 2 * self.m + 1

    @property
    def l(self):
        return self.m + 1

    @property
    def s(self):
        return 3 * self.k

    def xz(self):
        deg = max(self.vectors) if self.vectors else 0
        nums = []
        for i in range(self.ambient_dim):
            cs = [QC_ZERO] * (deg + 1)
            for a, v in self.vectors.items():
                cs[a] = v[i]
            nums.append(CPoly(cs))
        return VRatFn(nums, a=2, b=2, n=self.n)

    def lambda_table(self):
        lam = _lambda_forms(self.k, self.m)
        tau = self.tau.values[:self.s + 1]
        entries = {}
        for key, form in lam.items():
            val = sum(a * b for a, b in zip(form, tau))
            if val != 0:
                entries[key] = val
        return LambdaTable(entries=entries, scale=self.lambda_scale)

    def gram_entry(self, a, b):
        """Exact <v_a, v_b> of the realized vectors."""
        va = self.vectors.get(a)
        vb = self.vectors.get(b)
        if va is None or vb is None:
            return QC_ZERO
        out = QC_ZERO
        for x, y in zip(va, vb):
            out = out + x * y
        return out

    def ends(self):
        """Finite end locations: 0 and the n-th roots of unity."""
        n = self.n
        return [0j] + [np.exp(2j * np.pi * j / n) for j in range(1, n + 1)]


def _e(dim, i, coeff=QC_ONE):
    v = [QC_ZERO] * dim
    v[i - 1] = qc(coeff) if not isinstance(coeff, QC) else coeff
    return v


def _vadd(u, v):
    return [a + b for a, b in zip(u, v)]


def _vscale(u, c):
    c = c if isinstance(c, QC) else QC(c)
    return [a * c for a in u]


def _pair_vec(dim, slot, sign):
    """e_{2 slot + 2} + sign * i * e_{2 slot + 3} for slot >= 1."""
    v = [QC_ZERO] * dim
    v[2 * slot + 1] = QC_ONE
    v[2 * slot + 2] = QC_I if sign > 0 else -QC_I
    return v


def assemble_vectors(tau, k=None, m=None):
    """Realize a TauVector by explicit Gaussian-rational coefficient vectors.

    Conjugate pairs put coefficient 1 on the minus branch and solve the plus
    branch from the tau target (the pairing of a pair is 2 c- c+).  The lone
    self-paired vector v_l needs c_l^2 = tau_0; when tau_0 is not a rational
    square the whole Gram is scaled by |tau_0| (recorded in lambda_scale), so
    the assembled data stays exactly rational and all scale-invariant
    certificates are unaffected.
    """
    k = tau.k if k is None else k
    m = tau.m if m is None else m
    s, n, l = 3 * k, 2 * m + 1, m + 1
    dim = 2 * s + 3
    tvals = tau.values

    tau0 = tvals[0]
    scale = _Q1
    c_l = _exact_sqrt_qc(tau0)
    if c_l is None:
        if tau0 == 0:
            raise InconsistentTargets("tau_0 = 0 leaves v_l undetermined")
        scale = abs(tau0)
        c_l = _exact_sqrt_qc(scale * tau0)
        if c_l is None:
            raise InconsistentTargets("scaled tau_0 is not a rational square")

    eplus = [QC_ZERO] * dim
    eplus[0], eplus[1] = QC_ONE, QC_I
    eminus = [QC_ZERO] * dim
    eminus[0], eminus[1] = QC_ONE, -QC_I

    vec = {}
    vec[2 * l] = eminus
    vec[0] = _vscale(eplus, QC(scale * tvals[s + 1] / 2))
    vec[n] = _vscale(eplus, QC(scale * tvals[s + 2] / 2))
    vec[2 * n] = _vadd(_vscale(vec[0], QC(mpq(m + 1, m))),
                       _vscale(vec[n], QC(mpq(1, 2 * m))))
    vec[l] = _e(dim, 3, c_l)
    vec[n + l] = _vscale(vec[l], QC(mpq(m + 1, m)))
    for j in range(1, s + 1):
        vminus = _pair_vec(dim, j, -1)
        vplus = _vscale(_pair_vec(dim, j, +1), QC(scale * tvals[j] / 2))
        vec[l - j] = vminus
        vec[l + j] = vplus
        vec[n + l + j] = _vscale(vplus, QC(mpq(m - j + 1, m + j)))
        vec[n + l - j] = _vscale(vminus, QC(mpq(m + j + 1, m - j)))

    vec = {a: tuple(v) for a, v in vec.items()
           if any(not c.is_zero() for c in v)}
    return WeierstrassData(k=k, m=m, ambient_dim=dim, vectors=vec, tau=tau,
                           lambda_scale=scale,
                           provenance={"generator": "assemble_vectors"})


def _exact_sqrt_qc(q):
    if q == 0:
        return QC_ZERO
    if q > 0:
        r = _rat_sqrt(q)
        return None if r is None else QC(r)
    r = _rat_sqrt(-q)
    return None if r is None else QC(0, r)


def generate(k, m, seed=0, free_params=None):
    """solve_tau + assemble_vectors, with an exact strictness certificate."""
    last = None
    for attempt in range(8):
        tau = solve_tau(k, m, free_params=free_params, seed=seed + attempt)
        W = assemble_vectors(tau, k, m)
        W.provenance.update({"generator": "generate", "seed": seed,
                             "k": k, "m": m,
                             "nullspace_dim": tau.nullspace_dim})
        last = W
        if free_params is not None:
            return W
        if isotropy_order(W) == k:
            return W
    return last


# ---------------------------------------------------------------------------
# Exact verifiers
# ---------------------------------------------------------------------------

@dataclass
class ConformalCheck:
    passed: bool
    offending: list
    degenerate: bool = False


def _as_xz(obj):
    if isinstance(obj, WeierstrassData):
        return obj.xz()
    if isinstance(obj, VRatFn):
        return obj
    if hasattr(obj, "xz"):
        return obj.xz()
    raise TypeError("expected WeierstrassData, VRatFn or closed-form surface")


def verify_conformal(W):
    """Exact check that the numerator of <x_z, x_z> vanishes identically."""
    f = _as_xz(W)
    num = f.pairing(f).nums[0]
    if f.is_zero():
        return ConformalCheck(passed=True, offending=[], degenerate=True)
    off = [j for j, c in enumerate(num.coeffs) if not c.is_zero()]
    return ConformalCheck(passed=num.is_zero(), offending=off)


def isotropy_order(W, max_order=None):
    """Largest k with <x_z^(j), x_z^(j)> == 0 exactly for all j <= k+1.

    x_z^(j) denotes the (j-1)-th derivative of x_z.  Returns "total" when the
    vanishing persists to the degree bound dim+2 (the derivative span of a
    rational curve has dimension at most dim, so diagonal vanishing up to
    dim+2 forces vanishing at every order).
    """
    f = _as_xz(W)
    if f.is_zero():
        raise DegenerateSurface("constant map has no isotropy order")
    if not verify_conformal(f).passed:
        raise NotConformal("<x_z, x_z> != 0")
    bound = f.dim + 2 if max_order is None else max_order
    g = f
    for j in range(2, bound + 1):
        g = g.derivative()
        if not g.pairing(g).nums[0].is_zero():
            return j - 2
    return "total"


def residue_relations_hold(W):
    """Exact symbolic form of the vanishing-residue conditions.

    For x_z = P / (z^2 (z^n - 1)^2) with deg P <= 2n these are
      p_1 = 0,
      (j-1) p_{n+j} = (n-j+1) p_j          (2 <= j <= n-1),
      (n-1) p_{2n} = p_n + (n+1) p_0.
    Returns (ok, witnesses).
    """
    f = _as_xz(W)
    if f.a != 2 or f.b != 2:
        raise ValueError("residue relations apply to the z^2 (z^n-1)^2 structure")
    n = f.n
    bad = []
    for i, p in enumerate(f.nums):
        if not p[1].is_zero():
            bad.append((i, 1))
        for j in range(2, n):
            if not (qc(j - 1) * p[n + j] - qc(n - j + 1) * p[j]).is_zero():
                bad.append((i, n + j))
        if not (qc(n - 1) * p[2 * n] - p[n] - qc(n + 1) * p[0]).is_zero():
            bad.append((i, 2 * n))
    return (not bad), bad


def integrate_primitive(W):
    """Exact antiderivative F with F' = x_z, F = A(z) / (z (z^n - 1)).

    Requires the residue relations to hold exactly (checked symbolically);
    the coefficients of A follow from matching
      P = A' z (z^n - 1) - A ((z^n - 1) + n z^n).
    """
    f = _as_xz(W)
    ok, bad = residue_relations_hold(f)
    if not ok:
        raise NonzeroResidue(f"residue relations fail at {bad[:4]}")
    n = f.n
    nums = []
    for p in f.nums:
        a = [QC_ZERO] * (n + 1)
        a[0] = p[0]
        for j in range(2, n):
            a[j] = p[j] / qc(1 - j)
        a[1] = p[n + 1] / qc(-n)
        a[n] = -p[2 * n]
        nums.append(CPoly(a))
    F = VRatFn(nums, a=1, b=1, n=n)
    if not F.derivative().sub(f).is_zero():
        raise AssertionError("primitive does not differentiate back to x_z")
    return F


def verify_planar_ends(W, tol=1e-10):
    """Classify every end of x_z; see EndReport.

    planar-end: double pole, vanishing residue, nonzero isotropic leading
    Laurent vector.  Infinity is regular iff the degree-2n coefficient vector
    is nonzero (immersed in the 1/z chart).
    """
    f = _as_xz(W)
    n = f.n
    locs = [0j] + [np.exp(2j * np.pi * j / n) for j in range(1, n + 1)]
    orders = [f.a] + [f.b] * n
    reports = []
    for p, dord in zip(locs, orders):
        reports.append(_classify_end(f, p, dord, tol))
    # point at infinity
    deg = max((q.degree() for q in f.nums), default=-1)
    top = np.array([complex(q[2 * n]) for q in f.nums])
    if deg == 2 * n and np.linalg.norm(top) > 0:
        inf_class = "regular"
    else:
        inf_class = "branch-point"
    reports.append(EndReport(location=np.inf, pole_order=0, residue_mag=0.0,
                             leading=top, leading_isotropy=0.0,
                             classification=inf_class))
    return reports


def _classify_end(f, p, den_order, tol):
    vals = np.array([q.eval(p) for q in f.nums])
    scale = max(np.max(np.abs(vals)), 1e-300)
    van = 0
    tay = np.stack([q.taylor_at(np.complex128(p), den_order)
                    for q in f.nums])
    norms = np.linalg.norm(tay, axis=0)
    while van < den_order and norms[van] <= tol * max(norms.max(), 1.0):
        van += 1
    order = den_order - van
    if order <= 0:
        return EndReport(location=p, pole_order=order, residue_mag=0.0,
                         leading=np.zeros(f.dim, dtype=complex),
                         leading_isotropy=0.0, classification="regular")
    lead = tay[:, van]
    dshift = f.denominator().taylor_at(np.complex128(p), 2 * den_order)
    lead = lead / dshift[den_order]
    iso = abs((lead * lead).sum()) / max(np.linalg.norm(lead) ** 2, 1e-300)
    if order == 2:
        res = residue_numeric(f, p, den_order)
        res_mag = float(np.linalg.norm(np.atleast_1d(res)))
        if res_mag < tol * max(1.0, scale) and np.linalg.norm(lead) > tol \
                and iso < 1e-8:
            cls = "planar-end"
        else:
            cls = "non-planar-pole"
    else:
        res = residue_numeric(f, p, den_order)
        res_mag = float(np.linalg.norm(np.atleast_1d(res)))
        cls = "non-planar-pole"
    return EndReport(location=p, pole_order=order, residue_mag=res_mag,
                     leading=lead, leading_isotropy=float(iso),
                     classification=cls)


# ---------------------------------------------------------------------------
# Closed-form constructions
# ---------------------------------------------------------------------------

def build_bryant_peng_xiao(m):
    """The classical datum x_z with R(z) = m + (m+1) z^{2m+1}:

    x_z = [R^2 (e1 + i e2) - z^{2m+2} (e1 - i e2) + 2 z^{m+1} R e3]
          / (z^2 (z^{2m+1} - 1)^2)
    """
    n, l = 2 * m + 1, m + 1
    dim = 3
    vec = {
        0: tuple(_vadd(_e(dim, 1, QC(m * m)), _e(dim, 2, QC(0, m * m)))),
        n: tuple(_vadd(_e(dim, 1, QC(2 * m * (m + 1))),
                       _e(dim, 2, QC(0, 2 * m * (m + 1))))),
        2 * n: tuple(_vadd(_e(dim, 1, QC((m + 1) ** 2)),
                           _e(dim, 2, QC(0, (m + 1) ** 2)))),
        2 * l: tuple(_vadd(_e(dim, 1, QC(-1)), _e(dim, 2, QC(0, 1)))),
        l: tuple(_e(dim, 3, QC(2 * m))),
        n + l: tuple(_e(dim, 3, QC(2 * (m + 1)))),
    }
    tau = TauVector(k=0, m=m,
                    values=(mpq(4 * m * m), mpq(-2 * m * m),
                            mpq(-4 * m * (m + 1))))
    return WeierstrassData(k=0, m=m, ambient_dim=dim, vectors=vec, tau=tau,
                           lambda_scale=_Q1,
                           provenance={"generator": "bryant_peng_xiao", "m": m})


@dataclass
class ClosedFormSurface:
    """A surface given directly by its exact primitive F (x = F + conj F)."""
    F: VRatFn
    name: str
    params: dict

    def xz(self):
        return self.F.derivative()


def build_r4_example(m):
    """Complete non-isotropic minimal surface in R^4 with 2m+1 planar ends.

    x = Re[ ((m+1)/(m-1) z^{2m} - 1)(e1+i e2) / (2 z (z^{2m}-1))
            + (e1 - i e2) / (2m z (z^{2m}-1))
            + z^{m-1} (e3 + i e4) / ((m-1)(z^{2m}-1))
            + z^m (e3 - i e4) / (2m (z^{2m}-1)) ]
    returned as the primitive F over the common denominator z (z^{2m} - 1).
    """
    if m < 2:
        raise ParameterDomain("need m >= 2")
    n2 = 2 * m
    half = mpq(1, 2)
    c1 = mpq(m + 1, 2 * (m - 1))
    c2 = mpq(1, 2 * m)
    num1 = CPoly.from_dict({n2: QC(c1), 0: QC(-half + c2)})
    num2 = CPoly.from_dict({n2: QC(0, c1), 0: QC(0, -half - c2)})
    num3 = CPoly.from_dict({m: QC(mpq(1, m - 1)), m + 1: QC(c2)})
    num4 = CPoly.from_dict({m: QC(0, mpq(1, m - 1)), m + 1: QC(0, -c2)})
    F = VRatFn((num1, num2, num3, num4), a=1, b=1, n=n2)
    return ClosedFormSurface(F=F, name="r4-planar-ends", params={"m": m})
