"""Linear algebra over the Lorentz-Minkowski space R^{n+2}_1.

Vectors are plain numpy arrays (real or complex) with the metric signature
(-, +, ..., +); the pairing is complex-bilinear, never Hermitian.  Rank and
intersection decisions use the Euclidean SVD (the indefinite form cannot
define a norm); the pairing enters only through Gram matrices.
"""

import numpy as np

from .errors import DimensionMismatch, NullDirection

RANK_TOL = 1e-9


def metric_signs(dim):
    g = np.ones(dim)
    g[0] = -1.0
    return g


def mdot(u, v):
    """Bilinear Lorentz pairing -u0*v0 + sum_{i>=1} ui*vi (no conjugation)."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape[-1] != v.shape[-1]:
        raise DimensionMismatch(
            f"mdot of dims {u.shape[-1]} and {v.shape[-1]}")
    return (u * v * metric_signs(u.shape[-1])).sum(axis=-1)


def mdot_herm(u, v):
    """Hermitian variant <u, conj(v)>; real nonnegative on u == v."""
    return mdot(u, np.conj(v))


def lorentz_gram_schmidt(vs, tol=1e-10):
    """Indefinite Gram-Schmidt in the given order.

    Returns (frame, signs) with pairwise mdot zero and self-pairings +-1.
    Raises NullDirection when a partial projection is numerically light-like;
    callers control the ordering, so no pivoting is attempted.
    """
    frame = []
    signs = []
    for v in vs:
        w = np.array(v, dtype=np.result_type(v, float))
        for u, s in zip(frame, signs):
            w = w - s * mdot(w, u) * u
        norm2 = mdot(w, w)
        scale = float(np.real(mdot_herm(w, w)))
        if scale == 0.0 or abs(norm2) < tol * scale:
            raise NullDirection(
                f"null direction at position {len(frame)} (|<w,w>| = {abs(norm2):.3e})")
        sign = 1.0 if np.real(norm2) > 0 else -1.0
        frame.append(w / np.sqrt(sign * norm2))
        signs.append(sign)
    return np.array(frame), np.array(signs)


def rank_of(vs, tol=RANK_TOL):
    """Numerical rank of the span via Euclidean singular values."""
    vs = np.atleast_2d(np.asarray(vs, dtype=complex))
    if vs.size == 0 or len(vs) == 0:
        return 0
    sv = np.linalg.svd(vs, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int((sv > tol * sv[0]).sum())


def orthonormal_span(vs, tol=RANK_TOL):
    """Euclidean-orthonormal basis of the span (rows), rank-truncated."""
    vs = np.atleast_2d(np.asarray(vs, dtype=complex))
    if len(vs) == 0:
        return np.zeros((0, vs.shape[-1]), dtype=complex)
    u, sv, vh = np.linalg.svd(vs, full_matrices=False)
    r = int((sv > tol * sv[0]).sum()) if sv.size and sv[0] > 0 else 0
    return vh[:r]


def project_span(vectors, basis):
    """Euclidean least-squares projection of vectors onto span(basis rows)."""
    q = orthonormal_span(basis)
    if q.shape[0] == 0:
        return np.zeros_like(np.asarray(vectors, dtype=complex))
    v = np.asarray(vectors, dtype=complex)
    return (v @ q.conj().T) @ q


def off_span_residual(vectors, basis):
    """Euclidean norm of each vector's component off span(basis rows)."""
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    rem = v - project_span(v, basis)
    return np.linalg.norm(rem, axis=-1)


class SubspaceBasis:
    """A list of spanning vectors plus bookkeeping flags."""

    def __init__(self, vectors, real_flag=False, rank_tolerance=RANK_TOL):
        self.vectors = np.atleast_2d(np.asarray(vectors))
        self.real_flag = bool(real_flag)
        self.rank_tolerance = float(rank_tolerance)

    @property
    def dim_ambient(self):
        return self.vectors.shape[-1]

    def rank(self):
        return rank_of(self.vectors, self.rank_tolerance)

    def __len__(self):
        return len(self.vectors)


def subspace_intersect(A, B, tol=1e-8):
    """Numerical intersection of two spans.

    Stacks the orthogonal-complement projectors of both spans and takes the
    nullspace: x is in the intersection iff (I - P_A)x = (I - P_B)x = 0.
    Empty intersection returns a rank-0 basis.
    """
    va = A.vectors if isinstance(A, SubspaceBasis) else np.atleast_2d(A)
    vb = B.vectors if isinstance(B, SubspaceBasis) else np.atleast_2d(B)
    if va.shape[-1] != vb.shape[-1]:
        raise DimensionMismatch("ambient dimensions differ")
    d = va.shape[-1]
    qa = orthonormal_span(va)
    qb = orthonormal_span(vb)
    ka = np.eye(d) - qa.conj().T @ qa
    kb = np.eye(d) - qb.conj().T @ qb
    stacked = np.vstack([ka, kb])
    u, sv, vh = np.linalg.svd(stacked)
    null = [vh[i].conj() for i in range(d) if sv[i] < tol * max(1.0, sv[0])]
    if not null:
        return SubspaceBasis(np.zeros((0, d), dtype=complex), rank_tolerance=tol)
    return SubspaceBasis(np.array(null), rank_tolerance=tol)
