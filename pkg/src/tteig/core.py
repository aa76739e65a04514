"""Tensor-train vectors and operators with their contraction kernels.

Conventions used throughout the library:

* A vector core is an order-3 array of shape ``(r_left, n, r_right)``; an
  operator core is order-4 with shape ``(ra_left, n_row, n_col, ra_right)``.
* Boundary ranks are 1 and neighbouring ranks chain.
* The linearization of the full index is big-endian: the first mode varies
  slowest. Dense reference code and the oracle module share this choice.
* Everything is real double precision.

Values are immutable: cores are stored read-only and all operations return
new objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidArgument, SizeLimitExceeded

#: Default cap on the total size of a densified vector.
DENSE_VECTOR_CAP = 2**20


def _freeze(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, order="C")
    out.flags.writeable = False
    return out


def _check_chain(cores, order):
    if not cores:
        raise InvalidArgument("need at least one core")
    for k, c in enumerate(cores):
        if c.ndim != order:
            raise InvalidArgument(f"core {k} must have {order} axes, got {c.ndim}")
        if min(c.shape) < 1:
            raise InvalidArgument(f"core {k} has an empty axis: {c.shape}")
    if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
        raise InvalidArgument("boundary ranks must be 1")
    for k in range(len(cores) - 1):
        if cores[k].shape[-1] != cores[k + 1].shape[0]:
            raise InvalidArgument(
                f"rank mismatch between cores {k} and {k + 1}: "
                f"{cores[k].shape[-1]} vs {cores[k + 1].shape[0]}")


class TTVector:
    """A d-dimensional vector in tensor-train form.

    Parameters
    ----------
    cores : sequence of ndarray
        Order-3 cores, ``cores[k]`` of shape ``(r[k-1], n[k], r[k])``.
    center : int or None
        Orthogonality center: cores left of it are left-orthogonal and
        cores right of it are right-orthogonal. ``None`` means unknown.
    """

    __slots__ = ("cores", "center")

    def __init__(self, cores, center=None):
        cores = [_freeze(c) for c in cores]
        _check_chain(cores, 3)
        d = len(cores)
        if center is not None and not 0 <= center < d:
            raise InvalidArgument(f"center {center} out of range for d={d}")
        self.cores = cores
        self.center = center

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def mode_sizes(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        """Internal bond ranks (d-1 of them)."""
        return tuple(c.shape[2] for c in self.cores[:-1])

    @property
    def size(self) -> int:
        return math.prod(self.mode_sizes)

    def norm(self) -> float:
        if self.center is not None:
            return float(np.linalg.norm(self.cores[self.center]))
        return math.sqrt(max(dot(self, self), 0.0))

    def __repr__(self):
        return (f"TTVector(d={self.ndim}, n={list(self.mode_sizes)}, "
                f"r={list(self.ranks)}, center={self.center})")


class TTMatrix:
    """A linear operator in tensor-train form (one order-4 core per mode)."""

    __slots__ = ("cores", "symmetric")

    def __init__(self, cores, symmetric=False):
        cores = [_freeze(c) for c in cores]
        _check_chain(cores, 4)
        for k, c in enumerate(cores):
            if c.shape[1] != c.shape[2]:
                raise InvalidArgument(f"operator core {k} must be square in its mode")
        self.cores = cores
        self.symmetric = bool(symmetric)

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def mode_sizes(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.shape[3] for c in self.cores[:-1])

    @property
    def size(self) -> int:
        return math.prod(self.mode_sizes)

    def __repr__(self):
        return (f"TTMatrix(d={self.ndim}, n={list(self.mode_sizes)}, "
                f"r={list(self.ranks)}, symmetric={self.symmetric})")


# ---------------------------------------------------------------------------
# construction and densification
# ---------------------------------------------------------------------------

def tt_random(mode_sizes, rank, seed) -> TTVector:
    """Random TT vector with the requested internal rank, right-orthogonalized.

    Internal ranks are clipped to the dimension bounds
    ``min(rank, prod(n[:k+1]), prod(n[k+1:]))``. Entries are standard normal
    from a generator seeded with ``seed``, so equal seeds give identical
    cores.
    """
    mode_sizes = [int(n) for n in mode_sizes]
    if not mode_sizes:
        raise InvalidArgument("mode_sizes must be non-empty")
    if min(mode_sizes) < 1 or rank < 1:
        raise InvalidArgument("mode sizes and rank must be positive")
    d = len(mode_sizes)
    ranks = [1] + [
        min(int(rank), math.prod(mode_sizes[:k + 1]), math.prod(mode_sizes[k + 1:]))
        for k in range(d - 1)
    ] + [1]
    rng = np.random.default_rng(seed)
    cores = [rng.standard_normal((ranks[k], mode_sizes[k], ranks[k + 1]))
             for k in range(d)]
    return shift_center(TTVector(cores), 0)


def tt_to_dense(x: TTVector, cap: int = DENSE_VECTOR_CAP) -> np.ndarray:
    """Materialize the represented vector (big-endian index order)."""
    if x.size > cap:
        raise SizeLimitExceeded(f"dense size {x.size} exceeds cap {cap}")
    v = x.cores[0].reshape(x.cores[0].shape[1], -1)
    for core in x.cores[1:]:
        rl, n, rr = core.shape
        v = (v @ core.reshape(rl, n * rr)).reshape(-1, rr)
    return np.ascontiguousarray(v).reshape(-1)


def dot(x: TTVector, y: TTVector) -> float:
    """Euclidean inner product of two TT vectors."""
    if x.mode_sizes != y.mode_sizes:
        raise InvalidArgument(
            f"mode sizes differ: {x.mode_sizes} vs {y.mode_sizes}")
    m = np.ones((1, 1))
    for xc, yc in zip(x.cores, y.cores):
        t = np.tensordot(m, yc, axes=([1], [0]))        # (rx, n, ry')
        m = np.tensordot(xc, t, axes=([0, 1], [0, 1]))  # (rx', ry')
    return float(m[0, 0])


def norm(x: TTVector) -> float:
    return x.norm()


# ---------------------------------------------------------------------------
# orthogonalization and rounding
# ---------------------------------------------------------------------------

def _left_orth_site(cores, k):
    """QR on site k; the triangular factor moves into site k+1."""
    rl, n, rr = cores[k].shape
    q, r = np.linalg.qr(cores[k].reshape(rl * n, rr))
    cores[k] = q.reshape(rl, n, q.shape[1])
    cores[k + 1] = np.tensordot(r, cores[k + 1], axes=([1], [0]))


def _right_orth_site(cores, k):
    """LQ on site k; the triangular factor moves into site k-1."""
    rl, n, rr = cores[k].shape
    q, r = np.linalg.qr(cores[k].reshape(rl, n * rr).T)
    cores[k] = q.T.reshape(q.shape[1], n, rr)
    cores[k - 1] = np.tensordot(cores[k - 1], r.T, axes=([2], [0]))


def shift_center(x: TTVector, to: int) -> TTVector:
    """Move the orthogonality center to position ``to``.

    Only QR factorizations are used, so the represented vector is preserved
    up to round-off and no rank truncation happens (ranks can only shrink
    when a bond exceeds its dimension bound).
    """
    d = x.ndim
    if not 0 <= to < d:
        raise InvalidArgument(f"target {to} out of range for d={d}")
    cores = [np.array(c) for c in x.cores]
    if x.center is None:
        lo, hi = 0, d - 1
    else:
        lo, hi = min(x.center, to), max(x.center, to)
    for k in range(lo, to):
        _left_orth_site(cores, k)
    for k in range(hi, to, -1):
        _right_orth_site(cores, k)
    return TTVector(cores, center=to)


def _rank_from_tail(s: np.ndarray, delta: float, rmax) -> int:
    """Smallest kept rank whose discarded tail has norm strictly below delta.

    Values exactly at the budget boundary are kept; the kept rank is at
    least 1 and at most ``rmax``.
    """
    nsv = len(s)
    tail = np.zeros(nsv + 1)
    tail[:nsv] = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
    keep = nsv
    for r in range(nsv + 1):
        if tail[r] < delta:
            keep = r
            break
    keep = max(1, keep)
    if rmax is not None:
        keep = min(keep, int(rmax))
    return keep


def tt_round(x: TTVector, eps: float, rmax=None) -> TTVector:
    """SVD truncation to relative accuracy ``eps`` and rank cap ``rmax``.

    The truncation budget ``eps * ||x||`` is split evenly over the d-1
    bonds, so the total error obeys ``||y - x|| <= eps * ||x||``.
    """
    if eps < 0:
        raise InvalidArgument("eps must be non-negative")
    if rmax is not None and rmax < 1:
        raise InvalidArgument("rmax must be at least 1")
    d = x.ndim
    if d == 1:
        return TTVector(x.cores, center=0)
    y = shift_center(x, d - 1)
    delta = eps * y.norm() / math.sqrt(d - 1)
    cores = [np.array(c) for c in y.cores]
    for k in range(d - 1, 0, -1):
        rl, n, rr = cores[k].shape
        u, s, vt = np.linalg.svd(cores[k].reshape(rl, n * rr), full_matrices=False)
        r = _rank_from_tail(s, delta, rmax)
        cores[k] = vt[:r].reshape(r, n, rr)
        cores[k - 1] = np.tensordot(cores[k - 1], u[:, :r] * s[:r], axes=([2], [0]))
    return TTVector(cores, center=0)


def tt_round_operator(a: TTMatrix, eps: float, rmax=None) -> TTMatrix:
    """SVD truncation of an operator, with row/column modes fused per site."""
    fused = TTVector([c.reshape(c.shape[0], c.shape[1] * c.shape[2], c.shape[3])
                      for c in a.cores])
    rounded = tt_round(fused, eps, rmax)
    cores = [c.reshape(c.shape[0], n, n, c.shape[2])
             for c, n in zip(rounded.cores, a.mode_sizes)]
    return TTMatrix(cores, symmetric=a.symmetric)


# ---------------------------------------------------------------------------
# operator application
# ---------------------------------------------------------------------------

def matvec(a: TTMatrix, x: TTVector) -> TTVector:
    """Apply a TT operator to a TT vector; result ranks are the products."""
    if a.mode_sizes != x.mode_sizes:
        raise InvalidArgument(
            f"mode sizes differ: {a.mode_sizes} vs {x.mode_sizes}")
    cores = []
    for ac, xc in zip(a.cores, x.cores):
        g, n, _, e = ac.shape
        rl, _, rr = xc.shape
        yc = np.einsum("gijd,ajb->gaidb", ac, xc)
        cores.append(yc.reshape(g * rl, n, e * rr))
    return TTVector(cores)


# ---------------------------------------------------------------------------
# environments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Environment:
    """Partial contraction of the bra-operator-ket network.

    ``side='L'`` with ``boundary=k`` covers sites ``0..k-1``; ``side='R'``
    with ``boundary=k`` covers sites ``k..d-1``. Data axes are
    ``(bra rank, operator rank, ket rank)`` at the open bond.
    """

    side: str
    boundary: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.side not in ("L", "R"):
            raise InvalidArgument("side must be 'L' or 'R'")
        if self.data.ndim != 3:
            raise InvalidArgument("environment data must have 3 axes")
        object.__setattr__(self, "data", _freeze(self.data))

    @classmethod
    def trivial_left(cls) -> "Environment":
        return cls("L", 0, np.ones((1, 1, 1)))

    @classmethod
    def trivial_right(cls, d: int) -> "Environment":
        return cls("R", d, np.ones((1, 1, 1)))


def _env_data(env) -> np.ndarray:
    return env.data if isinstance(env, Environment) else np.asarray(env)


def env_extend_left(env: Environment, a_core, bra_core, ket_core) -> Environment:
    """Absorb one more site into a left environment.

    For the projected local problem to be a plain eigenproblem the absorbed
    bra/ket cores must be left-orthogonal; that is the caller's concern,
    the contraction itself is valid for any cores.
    """
    data = _env_data(env)
    na, _, nc = data.shape
    if bra_core.shape[0] != na or a_core.shape[0] != data.shape[1] \
            or ket_core.shape[0] != nc:
        raise InvalidArgument("environment and core ranks do not match")
    if bra_core.shape[1] != a_core.shape[1] or ket_core.shape[1] != a_core.shape[2]:
        raise InvalidArgument("mode sizes of cores do not match the operator")
    t = np.tensordot(data, bra_core, axes=([0], [0]))     # (g, c, i, a')
    t = np.tensordot(t, a_core, axes=([0, 2], [0, 1]))    # (c, a', j, e)
    t = np.tensordot(t, ket_core, axes=([0, 2], [0, 1]))  # (a', e, c')
    boundary = env.boundary + 1 if isinstance(env, Environment) else 0
    return Environment("L", boundary, t)


def env_extend_right(env: Environment, a_core, bra_core, ket_core) -> Environment:
    """Absorb one more site into a right environment (mirror of the left)."""
    data = _env_data(env)
    if bra_core.shape[2] != data.shape[0] or a_core.shape[3] != data.shape[1] \
            or ket_core.shape[2] != data.shape[2]:
        raise InvalidArgument("environment and core ranks do not match")
    if bra_core.shape[1] != a_core.shape[1] or ket_core.shape[1] != a_core.shape[2]:
        raise InvalidArgument("mode sizes of cores do not match the operator")
    t = np.tensordot(bra_core, data, axes=([2], [0]))      # (a, i, e, c')
    t = np.tensordot(t, a_core, axes=([1, 2], [1, 3]))     # (a, c', g, j)
    t = np.tensordot(t, ket_core, axes=([1, 3], [2, 1]))   # (a, g, c)
    boundary = env.boundary - 1 if isinstance(env, Environment) else 0
    return Environment("R", boundary, t)


class LocalOperator:
    """The operator projected onto one open site, applied matrix-free.

    Wraps the selected contraction kernel; ``matmat`` applies the operator
    to several vectors at once, which is what block eigensolvers need.
    """

    def __init__(self, env_l, a_core, env_r):
        self.env_l = np.ascontiguousarray(_env_data(env_l))
        self.a_core = np.ascontiguousarray(a_core)
        self.env_r = np.ascontiguousarray(_env_data(env_r))
        if self.env_l.shape[1] != self.a_core.shape[0] \
                or self.env_r.shape[1] != self.a_core.shape[3]:
            raise InvalidArgument("operator ranks do not match the environments")
        n = self.a_core.shape[1]
        self.dim_out = self.env_l.shape[0] * n * self.env_r.shape[0]
        self.dim = self.env_l.shape[2] * n * self.env_r.shape[2]

    @property
    def shape(self):
        return (self.dim_out, self.dim)

    def matmat(self, block: np.ndarray) -> np.ndarray:
        block = np.asarray(block, dtype=np.float64)
        if block.ndim != 2 or block.shape[0] != self.dim:
            raise InvalidArgument(
                f"block must be ({self.dim}, k), got {block.shape}")
        return _kernels.local_apply(self.env_l, self.a_core, self.env_r, block)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != self.dim:
            raise InvalidArgument(f"vector must have length {self.dim}")
        return self.matmat(v[:, None])[:, 0]

    def materialize(self) -> np.ndarray:
        """Dense matrix of the projected operator (small problems only).

        Contracts the environments with the operator core directly, which
        costs a factor of the local dimension less than applying the
        operator to an identity block and gives the same matrix.
        """
        # (a,g,c) x (g,i,j,e) -> (a,c,i,j,e); then contract e with (b,e,d)
        k1 = np.tensordot(self.env_l, self.a_core, axes=([1], [0]))
        h = np.tensordot(k1, self.env_r, axes=([4], [1]))  # (a,c,i,j,b,d)
        h = h.transpose(0, 2, 4, 1, 3, 5)                  # (a,i,b,c,j,d)
        return np.ascontiguousarray(h).reshape(self.dim_out, self.dim)


def local_matvec(env_l, a_core, env_r, v) -> np.ndarray:
    """Apply the projected operator at one site to a dense local vector."""
    return LocalOperator(env_l, a_core, env_r).matvec(v)
