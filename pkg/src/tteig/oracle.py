"""Dense brute-force references for desk-scale validation.

Everything here materializes full matrices or vectors, deliberately through
a different code path than the TT kernels, so the two routes check each
other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import TTMatrix, TTVector
from .errors import InvalidArgument, SizeLimitExceeded

#: Default cap on the size of a densified operator (per axis product).
DENSE_OPERATOR_CAP = 4096


@dataclass(frozen=True)
class DenseSpectrum:
    """Smallest eigenpairs of a dense symmetric matrix, ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def densify_operator(a: TTMatrix, cap: int = DENSE_OPERATOR_CAP) -> np.ndarray:
    """Materialize a TT operator as a dense matrix (big-endian on both sides)."""
    if a.size > cap:
        raise SizeLimitExceeded(f"dense operator size {a.size} exceeds cap {cap}")
    m = a.cores[0][0]  # (n, n, r)
    for core in a.cores[1:]:
        # (I, J, g) x (g, i, j, e) -> (I, i, J, j, e)
        m = np.einsum("IJg,gije->IiJje", m, core)
        ni, nj = m.shape[0] * m.shape[1], m.shape[2] * m.shape[3]
        m = m.reshape(ni, nj, m.shape[4])
    return np.ascontiguousarray(m[:, :, 0])


def dense_eig(mat: np.ndarray, count: int) -> DenseSpectrum:
    """``count`` smallest eigenpairs of a dense symmetric matrix."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidArgument("matrix must be square")
    scale = max(np.abs(mat).max(), 1.0)
    if np.abs(mat - mat.T).max() > 1e-10 * scale:
        raise InvalidArgument("matrix is not symmetric")
    if not 1 <= count <= mat.shape[0]:
        raise InvalidArgument("count out of range")
    vals, vecs = scipy.linalg.eigh(0.5 * (mat + mat.T),
                                   subset_by_index=[0, count - 1])
    return DenseSpectrum(vals, vecs)


@dataclass(frozen=True)
class AngleResult:
    """Largest principal angle between two equally sized subspaces."""

    radians: float
    reorthonormalized: bool

    def __float__(self):
        return self.radians


def _orthonormalize_if_needed(block):
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2:
        raise InvalidArgument("expected a 2-D column block")
    gram = block.T @ block
    if np.abs(gram - np.eye(block.shape[1])).max() <= 1e-10:
        return block, False
    q, _ = np.linalg.qr(block)
    return q, True


def subspace_angle(x, y) -> AngleResult:
    """Angle between the column spans, via the smallest singular value
    of the cross-Gram matrix. The cosine is clamped to [0, 1], so the
    result is never NaN."""
    x, fixed_x = _orthonormalize_if_needed(x)
    y, fixed_y = _orthonormalize_if_needed(y)
    if x.shape[1] != y.shape[1]:
        raise InvalidArgument(
            f"column counts differ: {x.shape[1]} vs {y.shape[1]}")
    if x.shape[0] != y.shape[0]:
        raise InvalidArgument("blocks live in different spaces")
    sigma = np.linalg.svd(x.T @ y, compute_uv=False)
    cos = min(max(float(sigma[-1]), 0.0), 1.0)
    return AngleResult(math.acos(cos), fixed_x or fixed_y)


def group_levels(values, gap_rel: float = 1e-8) -> list[slice]:
    """Split an ascending value list into near-degenerate clusters.

    Consecutive values closer than ``gap_rel`` times the spectral span are
    grouped together.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return []
    span = float(values[-1] - values[0])
    thresh = gap_rel * max(span, abs(float(values[-1])), 1e-300)
    slices = []
    start = 0
    for i in range(1, values.size):
        if values[i] - values[i - 1] > thresh:
            slices.append(slice(start, i))
            start = i
    slices.append(slice(start, values.size))
    return slices


# ---------------------------------------------------------------------------
# interface and frame matrices (desk scale)
# ---------------------------------------------------------------------------

def interface_left(x: TTVector, k: int) -> np.ndarray:
    """Dense matrix of the partial train over sites 0..k-1.

    Shape ``(n_0 * ... * n_{k-1}, r_{k-1})``; the trivial case ``k=0`` is
    the 1x1 identity.
    """
    m = np.ones((1, 1))
    for core in x.cores[:k]:
        rl, n, rr = core.shape
        m = (m @ core.reshape(rl, n * rr)).reshape(-1, rr)
    return m


def interface_right(x: TTVector, k: int) -> np.ndarray:
    """Dense matrix of the partial train over sites k+1..d-1.

    Shape ``(r_k, n_{k+1} * ... * n_{d-1})``.
    """
    m = np.ones((1, 1))
    for core in reversed(x.cores[k + 1:]):
        rl, n, rr = core.shape
        m = (core.reshape(rl * n, rr) @ m).reshape(rl, -1)
    return m


def frame_matrix(x: TTVector, k: int) -> np.ndarray:
    """Dense map from the entries of core k to the represented vector.

    The columns are indexed by ``(r_left, n_k, r_right)`` in C order, so
    ``frame_matrix(x, k) @ x.cores[k].ravel()`` equals the densified vector.
    """
    left = interface_left(x, k)
    right = interface_right(x, k)
    n = x.cores[k].shape[1]
    return np.kron(np.kron(left, np.eye(n)), right.T)
