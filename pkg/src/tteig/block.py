"""Block tensor trains: several vectors sharing one train.

One designated core carries an extra state axis; its position can be moved
along the chain by a local factorization, which is also where rank
adaptation happens. The block core has shape ``(r_left, n, B, r_right)``.
"""

from __future__ import annotations

import math

import numpy as np

from .core import TTVector, _freeze, _rank_from_tail
from .errors import InvalidArgument


class BlockTT:
    """B vectors in one TT network with a state-carrying core."""

    __slots__ = ("cores", "block_position")

    def __init__(self, cores, block_position):
        d = len(cores)
        if not 0 <= block_position < d:
            raise InvalidArgument(
                f"block position {block_position} out of range for d={d}")
        cores = [_freeze(c) for c in cores]
        for k, c in enumerate(cores):
            want = 4 if k == block_position else 3
            if c.ndim != want:
                raise InvalidArgument(
                    f"core {k} must have {want} axes, got {c.ndim}")
        if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
            raise InvalidArgument("boundary ranks must be 1")
        for k in range(d - 1):
            if cores[k].shape[-1] != cores[k + 1].shape[0]:
                raise InvalidArgument(
                    f"rank mismatch between cores {k} and {k + 1}")
        self.cores = cores
        self.block_position = block_position

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def num_states(self) -> int:
        return self.cores[self.block_position].shape[2]

    @property
    def mode_sizes(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.shape[-1] for c in self.cores[:-1])

    def __repr__(self):
        return (f"BlockTT(d={self.ndim}, n={list(self.mode_sizes)}, "
                f"r={list(self.ranks)}, B={self.num_states}, "
                f"p={self.block_position})")


def block_random(mode_sizes, num_states, rank, seed, block_position=0) -> BlockTT:
    """Random block TT with ranks clipped to the block-aware dimension bounds.

    Cores outside the block position are orthogonalized towards it, so the
    frame around the block core is orthogonal from the start.
    """
    mode_sizes = [int(n) for n in mode_sizes]
    if not mode_sizes:
        raise InvalidArgument("mode_sizes must be non-empty")
    if num_states < 1 or rank < 1:
        raise InvalidArgument("num_states and rank must be positive")
    d = len(mode_sizes)
    p = block_position
    if not 0 <= p < d:
        raise InvalidArgument("block position out of range")
    b = int(num_states)
    ranks = [1]
    for k in range(d - 1):
        left = math.prod(mode_sizes[:k + 1]) * (b if p <= k else 1)
        right = math.prod(mode_sizes[k + 1:]) * (b if p > k else 1)
        ranks.append(min(int(rank), left, right))
    ranks.append(1)
    rng = np.random.default_rng(seed)
    cores = []
    for k in range(d):
        shape = (ranks[k], mode_sizes[k], b, ranks[k + 1]) if k == p \
            else (ranks[k], mode_sizes[k], ranks[k + 1])
        cores.append(rng.standard_normal(shape))
    _orthogonalize_around_block(cores, p)
    return BlockTT(cores, p)


def _orthogonalize_around_block(cores, p):
    """In place: left-orthogonalize cores before p, right-orthogonalize after.

    Triangular factors are absorbed towards the block core, so the
    represented vectors are unchanged.
    """
    d = len(cores)
    for k in range(p):
        rl, n, rr = cores[k].shape
        q, r = np.linalg.qr(cores[k].reshape(rl * n, rr))
        cores[k] = q.reshape(rl, n, q.shape[1])
        cores[k + 1] = np.tensordot(r, cores[k + 1], axes=([1], [0]))
    for k in range(d - 1, p, -1):
        rl, n, rr = cores[k].shape
        q, r = np.linalg.qr(cores[k].reshape(rl, n * rr).T)
        cores[k] = q.T.reshape(q.shape[1], n, rr)
        cores[k - 1] = np.tensordot(cores[k - 1], r.T, axes=([cores[k - 1].ndim - 1], [0]))


def block_split(core, direction, eps, rmax=None, num_bonds=1, min_rank=1):
    """Factor a block core, leaving the state axis on one side.

    ``direction='right'`` unfolds the core as ``(r_left * n, B * r_right)``
    and returns ``(left_core, g)`` where ``left_core`` is a left-orthogonal
    order-3 core of shape ``(r_left, n, r_new)`` and ``g`` has shape
    ``(r_new, B, r_right)``. ``direction='left'`` mirrors it: the unfolding
    is ``(r_left * B, n * r_right)`` and the return is ``(g, right_core)``
    with ``g`` of shape ``(r_left, B, r_new)`` and a right-orthogonal core
    ``(r_new, n, r_right)``.

    The absolute truncation budget is ``eps * ||core|| / sqrt(num_bonds)``;
    the kept rank is clamped to ``[min_rank, rmax]``.
    """
    core = np.asarray(core, dtype=np.float64)
    if core.ndim != 4:
        raise InvalidArgument("block core must have 4 axes")
    if eps < 0:
        raise InvalidArgument("eps must be non-negative")
    if rmax is not None and rmax < 1:
        raise InvalidArgument("rmax must be at least 1")
    rl, n, b, rr = core.shape
    delta = eps * np.linalg.norm(core) / math.sqrt(max(num_bonds, 1))
    if direction == "right":
        mat = core.reshape(rl * n, b * rr)
    elif direction == "left":
        mat = np.ascontiguousarray(core.transpose(0, 2, 1, 3)).reshape(rl * b, n * rr)
    else:
        raise InvalidArgument("direction must be 'left' or 'right'")
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    r = _rank_from_tail(s, delta, rmax)
    r = min(max(r, int(min_rank)), len(s))
    if rmax is not None:
        r = min(r, int(rmax))
    if direction == "right":
        left_core = u[:, :r].reshape(rl, n, r)
        g = (s[:r, None] * vt[:r]).reshape(r, b, rr)
        return left_core, g
    g = (u[:, :r] * s[:r]).reshape(rl, b, r)
    right_core = vt[:r].reshape(r, n, rr)
    return g, right_core


def merge_right(g, core):
    """Contract a right-moving state factor into the next ordinary core."""
    # g: (r', B, r), core: (r, n, rr) -> (r', n, B, rr)
    return np.tensordot(g, core, axes=([2], [0])).transpose(0, 2, 1, 3)


def merge_left(core, g):
    """Contract a left-moving state factor into the previous ordinary core."""
    # core: (rl, n, r), g: (r, B, r') -> (rl, n, B, r')
    return np.tensordot(core, g, axes=([2], [0]))


def block_move(x: BlockTT, to: int, eps: float = 0.0, rmax=None,
               num_bonds=1) -> BlockTT:
    """Move the state axis to an adjacent position.

    With ``eps=0`` every represented vector is preserved up to round-off;
    with ``eps>0`` the factorization truncates and the bond rank adapts.
    """
    p = x.block_position
    if to not in (p - 1, p + 1) or not 0 <= to < x.ndim:
        raise InvalidArgument(
            f"target {to} is not adjacent to block position {p}")
    cores = [np.array(c) for c in x.cores]
    if to == p + 1:
        left_core, g = block_split(cores[p], "right", eps, rmax, num_bonds)
        cores[p] = left_core
        cores[p + 1] = merge_right(g, cores[p + 1])
    else:
        g, right_core = block_split(cores[p], "left", eps, rmax, num_bonds)
        cores[p] = right_core
        cores[p - 1] = merge_left(cores[p - 1], g)
    return BlockTT(cores, to)


def extract_state(x: BlockTT, b: int) -> TTVector:
    """Ordinary TT vector for state ``b`` (a slice of the block core)."""
    if not 0 <= b < x.num_states:
        raise InvalidArgument(
            f"state index {b} out of range for B={x.num_states}")
    cores = [c[:, :, b, :] if k == x.block_position else c
             for k, c in enumerate(x.cores)]
    return TTVector(cores)


def slice_gram(x: BlockTT) -> np.ndarray:
    """Gram matrix of the flattened block-core slices.

    Equals the Gram matrix of the represented vectors whenever the frame
    around the block core is orthogonal.
    """
    core = x.cores[x.block_position]
    mat = np.ascontiguousarray(core.transpose(0, 1, 3, 2)).reshape(-1, x.num_states)
    return mat.T @ mat
