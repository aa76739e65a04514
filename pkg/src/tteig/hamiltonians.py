"""TT operators for the three benchmark models and their reference data.

* ``laplace_tt``: negated Kronecker-sum finite-difference Laplacian, with a
  closed-form spectrum (``laplace_spectrum``) for exact verification.
* ``henon_heiles_tt``: coupled anharmonic oscillators on a Hermite
  collocation grid (the potential is diagonal there).
* ``heisenberg_tt``: antiferromagnetic spin-1/2 chain, written with real
  ladder operators so the whole library stays in real arithmetic.

All constructors build the operator cores directly as small transfer
blocks, so the TT ranks are fixed by construction instead of depending on
rounding noise.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import TTMatrix
from .errors import InvalidArgument

HENON_HEILES_COUPLING = 0.111803


# ---------------------------------------------------------------------------
# Laplace (particle in a box)
# ---------------------------------------------------------------------------

def _neg_laplace_1d(n: int) -> np.ndarray:
    """-tridiag(1, -2, 1), the positive-definite 1-D stencil."""
    return (np.diag(2.0 * np.ones(n)) - np.diag(np.ones(n - 1), 1)
            - np.diag(np.ones(n - 1), -1))


def laplace_tt(d: int, n: int) -> TTMatrix:
    """Negated d-dimensional finite-difference Laplacian, TT ranks <= 2."""
    if d < 1 or n < 2:
        raise InvalidArgument("need d >= 1 and n >= 2")
    m = _neg_laplace_1d(n)
    eye = np.eye(n)
    if d == 1:
        return TTMatrix([m.reshape(1, n, n, 1)], symmetric=True)
    first = np.stack([eye, m], axis=2).reshape(1, n, n, 2)
    last = np.stack([m, eye], axis=0).reshape(2, n, n, 1)
    middle = np.zeros((2, n, n, 2))
    middle[0, :, :, 0] = eye
    middle[0, :, :, 1] = m
    middle[1, :, :, 1] = eye
    return TTMatrix([first] + [middle] * (d - 2) + [last], symmetric=True)


def laplace_mode_values(n: int) -> np.ndarray:
    """Eigenvalues of the 1-D stencil: 4 sin^2(pi (b+1) / (2 (n+1)))."""
    b = np.arange(n)
    return 4.0 * np.sin(np.pi * (b + 1) / (2.0 * (n + 1))) ** 2


def laplace_eigenbasis(n: int) -> np.ndarray:
    """Orthonormal eigenvectors of the 1-D stencil, column b is mode b."""
    j = np.arange(n)
    b = np.arange(n)
    u = np.sin(np.pi * np.outer(j + 1, b + 1) / (n + 1))
    return u * math.sqrt(2.0 / (n + 1))


def laplace_spectrum(d: int, n: int, count=None) -> list[tuple[float, tuple[int, ...]]]:
    """The ``count`` smallest closed-form eigenvalues with their mode indices.

    Values are sums of 1-D mode values; exact ties are ordered by the
    lexicographically smallest multi-index. Sums are evaluated with
    ``math.fsum`` so permuted multi-indices of the same modes tie exactly.
    """
    if d < 1 or n < 2:
        raise InvalidArgument("need d >= 1 and n >= 2")
    total = n ** d
    count = total if count is None else int(count)
    if not 1 <= count <= total:
        raise InvalidArgument(f"count must be in 1..{total}")
    mu = laplace_mode_values(n)

    def value(idx):
        return math.fsum(mu[i] for i in idx)

    start = (0,) * d
    heap = [(value(start), start)]
    seen = {start}
    out = []
    while heap and len(out) < count:
        val, idx = heapq.heappop(heap)
        out.append((val, idx))
        for k in range(d):
            if idx[k] + 1 < n:
                nxt = idx[:k] + (idx[k] + 1,) + idx[k + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (value(nxt), nxt))
    return out


# ---------------------------------------------------------------------------
# Henon-Heiles on a Hermite collocation grid
# ---------------------------------------------------------------------------

def hermite_mesh(n: int) -> np.ndarray:
    """Roots of the n-th physicists' Hermite polynomial, ascending.

    Computed as eigenvalues of the symmetric Jacobi matrix with
    off-diagonal sqrt(k/2), then symmetrized about zero exactly.
    """
    if n < 1:
        raise InvalidArgument("n must be positive")
    if n == 1:
        return np.zeros(1)
    off = np.sqrt(np.arange(1, n) / 2.0)
    t = scipy.linalg.eigh_tridiagonal(np.zeros(n), off, eigvals_only=True)
    t = np.sort(t)
    return (t - t[::-1]) / 2.0


def hermite_dvr_laplace(n: int) -> np.ndarray:
    """Second-derivative (times -1) collocation matrix on the Hermite mesh."""
    t = hermite_mesh(n)
    idx = np.arange(n)
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (-1.0) ** (idx[:, None] - idx[None, :]) * (2.0 / diff ** 2 - 0.5)
    d[idx, idx] = (4.0 * n - 1.0 - 2.0 * t ** 2) / 6.0
    return d


def henon_heiles_tt(d: int, n: int, lam: float = HENON_HEILES_COUPLING) -> TTMatrix:
    """Coupled anharmonic oscillator chain, TT ranks <= 7 (3 by construction).

    Per site: kinetic term plus harmonic well, a cubic tilt on every site
    but the first, and a quadratic-linear coupling to the right neighbour.
    The potential is diagonal on the collocation grid.
    """
    if d < 2:
        raise InvalidArgument("need d >= 2 (the coupling needs a neighbour)")
    if n < 2:
        raise InvalidArgument("need n >= 2")
    t = hermite_mesh(n)
    eye = np.eye(n)
    q = np.diag(t)
    q2 = np.diag(t ** 2)
    q3 = np.diag(t ** 3)
    kin = 0.5 * hermite_dvr_laplace(n)
    s_first = kin + 0.5 * q2
    s_rest = s_first - (lam / 3.0) * q3

    first = np.zeros((1, n, n, 3))
    first[0, :, :, 0] = s_first
    first[0, :, :, 1] = lam * q2
    first[0, :, :, 2] = eye
    middle = np.zeros((3, n, n, 3))
    middle[0, :, :, 0] = eye
    middle[1, :, :, 0] = q
    middle[2, :, :, 0] = s_rest
    middle[2, :, :, 1] = lam * q2
    middle[2, :, :, 2] = eye
    last = np.zeros((3, n, n, 1))
    last[0, :, :, 0] = eye
    last[1, :, :, 0] = q
    last[2, :, :, 0] = s_rest

    mat = TTMatrix([first] + [middle] * (d - 2) + [last], symmetric=True)
    assert max(mat.ranks) <= 7
    return mat


# ---------------------------------------------------------------------------
# Heisenberg spin chain
# ---------------------------------------------------------------------------

def heisenberg_tt(d: int) -> TTMatrix:
    """Nearest-neighbour spin-1/2 chain, sum of S_i . S_{i+1}, TT ranks <= 5.

    Uses the real form with ladder operators,
    ``(S+ S- + S- S+) / 2 + Sz Sz``, which densifies to the same matrix as
    the x/y/z form (that one is real despite the complex y component).
    """
    if d < 2:
        raise InvalidArgument("need d >= 2")
    eye = np.eye(2)
    sp = np.array([[0.0, 1.0], [0.0, 0.0]])
    sm = sp.T.copy()
    sz = 0.5 * np.array([[1.0, 0.0], [0.0, -1.0]])

    middle = np.zeros((5, 2, 2, 5))
    middle[0, :, :, 0] = eye
    middle[1, :, :, 0] = sm
    middle[2, :, :, 0] = sp
    middle[3, :, :, 0] = sz
    middle[4, :, :, 1] = 0.5 * sp
    middle[4, :, :, 2] = 0.5 * sm
    middle[4, :, :, 3] = sz
    middle[4, :, :, 4] = eye
    first = middle[4:5, :, :, :].copy()
    last = middle[:, :, :, 0:1].copy()
    mat = TTMatrix([first] + [middle] * (d - 2) + [last], symmetric=True)
    assert max(mat.ranks) <= 5
    return mat


# ---------------------------------------------------------------------------
# model dispatch
# ---------------------------------------------------------------------------

MODELS = ("laplace", "henon-heiles", "heisenberg")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Which benchmark operator to build, and at what size."""

    model: str
    d: int
    n: int = 2
    lam: float = HENON_HEILES_COUPLING

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidArgument(f"unknown model {self.model!r}; pick from {MODELS}")
        if self.d < 1:
            raise InvalidArgument("d must be positive")
        if self.model == "heisenberg" and self.n != 2:
            raise InvalidArgument("heisenberg sites have mode size 2")
        if self.n < 2:
            raise InvalidArgument("n must be at least 2")

    def build(self) -> TTMatrix:
        if self.model == "laplace":
            return laplace_tt(self.d, self.n)
        if self.model == "henon-heiles":
            return henon_heiles_tt(self.d, self.n, self.lam)
        return heisenberg_tt(self.d)
