"""Pure-numpy implementation of the projected-operator contraction kernel.

Semantics must match ``tteig._kernels._core`` exactly; the test suite checks
both backends against each other and against a dense frame-matrix oracle.
"""

import numpy as np

BACKEND = "numpy"


def local_apply(env_l, a_core, env_r, block):
    """Apply the projected operator to a block of local vectors.

    Parameters
    ----------
    env_l : ndarray, shape (rl_bra, ra_l, rl_ket)
        Left partial contraction of the bra/operator/ket network.
    a_core : ndarray, shape (ra_l, n, n, ra_r)
        Operator core at the open site (row index, column index inner).
    env_r : ndarray, shape (rr_bra, ra_r, rr_ket)
        Right partial contraction.
    block : ndarray, shape (rl_ket * n * rr_ket, k)
        k local vectors, each the C-order vectorization of a
        (rl_ket, n, rr_ket) core.

    Returns
    -------
    ndarray, shape (rl_bra * n * rr_bra, k)
    """
    rl_bra, _, rl_ket = env_l.shape
    n = a_core.shape[1]
    rr_bra, _, rr_ket = env_r.shape
    k = block.shape[1]
    x = block.reshape(rl_ket, n, rr_ket, k)
    # (a,g,c) x (c,j,d,v) -> (a,g,j,d,v)
    t1 = np.tensordot(env_l, x, axes=([2], [0]))
    # (g,i,j,e) x (a,g,j,d,v) -> (i,e,a,d,v)
    t2 = np.tensordot(a_core, t1, axes=([0, 2], [1, 2]))
    # (i,e,a,d,v) x (b,e,d) -> (i,a,v,b)
    y = np.tensordot(t2, env_r, axes=([1, 3], [1, 2]))
    y = y.transpose(1, 0, 3, 2)  # (a,i,b,v)
    return np.ascontiguousarray(y).reshape(rl_bra * n * rr_bra, k)
