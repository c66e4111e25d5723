"""Dense reference implementations, independent of the package's numerics.

Matrix functions are evaluated through scipy's expm / explicit inverses /
matrix arithmetic (never through the eigendecomposition route the package
itself uses), so these can serve as oracles for it.
"""

import numpy as np
import scipy.linalg

from fconn.matfun import Cosh, Exp, Polynomial, Resolvent, Sinh


def matrix_function(f, M):
    """f(M) for a (possibly nonsymmetric) dense matrix M."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if isinstance(f, Exp):
        return scipy.linalg.expm(M)
    if isinstance(f, Sinh):
        return 0.5 * (scipy.linalg.expm(M) - scipy.linalg.expm(-M))
    if isinstance(f, Cosh):
        return 0.5 * (scipy.linalg.expm(M) + scipy.linalg.expm(-M))
    if isinstance(f, Resolvent):
        base = np.linalg.inv(np.eye(n) - f.alpha * M)
        return f.scale * np.linalg.matrix_power(base, f.power)
    if isinstance(f, Polynomial):
        out = np.zeros_like(M)
        for c in f.coeffs[::-1]:
            out = out @ M + c * np.eye(n)
        return out
    raise TypeError(f"no dense oracle for {f!r}")


def trace_function(f, M):
    return float(np.trace(matrix_function(f, M)))


def frechet_block(f, M, E):
    """Derivative of f at M along E via f of the 2n x 2n augmented matrix."""
    M = np.asarray(M, dtype=float)
    E = np.asarray(E, dtype=float)
    n = M.shape[0]
    aug = np.block([[M, E], [np.zeros((n, n)), M]])
    return matrix_function(f, aug)[:n, n:]


def dense_adjacency(g):
    return g.adjacency.toarray()


def trace_delta(f, A, X):
    """Tr f(A + X) - Tr f(A) densely."""
    return trace_function(f, A + X) - trace_function(f, A)


def symmetric_edge_matrix(n, i, j, delta=1.0):
    X = np.zeros((n, n))
    X[i, j] += delta
    X[j, i] += delta
    return X


def assemble_update(n, F, x):
    X = np.zeros((n, n))
    for h, (i, j) in enumerate(F):
        X[i, j] += x[h]
        X[j, i] += x[h]
    return X
