"""Exact rational reimplementation of the subspace recursions (test oracle).

Subspaces are sympy matrices whose columns span them; everything is computed
over the rationals, so rank decisions are exact.
"""

import numpy as np
import sympy as sp


def Q(M):
    return sp.Matrix([[sp.Rational(int(v)) if float(v).is_integer() else sp.nsimplify(v)
                       for v in row] for row in np.atleast_2d(np.asarray(M))])


def basis(M, n):
    if M.cols == 0:
        return sp.zeros(n, 0)
    cols = M.columnspace()
    return sp.Matrix.hstack(*cols) if cols else sp.zeros(n, 0)


def ssum(U, V):
    return basis(sp.Matrix.hstack(U, V), U.rows)


def kernel(C):
    n = C.cols
    ns = C.nullspace()
    return sp.Matrix.hstack(*ns) if ns else sp.zeros(n, 0)


def intersect(U, V):
    n = U.rows
    if U.cols == 0 or V.cols == 0:
        return sp.zeros(n, 0)
    ns = sp.Matrix.hstack(U, -V).nullspace()
    if not ns:
        return sp.zeros(n, 0)
    return basis(sp.Matrix.hstack(*[U * v[:U.cols, :] for v in ns]), n)


def image(A, S):
    return basis(A * S, A.rows) if S.cols else sp.zeros(A.rows, 0)


def preimage(A, S):
    n = A.cols
    if S.cols == 0:
        return kernel(A)
    perp = kernel(S.T)  # rows of perp^T annihilate S
    if perp.cols == 0:
        return sp.eye(n)
    return kernel(perp.T * A)


def caisa(A, C, L):
    n = A.rows
    NC = kernel(C)
    W = sp.zeros(n, 0)
    while True:
        Wn = ssum(L, image(A, intersect(W, NC)))
        if Wn.rank() == W.rank():
            return Wn
        W = Wn


def uosa(A, C, L):
    n = A.rows
    NC = kernel(C)
    Ws = caisa(A, C, L)
    S = sp.eye(n)
    while True:
        Sn = ssum(Ws, intersect(preimage(A, S), NC))
        if Sn.rank() == S.rank():
            return Sn
        S = Sn


def same_space(exact, numeric_basis, tol=1e-8):
    """Equal dimensions and every exact basis vector lies in the float span."""
    E = np.array(exact.evalf(), dtype=float).reshape(exact.rows, exact.cols)
    if E.shape[1] != numeric_basis.shape[1]:
        return False
    if E.shape[1] == 0:
        return True
    R = E - numeric_basis @ (numeric_basis.T @ E)
    return np.linalg.norm(R) <= tol * max(1.0, np.linalg.norm(E))
