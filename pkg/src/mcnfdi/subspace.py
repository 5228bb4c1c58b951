"""Numerical subspace algebra and the geometric fault-isolation tests.

Subspaces carry an orthonormal basis; every rank decision goes through an SVD
with a relative cutoff ``rank_tol * max(1, sigma_max)``. Equality is decided by
dimension plus the largest principal angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ModelError, NumericalError


@dataclass(frozen=True)
class ToleranceConfig:
    rank_tol: float = 1e-10
    eq_tol: float = 1e-8

    def __post_init__(self):
        if not (self.rank_tol > 0 and self.eq_tol > 0):
            raise ModelError("tolerances must be positive")


DEFAULT_TOL = ToleranceConfig()


class Subspace:
    """Subspace of R^n stored as an ``n x r`` orthonormal basis."""

    __slots__ = ("ambient", "basis")

    def __init__(self, ambient: int, basis: np.ndarray | None = None):
        self.ambient = int(ambient)
        if basis is None:
            basis = np.zeros((self.ambient, 0))
        basis = np.asarray(basis, dtype=float).reshape(self.ambient, -1)
        basis.setflags(write=False)
        self.basis = basis

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def is_zero(self) -> bool:
        return self.dim == 0

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def residual(self, M: np.ndarray) -> np.ndarray:
        """Component of the columns of ``M`` orthogonal to this subspace."""
        return M - self.basis @ (self.basis.T @ M)

    def contains(self, other: "Subspace", tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        _same_ambient(self, other)
        if other.dim == 0:
            return True
        return angle_bound(self, other) <= tol.eq_tol

    def equals(self, other: "Subspace", tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return (self.ambient == other.ambient and self.dim == other.dim
                and self.contains(other, tol))

    def __repr__(self) -> str:
        return f"Subspace(ambient={self.ambient}, dim={self.dim})"


def angle_bound(U: Subspace, V: Subspace) -> float:
    """Largest principal angle between V and its projection onto U (radians)."""
    if V.dim == 0:
        return 0.0
    s = np.linalg.norm(U.residual(V.basis), 2)
    return float(np.arcsin(min(1.0, s)))


def _same_ambient(*subs: Subspace) -> int:
    n = subs[0].ambient
    for s in subs[1:]:
        if s.ambient != n:
            raise ModelError(f"ambient mismatch: {n} vs {s.ambient}")
    return n


def span(M, tol: ToleranceConfig = DEFAULT_TOL, ambient: int | None = None) -> Subspace:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    n = M.shape[0] if ambient is None else ambient
    if M.size == 0:
        return Subspace(n)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > tol.rank_tol * max(1.0, s[0])))
    return Subspace(n, U[:, :r])


def full(n: int) -> Subspace:
    return Subspace(n, np.eye(n))


def zero(n: int) -> Subspace:
    return Subspace(n)


def coordinate(n: int, indices: Sequence[int]) -> Subspace:
    """Span of the standard basis vectors with the given 0-based indices."""
    return Subspace(n, np.eye(n)[:, list(indices)])


def sum_(*subs: Subspace, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    n = _same_ambient(*subs)
    return span(np.hstack([s.basis for s in subs]), tol, ambient=n)


def orth_complement(U: Subspace, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    n = U.ambient
    if U.dim == 0:
        return full(n)
    return kernel(U.basis.T, tol)


def kernel(C, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    """Null space ``{x : C x = 0}``."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = C.shape[1]
    if C.shape[0] == 0:
        return full(n)
    _, s, Vt = np.linalg.svd(C, full_matrices=True)
    cutoff = tol.rank_tol * max(1.0, s[0]) if s.size else 0.0
    r = int(np.sum(s > cutoff))
    return Subspace(n, Vt[r:].T)


def intersect(U: Subspace, V: Subspace, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    _same_ambient(U, V)
    if U.dim == 0 or V.dim == 0:
        return zero(U.ambient)
    return orth_complement(sum_(orth_complement(U, tol), orth_complement(V, tol), tol=tol), tol)


def image(A, S: Subspace, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    A = np.asarray(A, dtype=float)
    if A.shape[1] != S.ambient:
        raise ModelError(f"map with {A.shape[1]} columns applied to R^{S.ambient}")
    return span(A @ S.basis, tol, ambient=A.shape[0])


def preimage(A, S: Subspace, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    """``{x : A x in S}``, the kernel of ``(I - P_S) A``."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] != S.ambient:
        raise ModelError(f"map into R^{A.shape[0]} against subspace of R^{S.ambient}")
    return kernel(S.residual(A), tol)


def _check_square(A, C) -> tuple[np.ndarray, np.ndarray]:
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or C.shape[1] != n:
        raise ModelError(f"need A n x n and C p x n, got {A.shape}, {C.shape}")
    return A, C


def caisa_step(A, NC: Subspace, L: Subspace, W: Subspace, tol) -> Subspace:
    return sum_(L, image(A, intersect(W, NC, tol), tol), tol=tol)


def uosa_step(A, NC: Subspace, Wstar: Subspace, S: Subspace, tol) -> Subspace:
    return sum_(Wstar, intersect(preimage(A, S, tol), NC, tol), tol=tol)


def caisa(A, C, L: Subspace, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    """Smallest (C, A)-invariant subspace containing ``L``.

    Iterates ``W <- L + A (W ∩ ker C)`` from ``W = 0`` and certifies the fixed
    point before returning.
    """
    A, C = _check_square(A, C)
    n = A.shape[0]
    _same_ambient(L, zero(n))
    NC = kernel(C, tol)
    W = zero(n)
    for _ in range(n + 2):
        W_next = caisa_step(A, NC, L, W, tol)
        if W_next.dim < W.dim:
            raise NumericalError("CAISA iterate lost dimension")
        if W_next.dim == W.dim and W_next.equals(W, tol):
            break
        W = W_next
    else:
        raise NumericalError("CAISA did not converge within n steps")
    if not caisa_step(A, NC, L, W_next, tol).equals(W_next, tol):
        raise NumericalError("CAISA fixed-point certificate failed")
    return W_next


def uosa(A, C, L: Subspace, tol: ToleranceConfig = DEFAULT_TOL,
         Wstar: Subspace | None = None) -> Subspace:
    """Smallest unobservability subspace containing ``L``.

    Iterates ``S <- W*(L) + (A^{-1} S ∩ ker C)`` from ``S = R^n``.
    """
    A, C = _check_square(A, C)
    n = A.shape[0]
    NC = kernel(C, tol)
    if Wstar is None:
        Wstar = caisa(A, C, L, tol)
    S = full(n)
    for _ in range(n + 2):
        S_next = uosa_step(A, NC, Wstar, S, tol)
        if S_next.dim > S.dim:
            raise NumericalError("UOSA iterate gained dimension")
        if S_next.dim == S.dim and S_next.equals(S, tol):
            break
        S = S_next
    else:
        raise NumericalError("UOSA did not converge within n steps")
    if not uosa_step(A, NC, Wstar, S_next, tol).equals(S_next, tol):
        raise NumericalError("UOSA fixed-point certificate failed")
    if not S_next.contains(L, tol):
        raise NumericalError("UOSA result does not contain L")
    return S_next


def unobservable_subspace(A, C, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    """Largest A-invariant subspace inside ker C."""
    A, C = _check_square(A, C)
    return uosa(A, C, zero(A.shape[0]), tol)


def efprg_check(A, C, signatures: Sequence[Subspace],
                tol: ToleranceConfig = DEFAULT_TOL) -> list[bool]:
    """Residual-generator existence per signature.

    Signature ``i`` is isolable from the others iff the smallest
    unobservability subspace containing the sum of all other signatures meets
    signature ``i`` only in the origin.
    """
    A, C = _check_square(A, C)
    n = A.shape[0]
    if signatures:
        _same_ambient(zero(n), *signatures)
    verdicts = []
    for i, L in enumerate(signatures):
        others = [s for j, s in enumerate(signatures) if j != i]
        Lbar = sum_(*others, tol=tol) if others else zero(n)
        S = uosa(A, C, Lbar, tol)
        verdicts.append(intersect(S, L, tol).is_zero())
    return verdicts
