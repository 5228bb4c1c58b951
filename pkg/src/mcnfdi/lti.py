"""Plant representations, zero-order-hold discretization and the state-space
realizations of the relay networks.

State ordering of the interconnected system is ``(x_O, x_P, x_R)``:
observability-network states first, then plant, then controllability network.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .errors import ModelError

DEFAULT_MINIMALITY_TOL = 1e-9


def _as_matrix(M, name: str) -> np.ndarray:
    arr = np.array(M, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if name.startswith("C") else arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ModelError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{name} has non-finite entries")
    return arr


def _numerical_rank(M: np.ndarray, tol: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def observability_matrix(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    return controllability_matrix(A.T, C.T).T


@dataclass(frozen=True, eq=False)
class ContinuousLTI:
    """Continuous-time SISO plant ``dx/dt = A_c x + B_c u, y = C_c x``.

    Construction rejects non-minimal realizations.
    """

    A_c: np.ndarray
    B_c: np.ndarray
    C_c: np.ndarray
    minimality_tol: float = DEFAULT_MINIMALITY_TOL

    def __post_init__(self):
        A = _as_matrix(self.A_c, "A_c")
        B = _as_matrix(self.B_c, "B_c")
        C = _as_matrix(self.C_c, "C_c")
        n = A.shape[0]
        if A.shape != (n, n) or n == 0:
            raise ModelError(f"A_c must be square and non-empty, got {A.shape}")
        if B.shape != (n, 1):
            raise ModelError(f"B_c must be {n}x1 (SISO), got {B.shape}")
        if C.shape != (1, n):
            raise ModelError(f"C_c must be 1x{n} (SISO), got {C.shape}")
        if _numerical_rank(controllability_matrix(A, B), self.minimality_tol) < n:
            raise ModelError("plant (A_c, B_c) is not controllable")
        if _numerical_rank(observability_matrix(A, C), self.minimality_tol) < n:
            raise ModelError("plant (C_c, A_c) is not observable")
        for name, val in (("A_c", A), ("B_c", B), ("C_c", C)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A_c.shape[0]


@dataclass(frozen=True, eq=False)
class DiscreteLTI:
    """Discrete-time system ``x(k+1) = A x + B u, y = C x`` with period ``T``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    T: float

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        C = _as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ModelError(f"A must be square, got {A.shape}")
        if B.shape[0] != n or C.shape[1] != n:
            raise ModelError(
                f"non-conformable dimensions A{A.shape} B{B.shape} C{C.shape}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ModelError(f"sampling period must be positive, got {self.T}")
        for name, val in (("A", A), ("B", B), ("C", C)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def simulate(self, u, x0=None) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(x, y)`` with ``x[k]`` the state at frame k (``x[0] = x0``).

        ``u`` has one row per frame; a 1-D array is taken as a single input.
        """
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        K = u.shape[0]
        x = np.zeros((K + 1, self.n))
        if x0 is not None:
            x[0] = x0
        for k in range(K):
            x[k + 1] = self.A @ x[k] + self.B @ u[k]
        y = x[:K] @ self.C.T
        return x, y


@dataclass(frozen=True)
class FIRTransfer:
    """Frame-delay transfer ``sum_d gamma(d) z^-d`` for d = 1..D."""

    gamma: tuple[float, ...]

    def __post_init__(self):
        g = tuple(self.gamma)
        if len(g) == 0:
            raise ModelError("FIR transfer needs at least one coefficient")
        if any(not np.isfinite(float(v)) or v < 0 for v in g):
            raise ModelError(f"gamma coefficients must be finite and >= 0: {g}")
        if g[-1] == 0:
            raise ModelError("leading coefficient gamma(D) must be nonzero")
        object.__setattr__(self, "gamma", g)

    @property
    def D(self) -> int:
        return len(self.gamma)

    def padded(self, D: int) -> np.ndarray:
        if D < self.D:
            raise ModelError(f"cannot pad FIR of length {self.D} to {D}")
        out = np.zeros(D)
        out[: self.D] = np.asarray(self.gamma, dtype=float)
        return out


GammaLike = Union[FIRTransfer, Sequence[float], np.ndarray]


def _gamma_array(g: GammaLike, D: int | None) -> np.ndarray:
    arr = g.padded(D or g.D) if isinstance(g, FIRTransfer) else np.asarray(g, float)
    if arr.ndim != 1 or arr.size == 0:
        raise ModelError("empty gamma")
    if D is not None and arr.size != D:
        if arr.size > D:
            raise ModelError(f"gamma of length {arr.size} exceeds order {D}")
        arr = np.concatenate([arr, np.zeros(D - arr.size)])
    return arr


def expm(M, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``e^{M t}`` (scaling and squaring, Pade approximant)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ModelError(f"expm needs a square matrix, got shape {M.shape}")
    if not (np.all(np.isfinite(M)) and np.isfinite(t)):
        raise ModelError("expm input has non-finite entries")
    return scipy.linalg.expm(M * t)


def discretize_plant(p: ContinuousLTI, T: float) -> DiscreteLTI:
    """Zero-order-hold discretization with period ``T``.

    ``B = (integral_0^T e^{A_c s} ds) B_c`` is read off the exponential of the
    augmented matrix ``[[A_c, B_c], [0, 0]]``.
    """
    if not (np.isfinite(T) and T > 0):
        raise ModelError(f"sampling period must be positive, got {T}")
    n = p.n
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = p.A_c
    aug[:n, n:] = p.B_c
    E = expm(aug, T)
    return DiscreteLTI(E[:n, :n], E[:n, n:], p.C_c.copy(), T)


def realize_observability(leaf_gammas: Sequence[GammaLike], D_O: int, n_S: int):
    """Multi-output realization of ``n_S`` FIR channels sharing depth ``D_O``.

    The first ``n_S`` states are the channel outputs (sinks: their columns of
    ``A_O`` are zero); the remaining ``D_O - 1`` states form a shift register of
    past inputs, oldest first. Returns ``(A_O, B_O, C_O)``.
    """
    if n_S < 1:
        raise ModelError("need at least one terminating node")
    if len(leaf_gammas) != n_S:
        raise ModelError(f"got {len(leaf_gammas)} leaf transfers for n_S={n_S}")
    if D_O < 1:
        raise ModelError("maximum delay must be >= 1")
    G = np.vstack([_gamma_array(g, D_O) for g in leaf_gammas])
    n_O = D_O + n_S - 1
    A = np.zeros((n_O, n_O))
    B = np.zeros((n_O, 1))
    for d in range(2, D_O + 1):
        A[:n_S, n_S + D_O - d] = G[:, d - 1]
    for j in range(D_O - 2):
        A[n_S + j, n_S + j + 1] = 1.0
    B[:n_S, 0] = G[:, 0]
    if D_O >= 2:
        B[-1, 0] = 1.0
    C = np.zeros((n_S, n_O))
    C[:, :n_S] = np.eye(n_S)
    return A, B, C


def realize_controllability(f: GammaLike, D: int | None = None):
    """Realization ``(A_R, B_R, C_R)`` of one FIR channel, ``n_R = D``.

    ``D`` defaults to the transfer's own length; a larger value pads with
    trailing zeros (used for faulty networks that keep the nominal order).
    """
    g = _gamma_array(f, D)
    return realize_observability([g], g.size, 1)


def assemble_mcn(obs, plant: DiscreteLTI, ctrl) -> DiscreteLTI:
    """Series interconnection network->plant->network as one state space."""
    A_O, B_O, C_O = (np.asarray(m, float) for m in obs)
    A_R, B_R, C_R = (np.asarray(m, float) for m in ctrl)
    A_P, B_P, C_P = plant.A, plant.B, plant.C
    n_O, n_P, n_R = A_O.shape[0], A_P.shape[0], A_R.shape[0]
    if B_O.shape != (n_O, 1) or C_O.shape[1] != n_O:
        raise ModelError("observability realization is not conformable")
    if B_R.shape != (n_R, 1) or C_R.shape != (1, n_R):
        raise ModelError("controllability realization is not conformable")
    if B_P.shape != (n_P, 1) or C_P.shape != (1, n_P):
        raise ModelError("plant is not SISO-conformable")
    n = n_O + n_P + n_R
    A = np.zeros((n, n))
    A[:n_O, :n_O] = A_O
    A[:n_O, n_O:n_O + n_P] = B_O @ C_P
    A[n_O:n_O + n_P, n_O:n_O + n_P] = A_P
    A[n_O:n_O + n_P, n_O + n_P:] = B_P @ C_R
    A[n_O + n_P:, n_O + n_P:] = A_R
    B = np.zeros((n, 1))
    B[n_O + n_P:] = B_R
    C = np.zeros((C_O.shape[0], n))
    C[:, :n_O] = C_O
    return DiscreteLTI(A, B, C, plant.T)
