"""Hankel stacks and the trace-ratio focusing objective.

Each measurement row of odd length 2m-1 generates a square Hankel matrix
H[i, j] = row[i + j]. Focusing searches for real coefficients q so that the
combination G = sum_t q_t H_t is nearly rank one; the objective

    f(q) = Tr(N)^2 / Tr(N* N),   N = G* G,

equals (sum s_i^2)^2 / (sum s_i^4) in terms of singular values, hence f >= 1
with equality exactly on rank-one matrices. Both f and its gradient are
computed from Frobenius-norm identities; no singular value decomposition is
performed anywhere on the optimization path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import hankel as _scipy_hankel

from .errors import DegenerateCombinationError
from .validation import check_odd_row

# below this Frobenius norm a combination is considered numerically zero;
# f is scale-free so any honest nonzero combination can be rescaled away
# from the guard
ZERO_GUARD = 1e-300


def build_hankel(row) -> np.ndarray:
    """Square Hankel matrix H[i, j] = row[i + j] from an odd-length row."""
    row = check_odd_row(row, "row")
    m = (row.size + 1) // 2
    return _scipy_hankel(row[:m], row[m - 1:])


@dataclass(frozen=True)
class HankelStack:
    """T Hankel matrices of identical size plus their grid spacing.

    ``spacing`` is the frequency step between consecutive samples of the
    generating rows (stride * omega / k_half after subsampling); MUSIC needs
    it to map phase to position.
    """

    data: np.ndarray  # (T, m, m) complex
    spacing: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 3 or data.shape[1] != data.shape[2]:
            raise ValueError(f"stack must be (T, m, m), got {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 2:
            raise ValueError("stack needs T >= 1 matrices of size >= 2")
        if self.spacing <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "data", data)

    @property
    def t_count(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]


def build_stack(rows, spacing: float) -> HankelStack:
    """Stack one Hankel matrix per measurement row (rows share a length)."""
    rows = np.asarray(rows, dtype=np.complex128)
    if rows.ndim != 2:
        raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
    data = np.stack([build_hankel(r) for r in rows])
    return HankelStack(data, spacing)


def combine(stack: HankelStack, q) -> np.ndarray:
    """Linear combination sum_t q_t H_t."""
    q = np.asarray(q, dtype=float)
    if q.shape != (stack.t_count,):
        raise ValueError(
            f"q must have length {stack.t_count}, got shape {q.shape}"
        )
    return np.tensordot(q, stack.data, axes=(0, 0))


def focus_objective(h: np.ndarray) -> float:
    """Trace ratio ||H||_F^4 / ||H* H||_F^2, >= 1, == 1 iff rank one."""
    h = np.asarray(h, dtype=np.complex128)
    a = np.linalg.norm(h) ** 2
    if not a > ZERO_GUARD:
        raise DegenerateCombinationError(
            "focusing objective undefined on a numerically zero matrix"
        )
    b = np.linalg.norm(h.conj().T @ h) ** 2
    return float(a * a / b)


def focus_value_and_gradient(stack: HankelStack, q):
    """Objective and its gradient in q at the combination G = sum q_t H_t.

    With a = ||G||_F^2 and b = ||G* G||_F^2,

        f = a^2 / b,
        df/dq_t = (4 a b Re Tr(H_t* G) - 4 a^2 Re Tr(H_t* G G* G)) / b^2,

    using d(a)/dq_t = 2 Re Tr(H_t* G) and d(b)/dq_t = 4 Re Tr(H_t* G G* G)
    for real q. Shares all intermediates between value and gradient.
    """
    g = combine(stack, q)
    a = float(np.linalg.norm(g) ** 2)
    if not a > ZERO_GUARD:
        raise DegenerateCombinationError(
            "focusing objective undefined on a numerically zero combination"
        )
    n = g.conj().T @ g
    b = float(np.linalg.norm(n) ** 2)
    f = a * a / b
    conj_stack = stack.data.conj()
    t1 = np.einsum("tij,ij->t", conj_stack, g).real          # Re Tr(H_t* G)
    t2 = np.einsum("tij,ij->t", conj_stack, g @ n).real      # Re Tr(H_t* G G* G)
    grad = (4.0 * a * b * t1 - 4.0 * a * a * t2) / (b * b)
    return f, grad


def focus_gradient(stack: HankelStack, q) -> np.ndarray:
    """Analytic gradient of the focusing objective with respect to q."""
    return focus_value_and_gradient(stack, q)[1]
