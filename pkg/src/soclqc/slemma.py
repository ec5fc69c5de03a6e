"""Simultaneous diagonalization and S-lemma constraint generation.

The robust quadratic constraint

    z^T D z + 2 e^T z + f >= 0   for all z with  z^T A z + 2 b^T z + c >= 0

admits, under a strict feasibility (Slater) point of the inner set, the
classical certificate: some multiplier lam >= 0 makes the bordered matrix

    [[D - lam*A, e - lam*b], [(e - lam*b)^T, f - lam*c]]

positive semidefinite.  When A and D are simultaneously diagonalizable by a
congruence S, that matrix inequality collapses to one linear constraint plus
per-coordinate hyperbolic constraints, which is what
:func:`emit_simplified_slemma` appends to a conic program.  The bordered
matrix itself is kept purely as a numerical verification oracle
(:func:`assemble_classical_lmi` + :func:`check_psd`); it is never solved as a
semidefinite program.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ConicProgramBuilder,
    DimensionMismatch,
    LinExpr,
    NotPositiveDefinite,
    as_expr,
    hyperbolic_to_soc,
)


class DegenerateInput(ValueError):
    """Empty or structurally unusable input."""


def symmetrize(M: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    scale = max(1.0, np.linalg.norm(M))
    if np.linalg.norm(M - M.T) > rel_tol * scale * M.shape[0] * 100:
        raise ValueError("matrix is not symmetric within tolerance")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class QuadForm:
    """Quadratic function z -> z^T A z + 2 b^T z + c."""

    A: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        object.__setattr__(self, "A", symmetrize(self.A))
        object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, dtype=float)))
        object.__setattr__(self, "c", float(self.c))
        if self.A.shape[0] != self.b.shape[0]:
            raise DimensionMismatch("QuadForm: A and b dimensions differ")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def __call__(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return float(z @ self.A @ z + 2.0 * self.b @ z + self.c)

    @staticmethod
    def ball(radius: float, dim: int) -> "QuadForm":
        """The set ||z|| <= radius written as radius^2 - z^T z >= 0."""
        return QuadForm(-np.eye(dim), np.zeros(dim), radius**2)


@dataclass(frozen=True)
class SimulDiag:
    """Congruence S with S^T A S = diag(alpha) and S^T D S = diag(delta)."""

    S: np.ndarray
    alpha: np.ndarray
    delta: np.ndarray

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def residuals(self, A: np.ndarray, D: np.ndarray) -> tuple[float, float]:
        ra = np.linalg.norm(self.S.T @ A @ self.S - np.diag(self.alpha))
        rd = np.linalg.norm(self.S.T @ D @ self.S - np.diag(self.delta))
        return ra, rd


MAX_CONDITION = 1e12


def simultaneous_diagonalize(A: np.ndarray, D: np.ndarray) -> SimulDiag:
    """Diagonalize the pair (A, D) by a single congruence, A positive definite.

    With A = L L^T and L^{-1} D L^{-T} = Q diag(delta) Q^T, the congruence
    S = L^{-T} Q gives S^T A S = I and S^T D S = diag(delta).  Columns are
    ordered by ascending delta for determinism.
    """
    A = symmetrize(A)
    D = symmetrize(D)
    n = A.shape[0]
    if n == 0:
        raise DegenerateInput("empty matrix pair")
    if D.shape[0] != n:
        raise DimensionMismatch("A and D sizes differ")
    evals_a = np.linalg.eigvalsh(A)
    if evals_a[0] <= 1e-10 * max(1.0, np.linalg.norm(A)):
        raise NotPositiveDefinite("first matrix of the pair must be positive definite")
    L = np.linalg.cholesky(A)
    mid = np.linalg.solve(L, np.linalg.solve(L, D).T).T  # L^{-1} D L^{-T}
    delta, Q = np.linalg.eigh(0.5 * (mid + mid.T))
    order = np.argsort(delta)
    delta = delta[order]
    Q = Q[:, order]
    S = np.linalg.solve(L.T, Q)
    if np.linalg.cond(S) > MAX_CONDITION:
        raise NotPositiveDefinite("congruence transform is numerically singular")
    return SimulDiag(S, np.ones(n), delta)


@dataclass(frozen=True)
class SLemmaBlock:
    """Record of the variables and blocks appended by the emitter."""

    lambda_index: int
    t_indices: np.ndarray
    linear_block: int
    cone_blocks: tuple[int, ...]


def emit_simplified_slemma(
    inner: QuadForm,
    D: np.ndarray,
    e_map,
    f_map,
    sd: SimulDiag,
    builder: ConicProgramBuilder,
    tag: str = "slemma",
) -> SLemmaBlock:
    """Append the certificate for the robust constraint

        z^T D z + 2 e(x)^T z + f(x) >= 0  for all z in {inner(z) >= 0}

    where e(x) is a vector of affine expressions over the program variables,
    f(x) a scalar affine expression, and ``sd`` diagonalizes the numeric pair
    (inner.A, D).  Appends fresh lam >= 0 and t variables, the row
    f(x) - lam*c >= sum(t), and one hyperbolic block per coordinate:

        ([S^T e(x)]_i - lam*[S^T b]_i)^2 <= t_i * (delta_i - lam*alpha_i).

    Feasible assignments of the enlarged program project exactly onto the
    x satisfying the robust constraint (given a Slater point of the inner
    set, which the caller asserts).
    """
    n = inner.dim
    D = symmetrize(D)
    if D.shape[0] != n or sd.dim != n:
        raise DimensionMismatch("forms and diagonalization disagree in size")
    e_exprs = [as_expr(e) for e in e_map]
    if len(e_exprs) != n:
        raise DimensionMismatch("linear-term map has wrong length")
    f_expr = as_expr(f_map)
    if np.allclose(inner.b, 0.0) and inner.c <= 0.0:
        raise DegenerateInput("inner set has no Slater point at the origin")

    lam_idx = builder.add_var()
    lam = builder.var(lam_idx)
    t_idx = builder.add_vars(n)
    t_exprs = builder.var_exprs(t_idx)

    builder.add_nonneg(lam, tag=f"{tag}:lam")
    lin = f_expr - inner.c * lam
    for t in t_exprs:
        lin = lin - t
    linear_block = builder.add_nonneg(lin, tag=f"{tag}:budget")

    beta = sd.S.T @ inner.b
    cone_blocks = []
    for i in range(n):
        eps_i = LinExpr()
        for j in range(n):
            if sd.S[j, i] != 0.0:
                eps_i = eps_i + sd.S[j, i] * e_exprs[j]
        head = eps_i - beta[i] * lam
        slack = sd.delta[i] - sd.alpha[i] * lam
        cone_blocks.append(
            hyperbolic_to_soc(builder, head, t_exprs[i], slack, tag=f"{tag}:q{i}")
        )
    return SLemmaBlock(lam_idx, t_idx, linear_block, tuple(cone_blocks))


def assemble_classical_lmi(
    inner: QuadForm, D: np.ndarray, e: np.ndarray, f: float, lam: float
) -> np.ndarray:
    """Bordered matrix of the classical S-lemma at a numeric multiplier."""
    D = symmetrize(D)
    e = np.atleast_1d(np.asarray(e, dtype=float))
    n = inner.dim
    if D.shape[0] != n or e.shape[0] != n:
        raise DimensionMismatch("outer form dimensions disagree with inner")
    M = np.empty((n + 1, n + 1))
    M[:n, :n] = D - lam * inner.A
    M[:n, n] = e - lam * inner.b
    M[n, :n] = e - lam * inner.b
    M[n, n] = f - lam * inner.c
    return M


def check_psd(M: np.ndarray, tol: float = 1e-7) -> bool:
    """True iff the smallest eigenvalue is >= -tol * (1 + ||M||_F)."""
    M = np.asarray(M, dtype=float)
    evals = np.linalg.eigvalsh(0.5 * (M + M.T))
    return bool(evals[0] >= -tol * (1.0 + np.linalg.norm(M)))


# ---------------------------------------------------------------------------
# grid verification helpers (vectorized over a multiplier grid)


def block_feasible_grid(
    inner: QuadForm,
    D: np.ndarray,
    e: np.ndarray,
    f: float,
    sd: SimulDiag,
    lam_grid: np.ndarray,
    tol: float = 1e-9,
    chunk: int = 200_000,
) -> np.ndarray:
    """For each multiplier on the grid, can the emitted block be satisfied?

    Uses the closed form: slack_i = delta_i - lam*alpha_i must be >= 0, the
    minimal t_i is head_i^2 / slack_i (head must vanish where the slack
    does), and the budget row requires f - lam*c >= sum of minimal t.
    Vectorized; independent of the conic solver.
    """
    full = np.asarray(lam_grid, dtype=float)
    eps = sd.S.T @ np.asarray(e, dtype=float)
    beta = sd.S.T @ inner.b
    scale = 1.0 + abs(f) + np.linalg.norm(eps) + np.linalg.norm(beta)
    out = np.empty(full.shape, dtype=bool)
    for lo in range(0, len(full), chunk):
        lam = full[lo : lo + chunk]
        head = eps[None, :] - lam[:, None] * beta[None, :]
        slack = sd.delta[None, :] - lam[:, None] * sd.alpha[None, :]
        ok = np.all(slack >= -tol * scale, axis=1)
        tiny = np.abs(slack) <= tol * scale
        ok &= np.all(~tiny | (np.abs(head) <= np.sqrt(tol) * scale), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            tmin = np.where(tiny, 0.0, head**2 / np.where(tiny, 1.0, slack))
        budget = f - lam * inner.c
        ok &= budget >= np.sum(np.where(slack > tol * scale, tmin, 0.0), axis=1) - tol * scale
        out[lo : lo + chunk] = ok
    return out


def lmi_psd_grid(
    inner: QuadForm,
    D: np.ndarray,
    e: np.ndarray,
    f: float,
    lam_grid: np.ndarray,
    tol: float = 1e-7,
    chunk: int = 200_000,
) -> np.ndarray:
    """Batched eigenvalue PSD check of the classical matrix over a grid."""
    lam = np.asarray(lam_grid, dtype=float)
    D = symmetrize(D)
    e = np.asarray(e, dtype=float)
    n = inner.dim
    base = np.zeros((n + 1, n + 1))
    base[:n, :n] = D
    base[:n, n] = base[n, :n] = e
    base[n, n] = f
    step = np.zeros((n + 1, n + 1))
    step[:n, :n] = -inner.A
    step[:n, n] = step[n, :n] = -inner.b
    step[n, n] = -inner.c
    out = np.empty(lam.shape, dtype=bool)
    for lo in range(0, len(lam), chunk):
        piece = lam[lo : lo + chunk]
        mats = base[None] + piece[:, None, None] * step[None]
        evals = np.linalg.eigvalsh(mats)
        norms = np.sqrt(np.sum(mats**2, axis=(1, 2)))
        out[lo : lo + chunk] = evals[:, 0] >= -tol * (1.0 + norms)
    return out
