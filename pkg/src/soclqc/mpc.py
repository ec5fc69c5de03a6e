"""MPC with an online-reconfigurable ellipsoidal terminal set.

The terminal set {x : (x-c)' P (x-c) <= r^2} has its center c and radius r
as decision variables of the finite-horizon problem.  Three robust
requirements make the set a valid terminal ingredient under the linear
terminal controller u = K x:

* positive invariance of the closed loop A+BK on the set,
* containment in the polyhedral state set,
* the controller staying inside the polyhedral input set.

Invariance reduces, via the simplified S-lemma and a homogenizing
multiplication by r, to one second-order block plus per-coordinate
hyperbolic blocks; the two containments reduce to support-function rows that
are linear in (c, r).  Everything lands in one SOCP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import (
    ConicProgram,
    ConicProgramBuilder,
    DimensionMismatch,
    LinExpr,
    NotPositiveDefinite,
    hyperbolic_to_soc,
    psd_sqrt_factor,
    quadratic_epigraph,
)
from .slemma import simultaneous_diagonalize, symmetrize
from .solver import Solution


class NegativeEigenvalue(ValueError):
    """A nominally PSD matrix has a significantly negative eigenvalue."""


@dataclass
class MpcSpec:
    """Time-invariant system, polyhedral sets, terminal gain and shape.

    State set {x : E x <= f} and input set {u : G u <= h} must contain the
    origin strictly (f > 0, h > 0) and the terminal closed loop A + B K must
    be stable so that small origin-centered terminal sets are feasible.
    """

    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    f: np.ndarray
    G: np.ndarray
    h: np.ndarray
    K: np.ndarray
    P: np.ndarray
    N: int
    Q: np.ndarray
    R: np.ndarray
    Q_f: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.E = np.atleast_2d(np.asarray(self.E, dtype=float))
        self.f = np.atleast_1d(np.asarray(self.f, dtype=float))
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        self.h = np.atleast_1d(np.asarray(self.h, dtype=float))
        self.K = np.atleast_2d(np.asarray(self.K, dtype=float))
        self.P = symmetrize(self.P)
        self.Q = symmetrize(self.Q)
        self.R = symmetrize(self.R)
        self.Q_f = symmetrize(self.Q_f)
        n_x, n_u = self.A.shape[0], self.B.shape[1]
        if self.A.shape != (n_x, n_x) or self.B.shape != (n_x, n_u):
            raise DimensionMismatch("A/B shapes inconsistent")
        if self.E.shape[1] != n_x or self.E.shape[0] != len(self.f):
            raise DimensionMismatch("state set rows inconsistent")
        if self.G.shape[1] != n_u or self.G.shape[0] != len(self.h):
            raise DimensionMismatch("input set rows inconsistent")
        if self.K.shape != (n_u, n_x):
            raise DimensionMismatch("terminal gain shape inconsistent")
        if self.P.shape != (n_x, n_x):
            raise DimensionMismatch("terminal shape matrix size inconsistent")
        if self.N < 1:
            raise ValueError("horizon must be at least 1")
        if np.linalg.eigvalsh(self.P)[0] <= 0:
            raise NotPositiveDefinite("terminal shape matrix must be positive definite")
        if np.max(np.abs(np.linalg.eigvals(self.A + self.B @ self.K))) >= 1.0:
            raise ValueError("terminal closed loop A + B K must be stable")
        if np.any(self.f <= 0) or np.any(self.h <= 0):
            raise ValueError("state and input sets must contain the origin strictly")
        for M, name in ((self.Q, "Q"), (self.Q_f, "Q_f")):
            if np.linalg.eigvalsh(M)[0] < -1e-9 * max(1.0, np.linalg.norm(M)):
                raise ValueError(f"{name} must be positive semidefinite")
        if np.linalg.eigvalsh(self.R)[0] <= 0:
            raise ValueError("R must be positive definite")

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def A_cl(self) -> np.ndarray:
        return self.A + self.B @ self.K

    def p_sqrt(self) -> np.ndarray:
        if "p_sqrt" not in self._cache:
            self._cache["p_sqrt"] = psd_sqrt_factor(self.P)
        return self._cache["p_sqrt"]

    def p_inv_sqrt(self) -> np.ndarray:
        if "p_inv_sqrt" not in self._cache:
            vals, vecs = np.linalg.eigh(self.P)
            self._cache["p_inv_sqrt"] = (vecs / np.sqrt(vals)) @ vecs.T
        return self._cache["p_inv_sqrt"]


@dataclass(frozen=True)
class TerminalDiag:
    """Diagonalization data for the terminal pair.

    ``S`` diagonalizes P (diagonal ``pi``) and A_cl' P A_cl (diagonal
    ``alpha``) simultaneously; ``m_sqrt`` is the symmetric PSD square root
    of (A_cl - I)' P (A_cl - I) and ``coupling`` is S' A_cl' P (A_cl - I),
    the matrix entering the invariance heads.
    """

    S: np.ndarray
    pi: np.ndarray
    alpha: np.ndarray
    m_sqrt: np.ndarray
    coupling: np.ndarray


def diagonalize_terminal_pair(spec: MpcSpec) -> TerminalDiag:
    if "terminal_diag" in spec._cache:
        return spec._cache["terminal_diag"]
    A_cl = spec.A_cl
    sd = simultaneous_diagonalize(spec.P, A_cl.T @ spec.P @ A_cl)
    drift = A_cl - np.eye(spec.n_x)
    M = symmetrize(drift.T @ spec.P @ drift)
    try:
        m_sqrt = psd_sqrt_factor(M, tol=1e-10)
    except NotPositiveDefinite as exc:
        raise NegativeEigenvalue(str(exc)) from exc
    td = TerminalDiag(
        S=sd.S,
        pi=sd.alpha,
        alpha=sd.delta,
        m_sqrt=m_sqrt,
        coupling=sd.S.T @ A_cl.T @ spec.P @ drift,
    )
    spec._cache["terminal_diag"] = td
    return td


@dataclass(frozen=True)
class InvarianceBlock:
    lam_index: int
    t_index: np.ndarray
    budget_block: int
    cone_blocks: tuple[int, ...]


def _dot_exprs(row: np.ndarray, exprs) -> LinExpr:
    out = LinExpr()
    for coeff, e in zip(row, exprs):
        if coeff != 0.0:
            out = out + coeff * e
    return out


def emit_invariance_constraints(
    td: TerminalDiag, c_exprs, r_expr, builder: ConicProgramBuilder
) -> InvarianceBlock:
    """Append blocks making the ellipsoid (c, r) positively invariant.

    The multiplier and slack variables are pre-scaled by r so everything is
    jointly convex in (c, r): one block enforces
    ||m_sqrt c||^2 <= r * (r - sum(t) - lam), and coordinate i enforces
    (coupling c)_i^2 <= t_i * (lam * pi_i - r * alpha_i).
    """
    n = td.S.shape[0]
    if len(c_exprs) != n:
        raise DimensionMismatch("center expressions have wrong length")
    lam_idx = builder.add_var()
    lam = builder.var(lam_idx)
    t_idx = builder.add_vars(n)
    ts = builder.var_exprs(t_idx)
    builder.add_nonneg(lam, tag="inv:lam")

    spent = lam
    for t in ts:
        spent = spent + t
    mc = [_dot_exprs(td.m_sqrt[i], c_exprs) for i in range(n)]
    budget = hyperbolic_to_soc(builder, mc, r_expr, r_expr - spent, tag="inv:budget")

    blocks = []
    for i in range(n):
        head = _dot_exprs(td.coupling[i], c_exprs)
        slack = td.pi[i] * lam - td.alpha[i] * r_expr
        blocks.append(hyperbolic_to_soc(builder, head, ts[i], slack, tag=f"inv:q{i}"))
    return InvarianceBlock(lam_idx, t_idx, budget, tuple(blocks))


def emit_state_containment(
    spec: MpcSpec, td: TerminalDiag, c_exprs, r_expr, builder: ConicProgramBuilder
) -> list[int]:
    """Rows e_j' c + ||e_j' P^{-1/2}|| r <= f_j keeping the ellipsoid in the
    state set (support function of the ball after whitening by P^{1/2})."""
    rows = spec.E
    gains = np.linalg.norm(rows @ spec.p_inv_sqrt(), axis=1)
    out = []
    for j in range(rows.shape[0]):
        expr = spec.f[j] - _dot_exprs(rows[j], c_exprs) - gains[j] * r_expr
        out.append(builder.add_nonneg(expr, tag=f"state_cont{j}"))
    return out


def emit_input_containment(
    spec: MpcSpec, td: TerminalDiag, c_exprs, r_expr, builder: ConicProgramBuilder
) -> list[int]:
    """Same support-function rows for the terminal controller: rows of G K."""
    rows = spec.G @ spec.K
    gains = np.linalg.norm(rows @ spec.p_inv_sqrt(), axis=1)
    out = []
    for j in range(rows.shape[0]):
        expr = spec.h[j] - _dot_exprs(rows[j], c_exprs) - gains[j] * r_expr
        out.append(builder.add_nonneg(expr, tag=f"input_cont{j}"))
    return out


@dataclass(frozen=True)
class MpcSocp:
    program: ConicProgram
    spec: MpcSpec
    x_init: np.ndarray
    u_index: np.ndarray       # (N, n_u)
    x_index: np.ndarray       # (N, n_x), states x_1..x_N
    c_index: np.ndarray
    r_index: int
    invariance: InvarianceBlock

    def extract(self, sol: Solution) -> dict:
        states = np.vstack([self.x_init, sol.x[self.x_index]])
        return {
            "states": states,
            "inputs": sol.x[self.u_index],
            "center": sol.x[self.c_index],
            "radius": float(sol.x[self.r_index]),
            "lam": float(sol.x[self.invariance.lam_index]),
            "t": sol.x[self.invariance.t_index],
            "objective": sol.objective,
        }


def build_mpc_socp(spec: MpcSpec, x_init, fixed_terminal=None) -> MpcSocp:
    """Finite-horizon problem with the reconfigurable terminal ellipsoid.

    ``fixed_terminal=(c0, r0)`` pins the terminal set instead (the offline
    baseline); the decision variables stay in place so programs are
    structurally identical.
    """
    x_init = np.atleast_1d(np.asarray(x_init, dtype=float))
    if x_init.shape != (spec.n_x,):
        raise DimensionMismatch("x_init has wrong length")
    if np.any(spec.E @ x_init > spec.f):
        raise ValueError("x_init violates the state set")
    N, n_x, n_u = spec.N, spec.n_x, spec.n_u
    td = diagonalize_terminal_pair(spec)

    b = ConicProgramBuilder()
    u_idx = b.add_vars(N * n_u).reshape(N, n_u)
    x_idx = b.add_vars(N * n_x).reshape(N, n_x)
    c_idx = b.add_vars(n_x)
    r_idx = b.add_var()
    c_exprs = b.var_exprs(c_idx)
    r_expr = b.var(r_idx)

    # dynamics
    for k in range(N):
        uk = b.var_exprs(u_idx[k])
        xk1 = b.var_exprs(x_idx[k])
        for i in range(n_x):
            row = -xk1[i] + _dot_exprs(spec.B[i], uk)
            if k == 0:
                row = row + float(spec.A[i] @ x_init)
            else:
                row = row + _dot_exprs(spec.A[i], b.var_exprs(x_idx[k - 1]))
            b.add_eq(row)

    # path constraints: states 1..N-1 in X, all inputs in U
    for k in range(N - 1):
        xk = b.var_exprs(x_idx[k])
        for j in range(spec.E.shape[0]):
            b.add_nonneg(spec.f[j] - _dot_exprs(spec.E[j], xk), tag="state_set")
    for k in range(N):
        uk = b.var_exprs(u_idx[k])
        for j in range(spec.G.shape[0]):
            b.add_nonneg(spec.h[j] - _dot_exprs(spec.G[j], uk), tag="input_set")

    # terminal membership ||P^{1/2}(x_N - c)|| <= r
    p_half = spec.p_sqrt()
    xN = b.var_exprs(x_idx[N - 1])
    tail = [
        _dot_exprs(p_half[i], xN) - _dot_exprs(p_half[i], c_exprs) for i in range(n_x)
    ]
    b.add_soc(r_expr, tail, tag="terminal_membership")

    b.add_nonneg(r_expr, tag="radius")
    inv = emit_invariance_constraints(td, c_exprs, r_expr, b)
    emit_state_containment(spec, td, c_exprs, r_expr, b)
    emit_input_containment(spec, td, c_exprs, r_expr, b)

    if fixed_terminal is not None:
        c0, r0 = fixed_terminal
        c0 = np.atleast_1d(np.asarray(c0, dtype=float))
        for i in range(n_x):
            b.add_eq(c_exprs[i] - c0[i])
        b.add_eq(r_expr - float(r0))

    # stage costs sum x_k' Q x_k + u_k' R u_k (k = 0..N-1) plus x_N' Q_f x_N;
    # the k = 0 state term is a constant.
    fq = psd_sqrt_factor(spec.Q)
    fr = psd_sqrt_factor(spec.R)
    ff = psd_sqrt_factor(spec.Q_f)
    factors = [fq] * (N - 1) + [fr] * N + [ff]
    cost_exprs: list[LinExpr] = []
    for k in range(1, N):
        cost_exprs.extend(b.var_exprs(x_idx[k - 1]))
    for k in range(N):
        cost_exprs.extend(b.var_exprs(u_idx[k]))
    cost_exprs.extend(b.var_exprs(x_idx[N - 1]))
    F_all = scipy.linalg.block_diag(*factors)

    t_cost = b.var(b.add_var())
    quadratic_epigraph(b, F_all, np.zeros(F_all.shape[0]), cost_exprs, 1.0, t_cost,
                       tag="obj_quad")
    b.set_objective(t_cost + float(x_init @ spec.Q @ x_init))

    return MpcSocp(b.build(), spec, x_init, u_idx, x_idx, c_idx, r_idx, inv)


def max_fixed_radius(spec: MpcSpec) -> float:
    """Largest origin-centered radius satisfying both containments."""
    td = diagonalize_terminal_pair(spec)
    gains_x = np.linalg.norm(spec.E @ spec.p_inv_sqrt(), axis=1)
    gains_u = np.linalg.norm((spec.G @ spec.K) @ spec.p_inv_sqrt(), axis=1)
    bounds = []
    for g, lim in ((gains_x, spec.f), (gains_u, spec.h)):
        mask = g > 1e-12
        if np.any(mask):
            bounds.append(np.min(lim[mask] / g[mask]))
    return float(min(bounds)) if bounds else np.inf
