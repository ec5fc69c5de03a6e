"""Finite-horizon linear-quadratic control under ball-bounded disturbances.

The dynamics ``x_{k+1} = A_k x_k + B_k u_k + C_k w_k`` are condensed into
stacked prediction matrices, the stage costs into one quadratic in the
stacked input u and disturbance w:

    J(x0, u, w) = w'Wq w + 2 (wl + X'u)'w + u'Uq u + 2 ul'u + const(x0)

with the input block Uq positive definite and only the linear terms
depending on x0.  Minimizing the worst case of J over the disturbance ball
(or the worst-case regret against a clairvoyant input, or the worst-case
expectation over a moment ambiguity set) then reduces to a second-order cone
program via the simplified S-lemma; the builders here produce those programs
together with the data needed to check the classical matrix-inequality
certificate after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    ConicProgram,
    ConicProgramBuilder,
    DimensionMismatch,
    LinExpr,
    add_quadratic_cost,
    cholesky_factor,
    hyperbolic_to_soc,
)
from .slemma import SimulDiag, simultaneous_diagonalize, symmetrize
from .solver import Solution, SolverConfig, Status, solve


class RecedingHorizonError(RuntimeError):
    """Solver failure inside the receding-horizon loop."""

    def __init__(self, step: int, status: Status):
        super().__init__(f"solve failed at step {step}: {status.value}")
        self.step = step
        self.status = status


def _as_stack(mats, name: str) -> np.ndarray:
    arr = np.asarray(mats, dtype=float)
    if arr.ndim != 3:
        raise DimensionMismatch(f"{name} must be a sequence of matrices")
    return arr


@dataclass
class LqcSpec:
    """Problem data over a horizon of N steps.

    ``A, B, C`` hold the per-step dynamics for k = 0..N-1; ``Q, q`` weight
    the states x_1..x_N and ``R, r`` the inputs u_0..u_{N-1}.  The stacked
    input vector is constrained to the polyhedron ``u_poly_G @ u <= u_poly_h``
    and the stacked disturbance to the ball of radius ``gamma``.

    Instances are treated as immutable after construction; derived
    factorizations are cached on the object, keyed by identity.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    q: np.ndarray
    R: np.ndarray
    r: np.ndarray
    gamma: float
    u_poly_G: np.ndarray
    u_poly_h: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.A = _as_stack(self.A, "A")
        self.B = _as_stack(self.B, "B")
        self.C = _as_stack(self.C, "C")
        self.Q = _as_stack(self.Q, "Q")
        self.R = _as_stack(self.R, "R")
        self.q = np.asarray(self.q, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.u_poly_G = np.atleast_2d(np.asarray(self.u_poly_G, dtype=float))
        self.u_poly_h = np.atleast_1d(np.asarray(self.u_poly_h, dtype=float))
        N, n_x = self.A.shape[0], self.A.shape[1]
        n_u, n_w = self.B.shape[2], self.C.shape[2]
        if self.A.shape != (N, n_x, n_x):
            raise DimensionMismatch("A blocks must be square")
        if self.B.shape != (N, n_x, n_u) or self.C.shape != (N, n_x, n_w):
            raise DimensionMismatch("B/C blocks inconsistent with A")
        if self.Q.shape != (N, n_x, n_x) or self.q.shape != (N, n_x):
            raise DimensionMismatch("state cost blocks inconsistent")
        if self.R.shape != (N, n_u, n_u) or self.r.shape != (N, n_u):
            raise DimensionMismatch("input cost blocks inconsistent")
        if self.u_poly_G.shape[1] != N * n_u or self.u_poly_G.shape[0] != len(self.u_poly_h):
            raise DimensionMismatch("input polyhedron over the stacked input is inconsistent")
        if not self.gamma > 0:
            raise ValueError("disturbance radius gamma must be positive")
        for k in range(N):
            qev = np.linalg.eigvalsh(symmetrize(self.Q[k]))
            if qev[0] < -1e-9 * max(1.0, abs(qev[-1])):
                raise ValueError(f"Q[{k}] is not positive semidefinite")
            cholesky_factor(self.R[k], f"R[{k}]")

    @property
    def horizon(self) -> int:
        return self.A.shape[0]

    @property
    def n_x(self) -> int:
        return self.A.shape[1]

    @property
    def n_u(self) -> int:
        return self.B.shape[2]

    @property
    def n_w(self) -> int:
        return self.C.shape[2]

    @property
    def stacked_input_dim(self) -> int:
        return self.horizon * self.n_u

    @property
    def stacked_dist_dim(self) -> int:
        return self.horizon * self.n_w


@dataclass(frozen=True)
class AmbiguitySpec:
    """First-order moment information: distributions with E[H w] <= mu."""

    H: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if H.size == 0:
            H = H.reshape(0, H.shape[1] if H.ndim == 2 and H.shape[1] else 0)
        if H.shape[0] != mu.shape[0]:
            raise DimensionMismatch("moment matrix rows and bound length differ")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "mu", mu)

    @property
    def num_moments(self) -> int:
        return self.H.shape[0]

    @staticmethod
    def empty(n_w: int) -> "AmbiguitySpec":
        return AmbiguitySpec(np.zeros((0, n_w)), np.zeros(0))


def box_polyhedron(bound: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows for ``-bound <= u_i <= bound`` on every coordinate."""
    eye = np.eye(dim)
    return np.vstack([eye, -eye]), np.full(2 * dim, float(bound))


def time_invariant_spec(A, B, C, Q, q, R, r, N, gamma, u_poly=None) -> LqcSpec:
    """Replicate single-step matrices across the horizon."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if u_poly is None:
        u_poly = (np.zeros((0, N * B.shape[1])), np.zeros(0))
    return LqcSpec(
        np.repeat(A[None], N, axis=0),
        np.repeat(B[None], N, axis=0),
        np.repeat(C[None], N, axis=0),
        np.repeat(Q[None], N, axis=0),
        np.repeat(q[None], N, axis=0),
        np.repeat(R[None], N, axis=0),
        np.repeat(r[None], N, axis=0),
        gamma,
        u_poly[0],
        u_poly[1],
    )


def scalar_benchmark_spec(N: int, decay: float = 0.9, gamma: float = 0.1,
                          input_bound: float = 0.4) -> LqcSpec:
    """Scalar constant-dynamics instance with geometrically decaying weights.

    A = B = C = 1, state weight decay^k on x_k (k = 1..N), input weight
    decay^k on u_k (k = 0..N-1), inputs boxed to +-input_bound.
    """
    one = np.ones((N, 1, 1))
    Q = np.array([[[decay**k]] for k in range(1, N + 1)])
    R = np.array([[[decay**k]] for k in range(N)])
    G, h = box_polyhedron(input_bound, N)
    return LqcSpec(one, one, one, Q, np.zeros((N, 1)), R, np.zeros((N, 1)),
                   gamma, G, h)


# ---------------------------------------------------------------------------
# prediction matrices and the compact cost


@dataclass(frozen=True)
class PredictionMatrices:
    """Stacked maps with (x_1, ..., x_N) = F x0 + G u + H w."""

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray


def build_prediction_matrices(spec: LqcSpec) -> PredictionMatrices:
    if "pred" in spec._cache:
        return spec._cache["pred"]
    N, n_x, n_u, n_w = spec.horizon, spec.n_x, spec.n_u, spec.n_w
    F = np.zeros((N * n_x, n_x))
    G = np.zeros((N * n_x, N * n_u))
    H = np.zeros((N * n_x, N * n_w))
    prev_F = np.eye(n_x)
    for k in range(N):
        rows = slice(k * n_x, (k + 1) * n_x)
        if k > 0:
            prev = slice((k - 1) * n_x, k * n_x)
            G[rows] = spec.A[k] @ G[prev]
            H[rows] = spec.A[k] @ H[prev]
        G[rows, k * n_u : (k + 1) * n_u] = spec.B[k]
        H[rows, k * n_w : (k + 1) * n_w] = spec.C[k]
        prev_F = spec.A[k] @ prev_F
        F[rows] = prev_F
    pred = PredictionMatrices(F, G, H)
    spec._cache["pred"] = pred
    return pred


def rollout_states(spec: LqcSpec, x0, u, w) -> np.ndarray:
    """States x_1..x_N by stepping the dynamics directly."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    u = np.asarray(u, dtype=float).reshape(spec.horizon, spec.n_u)
    w = np.asarray(w, dtype=float).reshape(spec.horizon, spec.n_w)
    xs = np.zeros((spec.horizon, spec.n_x))
    x = x0
    for k in range(spec.horizon):
        x = spec.A[k] @ x + spec.B[k] @ u[k] + spec.C[k] @ w[k]
        xs[k] = x
    return xs


def rollout_cost(spec: LqcSpec, x0, u, w) -> float:
    """Total cost by direct simulation; the ground truth for the compact form."""
    xs = rollout_states(spec, x0, u, w)
    u = np.asarray(u, dtype=float).reshape(spec.horizon, spec.n_u)
    total = 0.0
    for k in range(spec.horizon):
        total += xs[k] @ spec.Q[k] @ xs[k] + 2.0 * spec.q[k] @ xs[k]
        total += u[k] @ spec.R[k] @ u[k] + 2.0 * spec.r[k] @ u[k]
    return float(total)


@dataclass(frozen=True)
class CompactCost:
    """Stacked-cost coefficients; see the module docstring for the layout.

    Only ``u_lin`` and ``w_lin`` (and the stored ``x0``) change when the
    cost is rebuilt at a new initial state.
    """

    w_quad: np.ndarray
    w_lin: np.ndarray
    cross: np.ndarray
    u_quad: np.ndarray
    u_lin: np.ndarray
    x0_quad: np.ndarray
    x0_lin: np.ndarray
    x0: np.ndarray

    @property
    def constant(self) -> float:
        return float(2.0 * self.x0_lin @ self.x0 + self.x0 @ self.x0_quad @ self.x0)

    def evaluate(self, u, w) -> float:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        w = np.atleast_1d(np.asarray(w, dtype=float))
        return float(
            w @ self.w_quad @ w
            + 2.0 * (self.w_lin + self.cross.T @ u) @ w
            + u @ self.u_quad @ u
            + 2.0 * self.u_lin @ u
            + self.constant
        )


def _compact_base(spec: LqcSpec) -> dict:
    """x0-independent pieces of the compact cost, cached per spec."""
    if "compact_base" in spec._cache:
        return spec._cache["compact_base"]
    pred = build_prediction_matrices(spec)
    N = spec.horizon
    Qbar = np.zeros((N * spec.n_x, N * spec.n_x))
    Rbar = np.zeros((N * spec.n_u, N * spec.n_u))
    for k in range(N):
        Qbar[k * spec.n_x : (k + 1) * spec.n_x, k * spec.n_x : (k + 1) * spec.n_x] = spec.Q[k]
        Rbar[k * spec.n_u : (k + 1) * spec.n_u, k * spec.n_u : (k + 1) * spec.n_u] = spec.R[k]
    qbar = spec.q.reshape(-1)
    rbar = spec.r.reshape(-1)
    QF = Qbar @ pred.F
    base = {
        "w_quad": symmetrize(pred.H.T @ Qbar @ pred.H),
        "cross": pred.G.T @ Qbar @ pred.H,
        "u_quad": symmetrize(pred.G.T @ Qbar @ pred.G + Rbar),
        "w_lin_x0": pred.H.T @ QF,
        "w_lin_0": pred.H.T @ qbar,
        "u_lin_x0": pred.G.T @ QF,
        "u_lin_0": pred.G.T @ qbar + rbar,
        "x0_quad": symmetrize(pred.F.T @ QF),
        "x0_lin": pred.F.T @ qbar,
    }
    spec._cache["compact_base"] = base
    return base


def build_compact_cost(spec: LqcSpec, x0) -> CompactCost:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (spec.n_x,):
        raise DimensionMismatch("x0 has wrong length")
    base = _compact_base(spec)
    return CompactCost(
        w_quad=base["w_quad"],
        w_lin=base["w_lin_x0"] @ x0 + base["w_lin_0"],
        cross=base["cross"],
        u_quad=base["u_quad"],
        u_lin=base["u_lin_x0"] @ x0 + base["u_lin_0"],
        x0_quad=base["x0_quad"],
        x0_lin=base["x0_lin"],
        x0=x0,
    )


def _ball_diag(spec: LqcSpec, kernel: str, w_quad_eff: np.ndarray) -> SimulDiag:
    """Congruence diagonalizing (I, effective disturbance quadratic); cached."""
    key = f"diag:{kernel}"
    if key not in spec._cache:
        spec._cache[key] = simultaneous_diagonalize(np.eye(w_quad_eff.shape[0]), w_quad_eff)
    return spec._cache[key]


# ---------------------------------------------------------------------------
# SOCP builders


@dataclass(frozen=True)
class LqcSocp:
    """A built program plus the bookkeeping to interpret its solution.

    The program is posed in disturbance units normalized to the unit ball
    (the multiplier variable carries a factor gamma^2), which keeps the cone
    data well scaled for very small or large ball radii; ``extract`` undoes
    the substitution.
    """

    program: ConicProgram
    mode: str
    compact: CompactCost
    diag: SimulDiag
    gamma: float
    u_index: np.ndarray
    lam_index: int
    t_index: np.ndarray
    beta_index: np.ndarray
    n_cone_q: int
    lmi_dim: int

    def extract(self, sol: Solution) -> dict:
        return {
            "u": sol.x[self.u_index],
            "lam": float(sol.x[self.lam_index]) / self.gamma**2,
            "t": sol.x[self.t_index],
            "beta": sol.x[self.beta_index],
            "objective": sol.objective,
        }


def _build_minmax_socp(spec: LqcSpec, x0, kernel: str, amb: AmbiguitySpec | None) -> LqcSocp:
    cc = build_compact_cost(spec, x0)
    n_u_all, n_w_all = spec.stacked_input_dim, spec.stacked_dist_dim

    if kernel == "robust":
        w_quad_eff = cc.w_quad
        uq_inv_ulin = None
        offset = cc.constant
    elif kernel == "regret":
        uq_inv = np.linalg.solve(cc.u_quad, np.eye(n_u_all))
        w_quad_eff = symmetrize(cc.cross.T @ uq_inv @ cc.cross)
        uq_inv_ulin = uq_inv @ cc.u_lin
        offset = float(cc.u_lin @ uq_inv_ulin)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")

    sd = _ball_diag(spec, kernel, w_quad_eff)
    m = amb.num_moments if amb is not None else 0
    if amb is not None and amb.H.shape[1] != n_w_all:
        raise DimensionMismatch("moment matrix columns must match stacked disturbance dim")

    b = ConicProgramBuilder()
    u_idx = b.add_vars(n_u_all)
    lam_idx = b.add_var()
    t_idx = b.add_vars(n_w_all)
    beta_idx = b.add_vars(m)
    u = b.var_exprs(u_idx)
    lam = b.var(lam_idx)
    ts = b.var_exprs(t_idx)
    betas = b.var_exprs(beta_idx)

    # disturbance normalized to the unit ball: lam here is gamma^2 * the
    # multiplier of the original ball, heads pick up a factor gamma and the
    # diagonal tau a factor gamma^2 -- an exact substitution that keeps the
    # block data O(1) even for extreme radii
    t_quad = add_quadratic_cost(b, cc.u_quad, u, require_pd=True)
    obj = t_quad + lam
    for j, ue in enumerate(u):
        obj = obj + 2.0 * cc.u_lin[j] * ue
    for te in ts:
        obj = obj + te
    if amb is not None:
        for j, be in enumerate(betas):
            obj = obj + amb.mu[j] * be
    b.set_objective(obj + offset)

    b.add_nonneg(lam, tag="lam")
    for be in betas:
        b.add_nonneg(be, tag="beta")
    for i in range(spec.u_poly_G.shape[0]):
        row = LinExpr.constant(spec.u_poly_h[i])
        for j, ue in enumerate(u):
            if spec.u_poly_G[i, j] != 0.0:
                row = row - spec.u_poly_G[i, j] * ue
        b.add_nonneg(row, tag="input_set")

    # per-coordinate heads [S^T (linear-in-u disturbance coupling)]_i
    if kernel == "robust":
        # w_lin + cross^T u (- H^T beta / 2 with moment info)
        head_mat = sd.S.T @ cc.cross.T          # rows i, cols over u
        head_const = sd.S.T @ cc.w_lin
    else:
        head_mat = sd.S.T @ cc.cross.T
        head_const = sd.S.T @ (cc.cross.T @ uq_inv_ulin)
    beta_mat = -(sd.S.T @ (amb.H.T if amb is not None else np.zeros((n_w_all, 0)))) / 2.0

    g = spec.gamma
    cone_q = 0
    for i in range(n_w_all):
        head = LinExpr.constant(g * head_const[i])
        for j, ue in enumerate(u):
            if head_mat[i, j] != 0.0:
                head = head + g * head_mat[i, j] * ue
        for j, be in enumerate(betas):
            if beta_mat[i, j] != 0.0:
                head = head + g * beta_mat[i, j] * be
        slack = 1.0 * lam * sd.alpha[i] - g**2 * sd.delta[i]
        hyperbolic_to_soc(b, head, ts[i], slack, tag=f"coneq{i}")
        cone_q += 1

    mode = kernel if amb is None else ("dr" if kernel == "robust" else "dr-regret")
    return LqcSocp(
        program=b.build(),
        mode=mode,
        compact=cc,
        diag=sd,
        gamma=g,
        u_index=u_idx,
        lam_index=lam_idx,
        t_index=t_idx,
        beta_index=beta_idx,
        n_cone_q=cone_q,
        lmi_dim=n_u_all + n_w_all + 1,
    )


def build_robust_socp(spec: LqcSpec, x0) -> LqcSocp:
    """Min over allowed inputs of the worst-case cost on the disturbance ball."""
    return _build_minmax_socp(spec, x0, "robust", None)


def build_regret_socp(spec: LqcSpec, x0) -> LqcSocp:
    """Min over allowed inputs of the worst-case regret against the clairvoyant
    unconstrained input; the reported optimum is always nonnegative."""
    return _build_minmax_socp(spec, x0, "regret", None)


def build_dr_socp(spec: LqcSpec, x0, amb: AmbiguitySpec) -> LqcSocp:
    """Worst-case expected cost over ball-supported distributions whose first
    moments satisfy E[H w] <= mu.  With no moment rows this coincides with
    the purely robust program."""
    return _build_minmax_socp(spec, x0, "robust", amb)


def build_dr_regret_socp(spec: LqcSpec, x0, amb: AmbiguitySpec) -> LqcSocp:
    """Distributionally robust version of the regret objective."""
    return _build_minmax_socp(spec, x0, "regret", amb)


# ---------------------------------------------------------------------------
# certificate data for the classical matrix inequality


@dataclass(frozen=True)
class RobustCertificateData:
    """Numeric pieces to rebuild the bordered-matrix certificate of a solved
    robust program:

        [[I,    y,                F       ]
         [y',   z - gamma^2 lam, -h'      ]
         [F',  -h,                lam*I - Wq + F'F]]

    with h = wl - X' Uq^{-1} ul, F = L^{-1} X' ... transposed consistently
    with the Cholesky factor Uq = L L', and y = L'u + L^{-1} ul.  The input
    set maps to y_poly_G @ y <= y_poly_h.
    """

    compact: CompactCost
    gamma: float
    chol_L: np.ndarray
    h: np.ndarray
    F: np.ndarray
    y_poly_G: np.ndarray
    y_poly_h: np.ndarray

    def y_from_u(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return self.chol_L.T @ u + np.linalg.solve(self.chol_L, self.compact.u_lin)

    def epigraph_value(self, u, lam, t) -> float:
        """The z consistent with a solved program's (u, lam, t)."""
        cc = self.compact
        u = np.atleast_1d(np.asarray(u, dtype=float))
        quad = float(u @ cc.u_quad @ u + 2.0 * cc.u_lin @ u)
        blin = float(cc.u_lin @ np.linalg.solve(cc.u_quad, cc.u_lin))
        return quad + float(np.sum(t)) + self.gamma**2 * float(lam) + blin

    def assemble(self, u, lam, t) -> np.ndarray:
        cc = self.compact
        n_u = cc.u_quad.shape[0]
        n_w = cc.w_quad.shape[0]
        y = self.y_from_u(u)
        z = self.epigraph_value(u, lam, t)
        M = np.zeros((n_u + 1 + n_w, n_u + 1 + n_w))
        M[:n_u, :n_u] = np.eye(n_u)
        M[:n_u, n_u] = y
        M[n_u, :n_u] = y
        M[:n_u, n_u + 1 :] = self.F
        M[n_u + 1 :, :n_u] = self.F.T
        M[n_u, n_u] = z - self.gamma**2 * float(lam)
        M[n_u, n_u + 1 :] = -self.h
        M[n_u + 1 :, n_u] = -self.h
        M[n_u + 1 :, n_u + 1 :] = float(lam) * np.eye(n_w) - cc.w_quad + self.F.T @ self.F
        return M


def build_robust_sdp_data(spec: LqcSpec, x0) -> RobustCertificateData:
    cc = build_compact_cost(spec, x0)
    L = cholesky_factor(cc.u_quad, "stacked input cost")
    uq_inv_ulin = np.linalg.solve(cc.u_quad, cc.u_lin)
    h = cc.w_lin - cc.cross.T @ uq_inv_ulin
    F = np.linalg.solve(L, cc.cross)
    y_G = spec.u_poly_G @ np.linalg.inv(L).T
    y_h = spec.u_poly_h + spec.u_poly_G @ uq_inv_ulin
    return RobustCertificateData(cc, spec.gamma, L, h, F, y_G, y_h)


# ---------------------------------------------------------------------------
# receding horizon


@dataclass
class SimulationRecord:
    states: np.ndarray
    inputs: np.ndarray
    objectives: list[float]
    statuses: list[Status]
    iterations: list[int]


_BUILDERS = {
    "robust": lambda spec, x0, amb: build_robust_socp(spec, x0),
    "regret": lambda spec, x0, amb: build_regret_socp(spec, x0),
    "dr": build_dr_socp,
    "dr-regret": build_dr_regret_socp,
}


def receding_horizon_simulate(
    spec: LqcSpec,
    x0,
    disturbances,
    controller: str = "robust",
    steps: int | None = None,
    amb: AmbiguitySpec | None = None,
    config: SolverConfig | None = None,
) -> SimulationRecord:
    """Apply the first input of the re-solved plan at every step.

    ``disturbances`` supplies the realized per-step disturbance vectors; the
    plant steps with the first-stage dynamics matrices.  Solver failures
    raise :class:`RecedingHorizonError` with the offending step index.
    """
    if controller not in _BUILDERS:
        raise ValueError(f"unknown controller {controller!r}")
    if controller in ("dr", "dr-regret") and amb is None:
        raise ValueError("moment information required for distributionally robust control")
    disturbances = np.atleast_2d(np.asarray(disturbances, dtype=float))
    if steps is None:
        steps = disturbances.shape[0]
    if disturbances.shape != (steps, spec.n_w):
        raise DimensionMismatch("disturbance sequence has wrong shape")

    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    states = [x.copy()]
    inputs = np.zeros((steps, spec.n_u))
    objectives, statuses, iterations = [], [], []
    for k in range(steps):
        socp = _BUILDERS[controller](spec, x, amb)
        sol = solve(socp.program, config)
        statuses.append(sol.status)
        iterations.append(sol.iterations)
        if sol.status is not Status.OPTIMAL:
            raise RecedingHorizonError(k, sol.status)
        objectives.append(sol.objective)
        u_first = sol.x[socp.u_index][: spec.n_u]
        inputs[k] = u_first
        x = spec.A[0] @ x + spec.B[0] @ u_first + spec.C[0] @ disturbances[k]
        states.append(x.copy())
    return SimulationRecord(np.array(states), inputs, objectives, statuses, iterations)
