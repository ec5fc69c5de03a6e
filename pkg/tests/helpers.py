import numpy as np
import scipy.linalg

from soclqc.lqc import LqcSpec, box_polyhedron
from soclqc.mpc import MpcSpec


def random_lqc_spec(rng, n_x, n_u, n_w, N, gamma=None, with_linear=True):
    """Well-posed random instance: PSD state costs, PD input costs, box inputs."""
    A = rng.standard_normal((N, n_x, n_x)) * 0.7
    B = rng.standard_normal((N, n_x, n_u))
    C = rng.standard_normal((N, n_x, n_w))
    Q = np.zeros((N, n_x, n_x))
    R = np.zeros((N, n_u, n_u))
    for k in range(N):
        Mq = rng.standard_normal((n_x, n_x))
        Q[k] = Mq.T @ Mq / n_x
        Mr = rng.standard_normal((n_u, n_u))
        R[k] = Mr.T @ Mr / n_u + 0.5 * np.eye(n_u)
    scale = 0.3 if with_linear else 0.0
    q = rng.standard_normal((N, n_x)) * scale
    r = rng.standard_normal((N, n_u)) * scale
    if gamma is None:
        gamma = rng.uniform(0.2, 1.5)
    G, h = box_polyhedron(rng.uniform(0.5, 2.0), N * n_u)
    return LqcSpec(A, B, C, Q, q, R, r, gamma, G, h)


def worst_case_at(socp, u):
    """Exact worst-case objective of a robust program at a fixed input."""
    from soclqc.oracle import max_quad_over_ball

    cc = socp.compact
    res = max_quad_over_ball(cc.w_quad, cc.w_lin + cc.cross.T @ u, socp.gamma)
    return res.value + float(u @ cc.u_quad @ u + 2 * cc.u_lin @ u) + cc.constant


def regret_at(socp, u):
    """Exact worst-case regret of a regret program at a fixed input."""
    from soclqc.oracle import max_quad_over_ball

    cc = socp.compact
    uq_inv_ulin = np.linalg.solve(cc.u_quad, cc.u_lin)
    kern = cc.cross.T @ np.linalg.solve(cc.u_quad, cc.cross)
    res = max_quad_over_ball(kern, cc.cross.T @ (uq_inv_ulin + u), socp.gamma)
    return (
        res.value
        + float(u @ cc.u_quad @ u + 2 * cc.u_lin @ u)
        + float(cc.u_lin @ uq_inv_ulin)
    )


def scalar_regret_grid_oracle(spec, x0, u_grid, w_grid):
    """Vectorized nested grid min-max of cost minus clairvoyant cost.

    Only for horizon-stacked scalar programs (one stacked input and one
    stacked disturbance coordinate), i.e. n_u = n_w = N = 1.
    """
    from soclqc.lqc import build_compact_cost

    cc = build_compact_cost(spec, x0)
    Cq = float(cc.w_quad[0, 0])
    cl = float(cc.w_lin[0])
    Dq = float(cc.cross[0, 0])
    Bq = float(cc.u_quad[0, 0])
    bl = float(cc.u_lin[0])
    const = cc.constant
    U = np.asarray(u_grid)[:, None]
    W = np.asarray(w_grid)[None, :]
    j_uw = Cq * W**2 + 2 * (cl + Dq * U) * W + Bq * U**2 + 2 * bl * U + const
    v = -(bl + Dq * W) / Bq
    j_opt = Cq * W**2 + 2 * (cl + Dq * v) * W + Bq * v**2 + 2 * bl * v + const
    return float(np.min(np.max(j_uw - j_opt, axis=1)))


def double_integrator_mpc(N=8, x_bound=5.0, u_bound=1.0) -> MpcSpec:
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.array([[0.5], [1.0]])
    K = np.array([[-0.4, -1.2]])
    A_cl = A + B @ K
    P = scipy.linalg.solve_discrete_lyapunov(A_cl.T, np.eye(2))
    E = np.vstack([np.eye(2), -np.eye(2)])
    f = np.full(4, x_bound)
    G = np.array([[1.0], [-1.0]])
    h = np.full(2, u_bound)
    Q = np.eye(2)
    R = np.eye(1)
    Q_f = scipy.linalg.solve_discrete_lyapunov(A_cl.T, Q + K.T @ R @ K)
    return MpcSpec(A, B, E, f, G, h, K, P, N, Q, R, Q_f)


def ellipsoid_boundary_points(spec, c, r, count, rng):
    """Points with (x - c)' P (x - c) = r^2."""
    D = rng.standard_normal((count, spec.n_x))
    D /= np.linalg.norm(D, axis=1)[:, None]
    return c + r * (D @ spec.p_inv_sqrt())
