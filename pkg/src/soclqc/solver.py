"""Dense primal-dual interior-point solver for second-order cone programs.

Path-following with Nesterov-Todd scaling and a Mehrotra predictor-corrector,
after the conic solver of Vandenberghe's coneprog notes.  The program

    min c^T x   s.t.  eq_A x = eq_b,   s_i = M_i x + v_i in K_i

is solved in the slack form ``G x + s = h`` with ``G = -stack(M_i)``,
``h = stack(v_i)``.  Search directions come from one dense LU factorization
of the statically regularized quasidefinite KKT system per iteration,
polished by iterative refinement against the unregularized system (the
normal-equation route squares the scaling's condition number and loses the
dual residual near convergence).  Infeasibility is detected by a certificate
heuristic on the iterates (no homogeneous embedding): an approximate Farkas
ray of the duals flags primal infeasibility, a divergent primal ray with
negative objective flags dual infeasibility.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import NONNEG, ConeBlock, ConicProgram


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SolverConfig:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iters: int = 100
    fraction_to_boundary: float = 0.99

    def __post_init__(self):
        if self.tol_feas <= 0 or self.tol_gap <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0.0 < self.fraction_to_boundary < 1.0:
            raise ValueError("fraction_to_boundary must lie in (0, 1)")


@dataclass
class Solution:
    status: Status
    x: np.ndarray
    y_eq: np.ndarray
    z_blocks: list[np.ndarray]
    objective: float
    iterations: int
    res_primal: float
    res_dual: float
    res_gap: float

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# ---------------------------------------------------------------------------
# cone arithmetic on stacked slack vectors


class _Cones:
    """Stacked cone operations; dims[i] = (kind, size) per block."""

    def __init__(self, blocks: tuple[ConeBlock, ...]):
        self.dims = [(blk.kind, blk.dim) for blk in blocks]
        self.total = sum(d for _, d in self.dims)
        self.offsets = np.cumsum([0] + [d for _, d in self.dims])[:-1]
        self.num_blocks = len(self.dims)
        self._slices = [
            (kind, slice(off, off + d))
            for (kind, d), off in zip(self.dims, self.offsets)
        ]

    def slices(self):
        return self._slices

    def identity(self) -> np.ndarray:
        e = np.zeros(self.total)
        for kind, sl in self.slices():
            e[sl.start] = 1.0
        return e

    def inside(self, u: np.ndarray, margin: float = 0.0) -> bool:
        for kind, sl in self.slices():
            blk = u[sl]
            if kind == NONNEG:
                if blk[0] <= margin:
                    return False
            else:
                if blk[0] - np.linalg.norm(blk[1:]) <= margin:
                    return False
        return True

    def shift_inside(self, u: np.ndarray, pad: float = 1.0) -> np.ndarray:
        """Translate each block along the cone identity until well interior.

        The margin scales with the block magnitude; an absolute pad leaves
        large blocks nearly on the boundary and the first steps collapse.
        """
        out = u.copy()
        for kind, sl in self.slices():
            blk = out[sl]
            if kind == NONNEG:
                deficit = pad - blk[0]
            else:
                tail = np.linalg.norm(blk[1:])
                deficit = tail + pad * (1.0 + tail) - blk[0]
            if deficit > 0:
                blk[0] += deficit
        return out

    def max_step(self, u: np.ndarray, du: np.ndarray) -> float:
        """Largest a >= 0 with u + a*du still in the cone (inf if unbounded)."""
        alpha = np.inf
        for kind, sl in self.slices():
            b, db = u[sl], du[sl]
            if kind == NONNEG:
                if db[0] < 0:
                    alpha = min(alpha, -b[0] / db[0])
                continue
            # roots of |b0+a*db0|^2 - ||b1+a*db1||^2, the boundary crossing;
            # a0 in factored form to limit cancellation near the boundary
            nb = np.linalg.norm(b[1:])
            a2 = db[0] ** 2 - db[1:] @ db[1:]
            a1 = 2.0 * (b[0] * db[0] - b[1:] @ db[1:])
            a0 = (b[0] - nb) * (b[0] + nb)
            roots = []
            if abs(a2) < 1e-14 * max(1.0, abs(a1), abs(a0)):
                if a1 < 0:
                    roots.append(-a0 / a1)
            else:
                disc = a1 * a1 - 4.0 * a2 * a0
                if disc >= 0:
                    sq = np.sqrt(disc)
                    roots.extend([(-a1 - sq) / (2 * a2), (-a1 + sq) / (2 * a2)])
            pos = [r for r in roots if r > 0]
            if pos:
                alpha = min(alpha, min(pos))
        return alpha

    def project(self, u: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the cone, per block."""
        out = u.copy()
        for kind, sl in self.slices():
            blk = out[sl]
            if kind == NONNEG:
                blk[0] = max(0.0, blk[0])
                continue
            tail = np.linalg.norm(blk[1:])
            if blk[0] >= tail:
                continue
            if blk[0] <= -tail:
                blk[:] = 0.0
            else:
                coef = (blk[0] + tail) / 2.0
                blk[0] = coef
                if tail > 0:
                    blk[1:] *= coef / tail
        return out

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Jordan product per block."""
        out = np.empty_like(u)
        for kind, sl in self.slices():
            a, b = u[sl], v[sl]
            if kind == NONNEG:
                out[sl] = a * b
            else:
                out[sl.start] = a @ b
                out[sl.start + 1 : sl.stop] = a[0] * b[1:] + b[0] * a[1:]
        return out

    def solve_product(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Solve lam o x = d per block (arrow-matrix inverse)."""
        out = np.empty_like(d)
        for kind, sl in self.slices():
            l, r = lam[sl], d[sl]
            if kind == NONNEG:
                out[sl] = r / l
            else:
                det = l[0] ** 2 - l[1:] @ l[1:]
                x0 = (l[0] * r[0] - l[1:] @ r[1:]) / det
                out[sl.start] = x0
                out[sl.start + 1 : sl.stop] = (r[1:] - x0 * l[1:]) / l[0]
        return out

    def w_squared(self, params) -> np.ndarray:
        """Dense block-diagonal W^2 (for the quasidefinite KKT system)."""
        out = np.zeros((self.total, self.total))
        for p, (kind, sl) in zip(params, self.slices()):
            if p[0] == "n":
                out[sl.start, sl.start] = p[1] ** 2
            else:
                beta, v = p[1], p[2]
                d = sl.stop - sl.start
                J = np.eye(d)
                J[1:, 1:] *= -1.0
                Wb = beta * (2.0 * np.outer(v, v) - J)
                out[sl, sl] = Wb @ Wb
        return out

    def nt_scaling(self, s: np.ndarray, z: np.ndarray):
        """Per-block NT scaling; returns list of block parameters.

        For nonneg blocks the entry is ('n', w) with W = w; for SOC blocks it
        is ('q', beta, v) with W = beta * (2 v v^T - J), v^T J v = 1, and
        J = diag(1, -I).
        """
        params = []
        for kind, sl in self.slices():
            sb, zb = s[sl], z[sl]
            if kind == NONNEG:
                params.append(("n", np.sqrt(sb[0] / zb[0])))
                continue
            nsb = np.linalg.norm(sb[1:])
            nzb = np.linalg.norm(zb[1:])
            ds = (sb[0] - nsb) * (sb[0] + nsb)
            dz = (zb[0] - nzb) * (zb[0] + nzb)
            if ds <= 0 or dz <= 0:
                raise FloatingPointError("iterate left the cone interior")
            sbar = sb / np.sqrt(ds)
            zbar = zb / np.sqrt(dz)
            gamma = np.sqrt((1.0 + sbar @ zbar) / 2.0)
            wbar = np.empty_like(sb)
            wbar[0] = (sbar[0] + zbar[0]) / (2 * gamma)
            wbar[1:] = (sbar[1:] - zbar[1:]) / (2 * gamma)
            v = wbar.copy()
            v[0] += 1.0
            v /= np.sqrt(2.0 * (wbar[0] + 1.0))
            params.append(("q", (ds / dz) ** 0.25, v))
        return params

    @staticmethod
    def _apply_soc(beta: float, v: np.ndarray, u: np.ndarray, inverse: bool) -> np.ndarray:
        # W u = beta (2 v (v.u) - J u);  W^{-1} u = (2 Jv (v.Ju) - Ju)/beta
        Ju = u.copy()
        Ju[1:] *= -1.0
        if not inverse:
            return beta * (2.0 * v * (v @ u) - Ju)
        Jv = v.copy()
        Jv[1:] *= -1.0
        return (2.0 * Jv * (v @ Ju) - Ju) / beta

    def apply_w(self, params, u: np.ndarray, inverse: bool = False) -> np.ndarray:
        out = np.empty_like(u)
        for p, (kind, sl) in zip(params, self.slices()):
            if p[0] == "n":
                w = p[1]
                out[sl] = u[sl] / w if inverse else u[sl] * w
            else:
                out[sl] = self._apply_soc(p[1], p[2], u[sl], inverse)
        return out

# ---------------------------------------------------------------------------


def _compile(program: ConicProgram):
    cones = _Cones(program.blocks)
    if cones.num_blocks == 0:
        raise ValueError("program has no cone blocks; nothing for the solver to do")
    G = np.zeros((cones.total, program.num_vars))
    h = np.zeros(cones.total)
    for blk, off in zip(program.blocks, cones.offsets):
        G[off : off + blk.dim] = -blk.A
        h[off : off + blk.dim] = blk.b
    return cones, G, h


def _initial_point(c, A, b, G, h, cones, reg):
    """Least-norm primal/dual starting points shifted into the cone interior."""
    n = len(c)
    p = len(b)
    # primal: min ||s|| s.t. Ax = b, Gx + s = h  -> normal equations
    GtG = G.T @ G + reg * np.eye(n)
    kkt = np.block([[GtG, A.T], [A, -reg * np.eye(p)]]) if p else GtG
    rhs = np.concatenate([G.T @ h, b]) if p else G.T @ h
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.zeros(n + p)
    x = sol[:n]
    s = cones.shift_inside(h - G @ x)
    # dual: least-norm (y, z) with A^T y + G^T z = -c
    stacked = np.hstack([A.T, G.T]) if p else G.T
    zy, *_ = np.linalg.lstsq(stacked, -c, rcond=None)
    y = zy[:p] if p else np.zeros(0)
    z = cones.shift_inside(zy[p:] if p else zy)
    return x, y, s, z


def solve(program: ConicProgram, config: SolverConfig | None = None) -> Solution:
    """Solve a conic program; see :class:`Status` for termination meanings."""
    cfg = config or SolverConfig()
    cones, G, h = _compile(program)
    c = program.obj
    A, b = program.eq_A, program.eq_b
    n, p = program.num_vars, len(b)

    def primal_infeas_quality(y, z):
        denom = -(float(h @ z) + (float(b @ y) if p else 0.0))
        if denom <= 0:
            return np.inf
        return np.linalg.norm((A.T @ y if p else 0.0) + G.T @ z) / denom

    def dual_infeas_quality(x, s):
        denom = -float(c @ x)
        if denom <= 0:
            return np.inf
        return max(
            np.linalg.norm(A @ x) if p else 0.0,
            np.linalg.norm(G @ x + s),
        ) / denom

    def purified_primal_certificate(y, z) -> bool:
        """Polish the dual ray by alternating projections onto the Farkas
        subspace A^T y + G^T z = 0 and the cone, then check it certifies
        primal infeasibility: z in the cone, h'z + b'y < 0."""
        stacked = np.hstack([A.T, G.T]) if p else G.T
        yz = np.concatenate([y, z]) if p else z.copy()
        norm0 = np.linalg.norm(yz)
        if norm0 <= 0:
            return False
        yz = yz / norm0
        pinv = np.linalg.pinv(stacked)

        def quality(v):
            denom = -(float(h @ v[p:]) + (float(b @ v[:p]) if p else 0.0))
            if denom <= 1e-7 * max(1.0, np.linalg.norm(v)):
                return np.inf
            return np.linalg.norm(stacked @ v) / denom

        best = np.inf
        for it in range(2000):
            yz = yz - pinv @ (stacked @ yz)
            yz[p:] = cones.project(yz[p:])
            if it % 20 == 19:
                best = min(best, quality(yz))
                if best <= 1e-8:
                    break
        best = min(best, quality(yz))
        # the projected ray has z in the cone exactly; accept a sharply
        # scaled approximate Farkas certificate
        return best <= 1e-6

    def purified_dual_certificate(x) -> bool:
        """Project the primal ray onto A x = 0 and check it certifies dual
        infeasibility: G x within the cone's negative, c'x < 0."""
        x2 = x.copy()
        if p:
            corr, *_ = np.linalg.lstsq(A, -(A @ x2), rcond=None)
            x2 = x2 + corr
        scale = np.linalg.norm(x2)
        if scale <= 0 or not cones.inside(-G @ x2, margin=-1e-9 * scale):
            return False
        denom = -float(c @ x2)
        resid = np.linalg.norm(A @ x2) if p else 0.0
        return denom > 1e-7 * scale and resid <= 1e-7 * denom

    def finish(status, x, y, z, s, it, rp, rd, rg):
        if status in (Status.NUMERICAL_FAILURE, Status.MAX_ITERATIONS):
            # a stalled run may still carry an exact Farkas ray after projection
            if rp > 10 * cfg.tol_feas and purified_primal_certificate(y, z):
                status = Status.PRIMAL_INFEASIBLE
            elif rg > 10 * cfg.tol_gap and purified_dual_certificate(x):
                status = Status.DUAL_INFEASIBLE
        zs = [z[off : off + blk.dim] for blk, off in zip(program.blocks, cones.offsets)]
        obj = float(c @ x) + program.obj_offset
        return Solution(status, x.copy(), y.copy(), zs, obj, it, rp, rd, rg)

    reg = 1e-10
    x, y, s, z = _initial_point(c, A, b, G, h, cones, reg)

    norm_b = 1.0 + np.linalg.norm(b)
    norm_h = 1.0 + np.linalg.norm(h)
    norm_c = 1.0 + np.linalg.norm(c)
    f2b = cfg.fraction_to_boundary
    rp = rd = rg = np.inf

    for it in range(cfg.max_iters):
        r_eq = (A @ x - b) if p else np.zeros(0)
        r_cone = G @ x + s - h
        r_dual = (A.T @ y if p else 0.0) + G.T @ z + c
        gap = float(s @ z)
        pobj = float(c @ x)
        dobj = -float(b @ y) - float(h @ z) if p else -float(h @ z)

        rp = max(
            np.linalg.norm(r_eq) / norm_b if p else 0.0,
            np.linalg.norm(r_cone) / norm_h,
        )
        rd = np.linalg.norm(r_dual) / norm_c
        rg = abs(pobj - dobj) / max(1.0, abs(pobj))

        if rp <= cfg.tol_feas and rd <= cfg.tol_feas and rg <= cfg.tol_gap:
            return finish(Status.OPTIMAL, x, y, z, s, it, rp, rd, rg)

        # infeasibility certificates (heuristic; quantities are scale-free)
        if primal_infeas_quality(y, z) <= cfg.tol_feas and rp > 10 * cfg.tol_feas:
            return finish(Status.PRIMAL_INFEASIBLE, x, y, z, s, it, rp, rd, rg)
        if dual_infeas_quality(x, s) <= cfg.tol_feas and rg > 10 * cfg.tol_gap:
            return finish(Status.DUAL_INFEASIBLE, x, y, z, s, it, rp, rd, rg)

        mu = gap / cones.num_blocks

        try:
            params = cones.nt_scaling(s, z)
        except FloatingPointError:
            return finish(Status.NUMERICAL_FAILURE, x, y, z, s, it, rp, rd, rg)
        lam = cones.apply_w(params, z)

        # quasidefinite KKT system in (dx, dy, dz); regularization enters the
        # factorization only and is removed by refining against the exact system
        W2 = cones.w_squared(params)
        m = cones.total
        kkt = np.zeros((n + p + m, n + p + m))
        if p:
            kkt[n : n + p, :n] = A
            kkt[:n, n : n + p] = A.T
        kkt[n + p :, :n] = G
        kkt[:n, n + p :] = G.T
        kkt[n + p :, n + p :] = -W2
        kkt_reg = kkt.copy()
        kkt_reg[np.arange(n), np.arange(n)] += reg
        kkt_reg[np.arange(n, n + p + m), np.arange(n, n + p + m)] -= reg
        try:
            lu = scipy.linalg.lu_factor(kkt_reg, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            return finish(Status.NUMERICAL_FAILURE, x, y, z, s, it, rp, rd, rg)

        def solve_kkt(rhs):
            sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
            for _ in range(3):
                resid = rhs - kkt @ sol
                if np.linalg.norm(resid) <= 1e-14 * max(1.0, np.linalg.norm(rhs)):
                    break
                sol = sol + scipy.linalg.lu_solve(lu, resid, check_finite=False)
            return sol

        def direction(d_lam):
            """Newton direction for complementarity target -d_lam."""
            wd = cones.apply_w(params, d_lam)
            rhs = np.concatenate([-r_dual, -r_eq, -r_cone + wd])
            sol = solve_kkt(rhs)
            dx = sol[:n]
            dy = sol[n : n + p]
            dz = sol[n + p :]
            ds = -r_cone - G @ dx
            return dx, dy, dz, ds

        # predictor
        dx_a, dy_a, dz_a, ds_a = direction(lam)
        alpha_a = min(
            1.0,
            cones.max_step(s, ds_a),
            cones.max_step(z, dz_a),
        )
        gap_a = float((s + alpha_a * ds_a) @ (z + alpha_a * dz_a))
        sigma = min(1.0, max(0.0, gap_a / gap)) ** 3

        # corrector (Mehrotra second order term in the scaled space); the
        # corrector is damped when it chokes the step near a degenerate face
        corr = cones.product(
            cones.apply_w(params, ds_a, inverse=True), cones.apply_w(params, dz_a)
        )
        lam2 = cones.product(lam, lam)
        center = sigma * mu * cones.identity()

        def corrected(eta):
            d_lam = cones.solve_product(lam, lam2 + eta * corr - center)
            dxyz = direction(d_lam)
            a = min(
                1.0,
                f2b * cones.max_step(s, dxyz[3]),
                f2b * cones.max_step(z, dxyz[2]),
            )
            return a, dxyz

        alpha, step = corrected(1.0)
        if alpha < min(0.5 * alpha_a, 0.2):
            for eta in (0.5, 0.0):
                a2, step2 = corrected(eta)
                if a2 > alpha:
                    alpha, step = a2, step2
        dx, dy, dz, ds = step
        if not np.isfinite(alpha) or alpha <= 1e-14:
            return finish(Status.NUMERICAL_FAILURE, x, y, z, s, it, rp, rd, rg)

        # guard against rounding in the boundary-step roots
        for _ in range(60):
            if cones.inside(s + alpha * ds) and cones.inside(z + alpha * dz):
                break
            alpha *= 0.9
        else:
            return finish(Status.NUMERICAL_FAILURE, x, y, z, s, it, rp, rd, rg)

        x = x + alpha * dx
        if p:
            y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(s)) and np.all(np.isfinite(z))):
            return finish(Status.NUMERICAL_FAILURE, x, y, z, s, it, rp, rd, rg)

    return finish(Status.MAX_ITERATIONS, x, y, z, s, cfg.max_iters, rp, rd, rg)
