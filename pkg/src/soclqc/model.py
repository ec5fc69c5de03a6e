"""Conic program representation and second-order cone modeling helpers.

A program is a linear objective over real variables subject to linear
equalities and a list of cone blocks.  Each block is an affine map of the
variables into R^{d},

    (head, tail) = (c^T x + d0, A x + b),

required to satisfy either ``head >= 0`` (nonnegative block, no tail) or
``head >= ||tail||_2`` (second-order block).  Quadratic objectives and
hyperbolic constraints are lowered onto this form with the classical
transforms of Lobo et al. (1998).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NONNEG = "nonneg"
SOC = "soc"


class DimensionMismatch(ValueError):
    """Shapes of supplied matrices/vectors are inconsistent."""


class NotPositiveDefinite(ValueError):
    """A matrix required to be positive definite is not."""


class LinExpr:
    """Sparse affine expression ``sum_i coeff[i] * x_i + const``.

    Expressions stay valid when more variables are appended to the builder,
    which the S-lemma emitters rely on.
    """

    __slots__ = ("terms", "const")

    def __init__(self, terms: dict[int, float] | None = None, const: float = 0.0):
        self.terms = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def variable(index: int) -> "LinExpr":
        return LinExpr({int(index): 1.0})

    @staticmethod
    def constant(value: float) -> "LinExpr":
        return LinExpr({}, value)

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, LinExpr):
            for i, v in other.terms.items():
                out.terms[i] = out.terms.get(i, 0.0) + v
            out.const += other.const
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({i: -v for i, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other if isinstance(other, LinExpr) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, scalar):
        s = float(scalar)
        return LinExpr({i: s * v for i, v in self.terms.items()}, s * self.const)

    __rmul__ = __mul__

    def to_row(self, num_vars: int) -> tuple[np.ndarray, float]:
        row = np.zeros(num_vars)
        for i, v in self.terms.items():
            if i >= num_vars:
                raise DimensionMismatch(
                    f"expression references variable {i} but program has {num_vars}"
                )
            row[i] += v
        return row, self.const

    def max_index(self) -> int:
        return max(self.terms, default=-1)

    def __repr__(self):
        parts = [f"{v:+g}*x{i}" for i, v in sorted(self.terms.items())]
        parts.append(f"{self.const:+g}")
        return "LinExpr(" + " ".join(parts) + ")"


def as_expr(value) -> LinExpr:
    if isinstance(value, LinExpr):
        return value
    return LinExpr.constant(float(value))


@dataclass(frozen=True)
class ConeBlock:
    """One cone constraint ``(A @ x + b) in cone``; row 0 is the head."""

    kind: str
    A: np.ndarray
    b: np.ndarray
    tag: str = ""

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b

    def violation(self, x: np.ndarray) -> float:
        """Amount by which x falls outside the cone (0 when feasible)."""
        s = self.evaluate(x)
        if self.kind == NONNEG:
            return max(0.0, -float(s[0]))
        return max(0.0, float(np.linalg.norm(s[1:]) - s[0]))


@dataclass(frozen=True)
class ConicProgram:
    """Immutable conic program ``min c^T x + offset`` subject to
    ``eq_A x = eq_b`` and a list of cone blocks.
    """

    num_vars: int
    obj: np.ndarray
    obj_offset: float
    eq_A: np.ndarray
    eq_b: np.ndarray
    blocks: tuple[ConeBlock, ...]

    def __post_init__(self):
        if self.obj.shape != (self.num_vars,):
            raise DimensionMismatch("objective length != num_vars")
        if self.eq_A.shape[1] != self.num_vars or self.eq_A.shape[0] != self.eq_b.shape[0]:
            raise DimensionMismatch("equality constraint shapes inconsistent")
        for blk in self.blocks:
            if blk.A.shape[1] != self.num_vars or blk.A.shape[0] != blk.b.shape[0]:
                raise DimensionMismatch("cone block shapes inconsistent")
            if blk.kind == NONNEG and blk.dim != 1:
                raise DimensionMismatch("nonnegative block must be scalar")
            if blk.kind == SOC and blk.dim < 2:
                raise DimensionMismatch("second-order block needs a norm part")

    def max_violation(self, x: np.ndarray) -> float:
        """Worst constraint violation of a candidate point."""
        v = 0.0
        if self.eq_A.shape[0]:
            v = float(np.max(np.abs(self.eq_A @ x - self.eq_b)))
        for blk in self.blocks:
            v = max(v, blk.violation(x))
        return v

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.obj @ x) + self.obj_offset


class ConicProgramBuilder:
    """Incrementally assembles a :class:`ConicProgram`."""

    def __init__(self):
        self._num_vars = 0
        self._obj = LinExpr()
        self._eqs: list[LinExpr] = []
        self._blocks: list[tuple[str, list[LinExpr], str]] = []

    @property
    def num_vars(self) -> int:
        return self._num_vars

    def add_var(self) -> int:
        self._num_vars += 1
        return self._num_vars - 1

    def add_vars(self, n: int) -> np.ndarray:
        idx = np.arange(self._num_vars, self._num_vars + n)
        self._num_vars += n
        return idx

    def var(self, index: int) -> LinExpr:
        if not 0 <= index < self._num_vars:
            raise DimensionMismatch(f"no variable {index}")
        return LinExpr.variable(index)

    def var_exprs(self, indices) -> list[LinExpr]:
        return [self.var(int(i)) for i in np.atleast_1d(indices)]

    def set_objective(self, expr: LinExpr) -> None:
        self._obj = as_expr(expr).copy()

    def add_to_objective(self, expr) -> None:
        self._obj = self._obj + as_expr(expr)

    def add_eq(self, expr: LinExpr) -> None:
        """Constrain ``expr == 0``."""
        self._eqs.append(as_expr(expr))

    def add_eqs(self, exprs: Iterable[LinExpr]) -> None:
        for e in exprs:
            self.add_eq(e)

    def add_nonneg(self, expr: LinExpr, tag: str = "") -> int:
        """Constrain ``expr >= 0`` as a degenerate cone block."""
        self._blocks.append((NONNEG, [as_expr(expr)], tag))
        return len(self._blocks) - 1

    def add_soc(self, head: LinExpr, tail: Sequence[LinExpr], tag: str = "") -> int:
        """Constrain ``||tail||_2 <= head``."""
        tail = [as_expr(t) for t in tail]
        if not tail:
            raise DimensionMismatch("second-order block needs a nonempty norm part")
        self._blocks.append((SOC, [as_expr(head)] + tail, tag))
        return len(self._blocks) - 1

    def build(self) -> ConicProgram:
        n = self._num_vars
        c, offset = self._obj.to_row(n)
        if self._eqs:
            rows = [e.to_row(n) for e in self._eqs]
            eq_A = np.array([r for r, _ in rows])
            eq_b = np.array([-d for _, d in rows])
        else:
            eq_A = np.zeros((0, n))
            eq_b = np.zeros(0)
        blocks = []
        for kind, exprs, tag in self._blocks:
            rows = [e.to_row(n) for e in exprs]
            A = np.array([r for r, _ in rows])
            b = np.array([d for _, d in rows])
            blocks.append(ConeBlock(kind, A, b, tag))
        return ConicProgram(n, c, offset, eq_A, eq_b, tuple(blocks))


def hyperbolic_to_soc(builder: ConicProgramBuilder, x, y, z, tag: str = "") -> int:
    """Constrain ``||x||^2 <= y * z`` with ``y, z >= 0``.

    ``x`` may be a single affine expression or a sequence of them; ``y`` and
    ``z`` are scalar affine expressions.  Encoded as the single second-order
    block ``||(2x, y - z)|| <= y + z``.
    """
    xs = [as_expr(x)] if isinstance(x, (LinExpr, int, float)) else [as_expr(e) for e in x]
    y = as_expr(y)
    z = as_expr(z)
    return builder.add_soc(y + z, [2.0 * e for e in xs] + [y - z], tag=tag)


def quadratic_epigraph(
    builder: ConicProgramBuilder,
    F: np.ndarray,
    g: np.ndarray,
    x_exprs: Sequence[LinExpr],
    denom,
    t,
    tag: str = "",
) -> int:
    """Constrain ``||F x + g||^2 / denom <= t`` where ``denom > 0`` is
    guaranteed by the caller (usually the constant 1).

    Encoded as ``||(2(Fx+g), t - denom)|| <= t + denom``.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    g = np.atleast_1d(np.asarray(g, dtype=float))
    if F.shape[0] != g.shape[0] or F.shape[1] != len(x_exprs):
        raise DimensionMismatch("quadratic epigraph: F, g, x shapes inconsistent")
    denom = as_expr(denom)
    t = as_expr(t)
    rows = []
    for i in range(F.shape[0]):
        r = LinExpr.constant(g[i])
        for j, xe in enumerate(x_exprs):
            if F[i, j] != 0.0:
                r = r + F[i, j] * xe
        rows.append(2.0 * r)
    return builder.add_soc(t + denom, rows + [t - denom], tag=tag)


def cholesky_factor(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor of a positive-definite matrix.

    Raises :class:`NotPositiveDefinite` when the smallest pivot falls at or
    below ``1e-12 * ||M||``.
    """
    M = np.asarray(M, dtype=float)
    try:
        L = np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite") from exc
    scale = np.linalg.norm(M)
    if np.min(np.diag(L)) ** 2 <= 1e-12 * scale:
        raise NotPositiveDefinite(f"{name} has a near-zero Cholesky pivot")
    return L


def psd_sqrt_factor(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Matrix F with F^T F = M for symmetric PSD M, via eigendecomposition.

    Eigenvalues in [-tol*||M||, 0) are clamped to zero; anything lower raises.
    """
    M = 0.5 * (np.asarray(M, dtype=float) + np.asarray(M, dtype=float).T)
    vals, vecs = np.linalg.eigh(M)
    floor = -tol * max(1.0, np.linalg.norm(M))
    if np.min(vals) < floor:
        raise NotPositiveDefinite("matrix has a significantly negative eigenvalue")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def add_quadratic_cost(
    builder: ConicProgramBuilder,
    M: np.ndarray,
    x_exprs: Sequence[LinExpr],
    require_pd: bool = True,
    tag: str = "obj_quad",
) -> LinExpr:
    """Add an epigraph variable t with ``x^T M x <= t`` and return t.

    ``M`` must be positive definite when ``require_pd`` (factored by
    Cholesky); otherwise PSD suffices (eigenvalue square root).
    """
    if require_pd:
        F = cholesky_factor(M, "quadratic cost matrix").T
    else:
        F = psd_sqrt_factor(M)
    t = builder.var(builder.add_var())
    quadratic_epigraph(builder, F, np.zeros(F.shape[0]), x_exprs, 1.0, t, tag=tag)
    return t


def pin_variables(program: ConicProgram, indices, values) -> ConicProgram:
    """New program with extra equalities fixing the given variables."""
    indices = np.atleast_1d(np.asarray(indices, dtype=int))
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if indices.shape != values.shape:
        raise DimensionMismatch("pin_variables: indices and values differ in length")
    rows = np.zeros((len(indices), program.num_vars))
    rows[np.arange(len(indices)), indices] = 1.0
    return ConicProgram(
        program.num_vars,
        program.obj,
        program.obj_offset,
        np.vstack([program.eq_A, rows]),
        np.concatenate([program.eq_b, values]),
        program.blocks,
    )
