"""Maximal and fractional-integral operators on the truncated dyadic grid.

All dyadic operators are evaluated by a single root-to-leaf sweep over the
aggregate tables: at each level the per-cube candidate (or summand) is
formed, then pushed down to the children.  Outputs are leaf fields, which
is exact because every candidate cube contains whole leaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.integrate import quad

from .errors import BadExponent, BadKind, ComplexityRefusal, NegativeValue, NonFinite, ZeroMeasure
from .grid import (
    DEFAULT_EVAL_CAP,
    CubeAddr,
    LeafField,
    LeafMeasure,
    RootSpec,
    TreeAggregate,
    aggregate,
    check_same_root,
    work_cap,
)

# ---- kernel weights ----


@dataclass(frozen=True)
class KernelWeight:
    """Per-level cube weight K(Q), either canonical side^(alpha - m n) or a table."""

    m: int
    kind: str  # "canonical" | "table"
    alpha: float | None = None
    table: tuple[float, ...] | None = None

    @classmethod
    def canonical(cls, alpha: float, m: int, n: int) -> KernelWeight:
        if not 0 < alpha < m * n:
            raise BadExponent(f"canonical kernel needs 0 < alpha < m*n, got {alpha}")
        return cls(m=m, kind="canonical", alpha=alpha)

    @classmethod
    def from_table(cls, values, m: int) -> KernelWeight:
        arr = tuple(float(v) for v in values)
        if any(not math.isfinite(v) for v in arr):
            raise NonFinite("kernel table must be finite")
        if any(v < 0 for v in arr):
            raise NegativeValue("kernel table must be nonnegative")
        return cls(m=m, kind="table", table=arr)

    def at_level(self, k: int, n: int) -> float:
        if self.kind == "canonical":
            return 2.0 ** (k * (self.m * n - self.alpha))
        if k >= len(self.table):
            raise BadExponent(f"kernel table has no level {k}")
        return self.table[k]


# ---- downward sweeps ----


def _spread(parent: np.ndarray, dim: int) -> np.ndarray:
    """Broadcast a level-k table onto the level-(k+1) grid."""
    out = parent
    for ax in range(dim):
        out = np.repeat(out, 2, axis=ax)
    return out


def _sweep(per_level: list[np.ndarray], dim: int, combine) -> np.ndarray:
    """Accumulate per-cube tables along every root-to-leaf chain."""
    acc = per_level[0]
    for k in range(1, len(per_level)):
        acc = combine(_spread(acc, dim), per_level[k])
    return acc


def _product_tables(aggs: list[TreeAggregate]) -> list[np.ndarray]:
    root = aggs[0].root
    out = []
    for k in range(root.depth + 1):
        out.append(reduce(lambda a, b: a * b, (agg.levels[k] for agg in aggs)))
    return out


# ---- operators ----


def fractional_maximal(
    mu: TreeAggregate, alpha: float, localize: CubeAddr | None = None
) -> LeafField:
    """Dyadic fractional maximal function of a measure.

    At each point x the value is the sup over grid cubes R containing x of
    side(R)^(alpha - n) * mu(R).  With `localize` set, mu is replaced by
    its restriction to that cube (exact on dyadic cubes), which is the
    localized maximal function used by the testing conditions.  alpha = 0
    gives the dyadic Hardy-Littlewood maximal function.
    """
    root = mu.root
    if not 0 <= alpha < root.dim:
        raise BadExponent(f"fractional maximal needs 0 <= alpha < dim, got {alpha}")
    if localize is not None:
        mu = mu.restricted(localize)
    cand = [
        mu.levels[k] * 2.0 ** (k * (root.dim - alpha)) for k in range(root.depth + 1)
    ]
    leaf = _sweep(cand, root.dim, np.maximum)
    return LeafField(root, leaf.ravel())


def multilinear_maximal(aggs: list[TreeAggregate], alpha: float) -> LeafField:
    """m-sublinear fractional maximal function.

    sup over cubes Q containing x of side(Q)^(alpha - m n) * prod_i
    integral of f_i over Q.
    """
    root = check_same_root(*aggs)
    m = len(aggs)
    if not 0 <= alpha < m * root.dim:
        raise BadExponent(f"needs 0 <= alpha < m*dim, got {alpha}")
    prod = _product_tables(aggs)
    cand = [prod[k] * 2.0 ** (k * (m * root.dim - alpha)) for k in range(root.depth + 1)]
    leaf = _sweep(cand, root.dim, np.maximum)
    return LeafField(root, leaf.ravel())


def dyadic_integral_operator(aggs: list[TreeAggregate], kernel: KernelWeight) -> LeafField:
    """Dyadic model of the multilinear fractional integral.

    Sum over all grid cubes Q containing x of K(Q) * prod_i integral of
    f_i over Q, evaluated level by level down the tree.
    """
    root = check_same_root(*aggs)
    if kernel.m != len(aggs):
        raise BadKind(f"kernel arity {kernel.m} vs {len(aggs)} fields")
    prod = _product_tables(aggs)
    terms = [prod[k] * kernel.at_level(k, root.dim) for k in range(root.depth + 1)]
    leaf = _sweep(terms, root.dim, np.add)
    return LeafField(root, leaf.ravel())


def sparse_integral_operator(
    aggs: list[TreeAggregate], kernel: KernelWeight, family
) -> LeafField:
    """Sparse restriction of the dyadic integral operator.

    Same summands as dyadic_integral_operator, but only over the cubes of
    the given sparse family.
    """
    root = check_same_root(*aggs)
    if kernel.m != len(aggs):
        raise BadKind(f"kernel arity {kernel.m} vs {len(aggs)} fields")
    prod = _product_tables(aggs)
    terms = [np.zeros((1 << k,) * root.dim) for k in range(root.depth + 1)]
    for cube in family:
        root.validate_cube(cube)
        terms[cube.level][cube.index] = prod[cube.level][cube.index] * kernel.at_level(
            cube.level, root.dim
        )
    leaf = _sweep(terms, root.dim, np.add)
    return LeafField(root, leaf.ravel())


def mu_maximal(g: LeafField, mu: LeafMeasure) -> LeafField:
    """Maximal function of mu-averages: sup over Q containing x of the
    mu-average of g over Q, skipping cubes with mu(Q) = 0.  Points with no
    containing cube of positive mass get 0."""
    check_same_root(g, mu)
    root = g.root
    mu_agg = aggregate(mu)
    if mu_agg.total <= 0:
        raise ZeroMeasure("mu_maximal needs mu with positive total mass")
    gmu_agg = aggregate(mu.weighted(g))
    cand = []
    for k in range(root.depth + 1):
        masses = mu_agg.levels[k]
        table = np.full_like(masses, -np.inf)
        np.divide(gmu_agg.levels[k], masses, out=table, where=masses > 0)
        cand.append(table)
    leaf = _sweep(cand, root.dim, np.maximum)
    return LeafField(root, np.where(np.isfinite(leaf), leaf, 0.0).ravel())


# ---- quadrature form of the fractional integral ----


def _leaf_centers(root: RootSpec) -> np.ndarray:
    axes = [np.arange(1 << root.depth) for _ in range(root.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1).astype(np.float64)
    return (pts + 0.5) * root.leaf_side


def diagonal_cell_integral(alpha: float, m: int, h: float) -> float:
    """Exact integral of (sum_i |x - y_i|)^(alpha - m) over the m-fold
    product of the 1-d cell of width h centered at x.

    Substituting u_i = |x - y_i| gives 2^m times the integral of
    (sum u_i)^(alpha - m) over [0, h/2]^m, which has the closed form
    sum_j (-1)^(m-j) C(m,j) (j h/2)^alpha / (alpha (alpha-1) ... (alpha-m+1))
    away from the integer poles of the denominator.
    """
    if alpha <= 0:
        raise BadExponent("cell integral needs alpha > 0")
    a = h / 2.0
    if m == 1:
        return 2.0 * a ** alpha / alpha
    denom = 1.0
    pole = False
    for r in range(1, m + 1):
        factor = alpha - m + r
        if abs(factor) < 1e-9:
            pole = True
            break
        denom *= factor
    if not pole:
        total = 0.0
        for j in range(m + 1):
            total += (-1) ** (m - j) * math.comb(m, j) * (j * a) ** alpha
        return 2.0 ** m * total / denom

    # alpha hits an integer pole of the closed form: integrate the
    # one-variable reduction with the (unnormalized) Irwin-Hall density.
    fact = math.factorial(m - 1)

    def density(t: float) -> float:
        rho = 0.0
        for j in range(m + 1):
            s = t - j * a
            if s > 0:
                rho += (-1) ** j * math.comb(m, j) * s ** (m - 1)
        return rho / fact

    val, _ = quad(
        lambda t: t ** (alpha - m) * density(t),
        0.0,
        m * a,
        points=[j * a for j in range(1, m)],
        limit=200,
    )
    return 2.0 ** m * val


def kernel_integral(fields: list[LeafField], alpha: float) -> LeafField:
    """Midpoint quadrature of the multilinear fractional integral.

    At each leaf center x it sums prod_i f_i(y_i) * (sum_i |x - y_i|)^
    (alpha - m n) * h^(m n) over all leaf-center tuples (y_1, ..., y_m).
    The only singular tuple is the fully diagonal one (every y_i in x's
    own cell); in dimension 1 it is replaced by the exact cell integral of
    the kernel, in dimension >= 2 it is omitted, a documented O(h^alpha)
    bias.
    """
    root = check_same_root(*fields)
    m = len(fields)
    n = root.dim
    if not 0 < alpha < m * n:
        raise BadExponent(f"needs 0 < alpha < m*dim, got {alpha}")
    nleaf = root.leaf_count
    evals = nleaf ** (m + 1)
    cap = work_cap(DEFAULT_EVAL_CAP)
    if evals > cap:
        raise ComplexityRefusal(
            f"kernel quadrature needs {evals} evaluations, cap is {cap}"
        )
    centers = _leaf_centers(root)
    dist = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
    gamma = alpha - m * n
    vol = root.leaf_volume ** m
    vals = [f.values for f in fields]
    out = np.empty(nleaf)
    diag = diagonal_cell_integral(alpha, m, root.leaf_side) if n == 1 else 0.0
    for ix in range(nleaf):
        row = dist[ix]
        total = row
        if m > 1:
            shapes = [(1,) * i + (nleaf,) + (1,) * (m - 1 - i) for i in range(m)]
            total = reduce(np.add, (row.reshape(s) for s in shapes))
        with np.errstate(divide="ignore"):
            kern = total ** gamma
        kern[(ix,) * m] = 0.0
        contracted = kern
        for i in range(m - 1, -1, -1):
            contracted = np.tensordot(contracted, vals[i], axes=([i], [0]))
        acc = float(contracted) * vol
        if n == 1:
            acc += math.prod(float(v[ix]) for v in vals) * diag
        out[ix] = acc
    return LeafField(root, out)
