"""Norms and exponent bookkeeping for the truncated grid.

Every sup-type norm is an exact scan over the finitely many grid cubes;
the reported witness is the first cube attaining the sup when levels are
scanned root first and cubes row-major within a level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadExponent, ShapeMismatch
from .grid import (
    CubeAddr,
    LeafField,
    LeafMeasure,
    TreeAggregate,
    aggregate,
    check_same_root,
)
from .operators import fractional_maximal


@dataclass(frozen=True)
class SupResult:
    """Value of a cube-sup together with the cube attaining it."""

    value: float
    witness: CubeAddr

    def __float__(self) -> float:
        return self.value


def scan_sup(tables: list[np.ndarray]) -> SupResult:
    """Max over per-level cube tables; first attaining cube wins ties
    (smallest level, then smallest row-major index)."""
    best = -np.inf
    witness = CubeAddr(0, (0,) * tables[0].ndim)
    for k, table in enumerate(tables):
        mx = float(table.max())
        if mx > best:
            best = mx
            flat = int(np.argmax(table))
            witness = CubeAddr(k, tuple(int(v) for v in np.unravel_index(flat, table.shape)))
    return SupResult(best, witness)


# ---- exponent profile ----


@dataclass(frozen=True)
class ExponentProfile:
    """Exponent tuple for the multilinear trace inequalities.

    Carries (m, n, alpha, beta, p_vec, p0, r) with the joint exponent p
    given by 1/p = sum_i 1/p_i.  The shifted exponents follow the scaling
    theta = (n - beta p0) / (n - alpha p0), q = theta p, q0 = theta p0,
    which requires alpha p0 strictly below n.
    """

    m: int
    n: int
    alpha: float
    beta: float
    p_vec: tuple[float, ...]
    p0: float
    p: float | None = None
    r: float | None = None

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise BadExponent(f"need m, n >= 1, got m={self.m}, n={self.n}")
        object.__setattr__(self, "p_vec", tuple(float(v) for v in self.p_vec))
        if len(self.p_vec) != self.m:
            raise BadExponent(f"p_vec has {len(self.p_vec)} entries for m={self.m}")
        if any(not 1.0 < pi < np.inf for pi in self.p_vec):
            raise BadExponent(f"each p_i must lie in (1, inf), got {self.p_vec}")
        if not 0.0 < self.beta <= self.alpha < self.m * self.n:
            raise BadExponent(
                f"need 0 < beta <= alpha < m*n, got beta={self.beta}, alpha={self.alpha}"
            )
        inv = sum(1.0 / pi for pi in self.p_vec)
        if self.p is None:
            object.__setattr__(self, "p", 1.0 / inv)
        elif abs(1.0 / self.p - inv) > 1e-12:
            raise BadExponent(f"1/p = {1.0 / self.p} but sum of 1/p_i = {inv}")
        if not self.p <= self.p0:
            raise BadExponent(f"need p <= p0, got p={self.p}, p0={self.p0}")
        if self.n - self.alpha * self.p0 <= 1e-12:
            raise BadExponent(
                f"alpha*p0 = {self.alpha * self.p0} too close to n = {self.n}"
            )
        if self.r is not None and not self.r > 1.0:
            raise BadExponent(f"bump exponent r must exceed 1, got {self.r}")
        if self.theta < 1.0 - 1e-12:
            raise BadExponent(f"shift theta = {self.theta} below 1")

    @property
    def theta(self) -> float:
        return (self.n - self.beta * self.p0) / (self.n - self.alpha * self.p0)

    @property
    def q(self) -> float:
        return self.theta * self.p

    @property
    def q0(self) -> float:
        return self.theta * self.p0

    @property
    def p_conjugate(self) -> float:
        if self.p <= 1.0:
            raise BadExponent(f"conjugate exponent needs p > 1, got p={self.p}")
        return self.p / (self.p - 1.0)

    @classmethod
    def default(cls, m: int, n: int, low_p: bool = False) -> ExponentProfile:
        """Reference exponents: alpha = n/2, beta = n/4, and a p_vec giving
        joint p = 1.2 (or 0.9 when low_p, which needs m >= 2)."""
        alpha = 0.5 * n
        beta = 0.25 * n
        if low_p:
            if m < 2:
                raise BadExponent("low_p profile needs m >= 2 (each p_i must exceed 1)")
            p_vec = (0.9 * m,) * m
            p0 = 1.5
        elif m == 1:
            p_vec = (1.6,)
            p0 = 1.8
        else:
            p_vec = (1.2 * m,) * m
            p0 = 1.5
        return cls(m=m, n=n, alpha=alpha, beta=beta, p_vec=p_vec, p0=p0, r=2.0)

    def with_dim(self, n: int) -> ExponentProfile:
        """Same exponents rescaled to another dimension (alpha, beta scale with n)."""
        scale = n / self.n
        return ExponentProfile(
            m=self.m,
            n=n,
            alpha=self.alpha * scale,
            beta=self.beta * scale,
            p_vec=self.p_vec,
            p0=self.p0,
            r=self.r,
        )

    def to_doc(self) -> dict:
        doc = {
            "m": self.m,
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "p_vec": list(self.p_vec),
            "p0": self.p0,
            "p": self.p,
        }
        if self.r is not None:
            doc["r"] = self.r
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> ExponentProfile:
        return cls(
            m=int(doc["m"]),
            n=int(doc["n"]),
            alpha=float(doc["alpha"]),
            beta=float(doc["beta"]),
            p_vec=tuple(float(v) for v in doc["p_vec"]),
            p0=float(doc["p0"]),
            p=float(doc["p"]) if "p" in doc else None,
            r=float(doc["r"]) if "r" in doc else None,
        )


# ---- norms ----


def lebesgue_norm(f: LeafField, p: float, mu: LeafMeasure | None = None) -> float:
    """L^p norm of f over the root cube, against dx or a given measure."""
    if not p > 0:
        raise BadExponent(f"Lebesgue norm needs p > 0, got {p}")
    fp = f.power(p)
    if mu is None:
        total = aggregate(fp).total
    else:
        check_same_root(f, mu)
        total = aggregate(mu.weighted(fp)).total
    return total ** (1.0 / p)


def _scale_coefficients(root, p: float, p0: float) -> list[float]:
    # |Q|^(1/p0 - 1/p) at level k
    return [2.0 ** (-k * root.dim * (1.0 / p0 - 1.0 / p)) for k in range(root.depth + 1)]


def morrey_norm(f: LeafField, p: float, p0: float) -> SupResult:
    """Morrey norm: sup over cubes of |Q|^(1/p0) (average of f^p)^(1/p)."""
    if not 0 < p <= p0 < np.inf:
        raise BadExponent(f"Morrey norm needs 0 < p <= p0 < inf, got p={p}, p0={p0}")
    agg = aggregate(f.power(p))
    coef = _scale_coefficients(f.root, p, p0)
    tables = [
        coef[k] * agg.levels[k] ** (1.0 / p) for k in range(f.root.depth + 1)
    ]
    return scan_sup(tables)


def product_morrey_norm(fields: list[LeafField], profile: ExponentProfile) -> SupResult:
    """Product Morrey norm of an m-tuple:
    sup over cubes of |Q|^(1/p0 - 1/p) prod_i (integral of f_i^p_i)^(1/p_i)."""
    root = check_same_root(*fields)
    if len(fields) != profile.m:
        raise ShapeMismatch(f"{len(fields)} fields for m={profile.m} profile")
    aggs = [aggregate(f.power(pi)) for f, pi in zip(fields, profile.p_vec)]
    coef = _scale_coefficients(root, profile.p, profile.p0)
    tables = []
    for k in range(root.depth + 1):
        table = np.full((1 << k,) * root.dim, coef[k])
        for agg, pi in zip(aggs, profile.p_vec):
            table = table * agg.levels[k] ** (1.0 / pi)
        tables.append(table)
    return scan_sup(tables)


def radon_morrey_norm(g: LeafField, q: float, q0: float, mu: LeafMeasure) -> SupResult:
    """Morrey norm against a measure:
    sup over cubes of |Q|^(1/q0 - 1/q) (integral of g^q dmu)^(1/q)."""
    if not 0 < q <= q0 < np.inf:
        raise BadExponent(f"needs 0 < q <= q0 < inf, got q={q}, q0={q0}")
    check_same_root(g, mu)
    agg = aggregate(mu.weighted(g.power(q)))
    coef = _scale_coefficients(g.root, q, q0)
    tables = [coef[k] * agg.levels[k] ** (1.0 / q) for k in range(g.root.depth + 1)]
    return scan_sup(tables)


def maximal_testing_sup(mass: TreeAggregate, beta: float, p: float) -> SupResult:
    """sup over cubes Q with positive mass of
    (integral over Q of M_beta[mass restricted to Q]^p' dx / mass(Q))^(1/p').

    This is the localized-maximal testing functional; cubes with zero mass
    contribute 0.
    """
    if not p > 1:
        raise BadExponent(f"testing functional needs p > 1, got {p}")
    root = mass.root
    pprime = p / (p - 1.0)
    leafvol = root.leaf_volume
    best = -np.inf
    witness = root.root_cube()
    for cube in root.cubes():
        den = mass.sum_of(cube)
        if den > 0:
            local = fractional_maximal(mass, beta, localize=cube)
            block = local.grid[cube.leaf_slices(root.depth)]
            num = float(np.sum(block ** pprime)) * leafvol
            cand = (num / den) ** (1.0 / pprime)
        else:
            cand = 0.0
        if cand > best:
            best = cand
            witness = cube
    return SupResult(best, witness)


def modified_morrey_norm(f: LeafField, p: float, alpha: float) -> SupResult:
    """Modified Morrey norm built from the localized fractional maximal
    function of f^p dx; cubes where f^p integrates to zero contribute 0."""
    if not p > 1:
        raise BadExponent(f"modified Morrey norm needs p > 1, got {p}")
    if not 0 < alpha < f.root.dim:
        raise BadExponent(f"needs 0 < alpha < dim, got {alpha}")
    return maximal_testing_sup(aggregate(f.power(p)), alpha, p)
