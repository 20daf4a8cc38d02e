"""Testing constants for the trace inequalities.

All scans are exact sups over the finitely many grid cubes.  The
family-sup constant of a cube (cq_constant) additionally sups over
certified-sparse subfamilies; greedy packs high-score cubes first,
exhaustive enumerates every certified subfamily of a small subtree, and
the closed-form bound evaluates the localized-maximal functional that
dominates the family sup for the canonical kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AtomicPowerUndefined,
    BadExponent,
    BadKind,
    ComplexityRefusal,
    ZeroMeasure,
)
from .grid import CubeAddr, LeafField, LeafMeasure, RootSpec, TreeAggregate, aggregate
from .decompositions import CUBE_ORDER, containment_forest
from .norms import ExponentProfile, SupResult, maximal_testing_sup, scan_sup
from .operators import KernelWeight, fractional_maximal


@dataclass(frozen=True)
class ConstantReport:
    """Named constant with the witness cube (when a scan attains it),
    the computation mode, and the parameters that produced it."""

    name: str
    value: float
    witness: CubeAddr | None
    mode: str
    params: dict = field(default_factory=dict, repr=False)


def hedberg_exponents(profile: ExponentProfile) -> tuple[float, float, float]:
    """Shifted exponents (theta, q, q0) of the two-scale interpolation;
    validity of alpha p0 < n is enforced by the profile itself."""
    return (profile.theta, profile.q, profile.q0)


def adams_constant(mu: TreeAggregate, beta: float) -> ConstantReport:
    """sup over cubes of mu(Q) / side(Q)^beta, for 0 < beta <= dim."""
    root = mu.root
    if not 0 < beta <= root.dim:
        raise BadExponent(f"needs 0 < beta <= dim, got {beta}")
    tables = [mu.levels[k] * 2.0 ** (k * beta) for k in range(root.depth + 1)]
    res = scan_sup(tables)
    return ConstantReport(
        name="adams", value=res.value, witness=res.witness, mode="exact-scan",
        params={"beta": beta},
    )


def ks_testing_constant(mu: TreeAggregate, beta: float, p: float) -> ConstantReport:
    """Kerman-Sawyer testing constant: sup over cubes Q of positive mass
    of ((integral over Q of M_beta[mu restricted to Q]^p')/mu(Q))^(1/p')."""
    res = maximal_testing_sup(mu, beta, p)
    return ConstantReport(
        name="ks-testing", value=res.value, witness=res.witness, mode="exact-scan",
        params={"beta": beta, "p": p},
    )


def a0_constant(
    mu: LeafMeasure,
    profile: ExponentProfile,
    form: str,
    kernel: KernelWeight | None = None,
    r: float | None = None,
) -> ConstantReport:
    """Scan form of the testing constant.

    weight-a: sup side^beta (mu(Q)/|Q|)^(1/p)
    bump-b:   sup side^beta (mu^r(Q)/|Q|)^(1/(r p)), density measures only
    sparse-a: sup K(Q) |Q|^m (mu(Q)/|Q|)^(1/p)
    sparse-b: sup K(Q) |Q|^m (mu^r(Q)/|Q|)^(1/(r p))
    """
    root = mu.root
    n = root.dim
    beta, p = profile.beta, profile.p
    if form in ("bump-b", "sparse-b"):
        r = r if r is not None else profile.r
        if r is None or not r > 1:
            raise BadExponent(f"bump form needs r > 1, got {r}")
        if mu.kind != "density":
            raise AtomicPowerUndefined("bump forms need a density measure")
        agg = aggregate(mu.power(r))
        exponent = 1.0 / (r * p)
    else:
        agg = aggregate(mu)
        exponent = 1.0 / p
    if form in ("sparse-a", "sparse-b"):
        if kernel is None:
            raise BadKind(f"form {form!r} needs a kernel weight")
        front = [
            kernel.at_level(k, n) * 2.0 ** (-k * n * kernel.m)
            for k in range(root.depth + 1)
        ]
    elif form in ("weight-a", "bump-b"):
        front = [2.0 ** (-k * beta) for k in range(root.depth + 1)]
    else:
        raise BadKind(f"unknown a0 form {form!r}")
    tables = [
        front[k] * (agg.levels[k] * 2.0 ** (k * n)) ** exponent
        for k in range(root.depth + 1)
    ]
    res = scan_sup(tables)
    params = {"form": form, "beta": beta, "p": p}
    if form in ("bump-b", "sparse-b"):
        params["r"] = r
    return ConstantReport(
        name="a0", value=res.value, witness=res.witness, mode="exact-scan", params=params
    )


def ap_characteristic(
    w: LeafField, p: float | str, pstar: float = 64.0
) -> ConstantReport:
    """Muckenhoupt characteristic sup (avg w)(avg w^(-1/(p-1)))^(p-1).

    p = "infinity" evaluates the finite-p characteristic at pstar; the
    characteristic is nonincreasing in p, so this is a valid upper
    estimate of the limiting constant.  A weight vanishing on some leaf
    makes the dual average diverge and the value is reported as +inf.
    """
    if p == "infinity":
        mode = "infinity-estimate"
        p_eff = float(pstar)
    else:
        mode = "exact-scan"
        p_eff = float(p)
    if not p_eff > 1:
        raise BadExponent(f"needs p > 1, got {p_eff}")
    root = w.root
    params = {"p": p, "p_effective": p_eff}
    if np.any(w.values == 0):
        return ConstantReport(
            name="ap", value=float("inf"), witness=None, mode=mode, params=params
        )
    agg = aggregate(w)
    dual = aggregate(LeafField(root, w.values ** (-1.0 / (p_eff - 1.0))))
    tables = []
    for k in range(root.depth + 1):
        scale = 2.0 ** (k * root.dim)
        tables.append((agg.levels[k] * scale) * (dual.levels[k] * scale) ** (p_eff - 1.0))
    res = scan_sup(tables)
    return ConstantReport(
        name="ap", value=res.value, witness=res.witness, mode=mode, params=params
    )


# ---- family-sup constant ----


def _leaf_count(root: RootSpec, cube: CubeAddr) -> int:
    return 1 << (root.dim * (root.depth - cube.level))


def _is_certified(root: RootSpec, members) -> bool:
    """Canonical sparsity: each member keeps half its leaves once the
    maximal members strictly inside are removed."""
    parent, children = containment_forest(members)
    for cube in members:
        covered = sum(_leaf_count(root, kid) for kid in children[cube])
        if 2 * covered > _leaf_count(root, cube):
            return False
    return True


def _subtree_sums(tables: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Per-cube sums over the full subtree below (and including) each cube."""
    out = [None] * len(tables)
    out[-1] = tables[-1].copy()
    for k in range(len(tables) - 2, -1, -1):
        acc = None
        for off in np.ndindex(*(2,) * dim):
            block = out[k + 1][tuple(slice(o, None, 2) for o in off)]
            acc = block.copy() if acc is None else acc + block
        out[k] = tables[k] + acc
    return out


def sparse_score_sup(
    root: RootSpec,
    score_tables: list[np.ndarray],
    region: CubeAddr,
    mode: str,
    family=None,
) -> tuple[float, tuple[CubeAddr, ...]]:
    """sup over certified-sparse subfamilies of the subtree of `region`
    of the sum of per-cube scores; returns (best sum, best family).

    Scores must be nonnegative.  greedy packs cubes by descending score
    subject to the certificate; exhaustive enumerates every certified
    subfamily (refused above 15 candidate cubes); given sums the supplied
    family restricted to the region.
    """
    root.validate_cube(region)

    def score_of(cube: CubeAddr) -> float:
        return float(score_tables[cube.level][cube.index])

    if mode == "given":
        if family is None:
            raise BadKind("mode 'given' needs a family")
        members = sorted(
            {c for c in family if region.contains(c)}, key=CUBE_ORDER
        )
        return sum(score_of(c) for c in members), tuple(members)

    candidates = [
        cube
        for cube in root.cubes()
        if region.contains(cube) and score_of(cube) > 0
    ]
    if mode == "greedy":
        order = sorted(candidates, key=lambda c: (-score_of(c), c.level, c.index))
        chosen: list[CubeAddr] = []
        for cube in order:
            if _is_certified(root, chosen + [cube]):
                chosen.append(cube)
        return sum(score_of(c) for c in sorted(chosen, key=CUBE_ORDER)), tuple(
            sorted(chosen, key=CUBE_ORDER)
        )
    if mode == "exhaustive":
        n_inside = sum(1 for c in root.cubes() if region.contains(c))
        if n_inside > 15:
            raise ComplexityRefusal(
                f"exhaustive family sup over {n_inside} cubes (limit 15)"
            )
        order = sorted(candidates, key=CUBE_ORDER)
        best = 0.0
        best_family: tuple[CubeAddr, ...] = ()

        def walk(start: int, members: list[CubeAddr], total: float) -> None:
            nonlocal best, best_family
            if total > best:
                best = total
                best_family = tuple(members)
            for j in range(start, len(order)):
                trial = members + [order[j]]
                # subfamilies of certified families are certified, so
                # pruning an uncertifiable extension is exhaustive
                if _is_certified(root, trial):
                    walk(j + 1, trial, total + score_of(order[j]))

        walk(0, [], 0.0)
        return best, best_family
    raise BadKind(f"unknown family-sup mode {mode!r}")


def cq_constant(
    mu: TreeAggregate,
    kernel: KernelWeight,
    p: float,
    cube: CubeAddr,
    mode: str = "greedy",
    family=None,
) -> ConstantReport:
    """Family-sup testing constant of one cube.

    With W(S) = sum over grid cubes Q' inside S of K(Q') |Q'|^m mu(Q'),
    the constant is
    mu(Q)^(-1/p') * (sup over certified-sparse families inside Q of
    sum over members S of (W(S) |S|^(-1/p))^p')^(1/p').
    Mode "bound" instead evaluates the localized-maximal closed form that
    dominates the sup for the canonical kernel (up to a fixed factor).
    """
    if not p > 1:
        raise BadExponent(f"needs p > 1, got {p}")
    root = mu.root
    root.validate_cube(cube)
    mass = mu.sum_of(cube)
    if mass <= 0:
        raise ZeroMeasure(f"no mass on {cube}")
    pprime = p / (p - 1.0)
    if mode == "bound":
        if kernel.kind != "canonical":
            raise BadKind("closed-form bound needs the canonical kernel")
        if not kernel.alpha < root.dim:
            raise BadExponent(
                f"closed-form bound needs alpha < dim, got {kernel.alpha}"
            )
        local = fractional_maximal(mu, kernel.alpha, localize=cube)
        block = local.grid[cube.leaf_slices(root.depth)]
        num = float(np.sum(block ** pprime)) * root.leaf_volume
        value = (num / mass) ** (1.0 / pprime)
        return ConstantReport(
            name="cq", value=value, witness=cube, mode="closed-form-bound",
            params={"p": p, "alpha": kernel.alpha},
        )
    n = root.dim
    weighted = [
        mu.levels[k] * kernel.at_level(k, n) * 2.0 ** (-k * n * kernel.m)
        for k in range(root.depth + 1)
    ]
    subtree = _subtree_sums(weighted, n)
    scores = [
        (subtree[k] * 2.0 ** (k * n / p)) ** pprime for k in range(root.depth + 1)
    ]
    best, best_family = sparse_score_sup(root, scores, cube, mode, family=family)
    value = best ** (1.0 / pprime) / mass ** (1.0 / pprime)
    return ConstantReport(
        name="cq", value=value, witness=cube, mode=mode,
        params={"p": p, "family_size": len(best_family), "family": best_family},
    )


def condition_d_ratio(
    kernel: KernelWeight, profile: ExponentProfile, cube: CubeAddr
) -> float:
    """Measured decay ratio of the kernel along the ancestor chain:
    sum over strict ancestors Q' of K(Q') |Q'|^(m - 1/p0), divided by the
    same quantity at the cube itself."""
    n = cube.dim
    expo = kernel.m - 1.0 / profile.p0

    def term(level: int) -> float:
        return kernel.at_level(level, n) * 2.0 ** (-level * n * expo)

    own = term(cube.level)
    above = sum(term(k) for k in range(cube.level))
    return above / own


def condition_d_bound(profile: ExponentProfile) -> float:
    """Geometric-series bound for the canonical kernel:
    2^(alpha - n/p0) / (1 - 2^(alpha - n/p0)), valid since alpha < n/p0."""
    gap = profile.alpha - profile.n / profile.p0
    if gap >= 0:
        raise BadExponent(f"series needs alpha < n/p0, got gap {gap}")
    ratio = 2.0 ** gap
    return ratio / (1.0 - ratio)
