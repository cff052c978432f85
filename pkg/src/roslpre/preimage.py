"""Grid-based computation of preimage sets of ROSL maps with ell < 0.

For a query point x the localization set G(x, ybar) is the union over
generators y in F(x) of the closed balls

    B(x + (ybar - y) / (2 ell),  ||ybar - y|| / (2 |ell|)),

each of which passes through x. Every solution of ybar in F(.) lies in
G(x, ybar) for every x, so intersecting G over a set of base points gives
an outer approximation of the preimage: no true preimage point is ever
excluded. A brute-force oracle marks grid nodes by the direct membership
test ybar in F(node) and serves as ground truth.

Grid sweeps are embarrassingly parallel over nodes; everything here is
pure and deterministic, and the vectorized kernels produce results that do
not depend on how the work is batched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import (DEFAULT_TOL, Ball, Polytope, as_vector, contains,
                       project_onto)
from .maps import SetValuedMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Axis-aligned box discretized with the same node count per axis."""

    lower: np.ndarray
    upper: np.ndarray
    nodes_per_axis: int

    def __post_init__(self):
        lo = as_vector(self.lower)
        hi = as_vector(self.upper)
        if lo.size != hi.size:
            raise ValueError("dimension mismatch")
        if not np.all(lo < hi):
            raise ValueError("lower must be componentwise below upper")
        n = int(self.nodes_per_axis)
        if n < 2:
            raise ValueError("nodes_per_axis must be >= 2")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "nodes_per_axis", n)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (self.nodes_per_axis - 1)

    @property
    def membership_tol(self) -> float:
        """Default membership slack: half the smallest axis spacing."""
        return float(self.spacing.min()) / 2.0

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dim

    @property
    def node_count(self) -> int:
        return self.nodes_per_axis ** self.dim

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(self.lower[i], self.upper[i], self.nodes_per_axis)
                for i in range(self.dim)]

    def nodes(self) -> np.ndarray:
        """All grid nodes as an (N, d) array in C (row-major) order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(eq=False)
class GridMask:
    """Boolean membership per grid node plus provenance metadata."""

    grid: GridSpec
    member: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.member, dtype=bool)
        if m.shape != (self.grid.node_count,):
            raise ValueError("member length must equal the node count")
        self.member = m
        ybar = self.meta.get("ybar")
        if ybar is not None and as_vector(ybar).size != self.grid.dim:
            raise ValueError("meta ybar dimension mismatch")

    @property
    def count(self) -> int:
        return int(self.member.sum())

    def member_nodes(self) -> np.ndarray:
        return self.grid.nodes()[self.member]


# ---------------------------------------------------------------------------
# localization sets

def gf_balls(F: SetValuedMap, x, ybar, filtered: bool = False) -> list[Ball]:
    """One localization ball per generator of F(x).

    Unfiltered, the generators are all vertices of F(x); filtered, only the
    vertices that stay extreme after adjoining ybar. Both generator sets
    produce the same union.
    """
    x = as_vector(x)
    ybar = as_vector(ybar)
    if x.size != F.dim or ybar.size != F.dim:
        raise ValueError("dimension mismatch")
    image = F.eval(x)
    gens = gf_extreme_filter(image, ybar) if filtered else list(image.vertices)
    inv2ell = 1.0 / (2.0 * F.ell)
    balls = []
    for y in gens:
        diff = ybar - y
        balls.append(Ball(x + inv2ell * diff,
                          float(np.linalg.norm(diff)) / (2.0 * abs(F.ell))))
    return balls


def gf_extreme_filter(Fx: Polytope, ybar, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Vertices of Fx that remain extreme after adjoining ybar.

    Computed as the vertices of conv(Fx.vertices + {ybar}) that match a
    vertex of Fx; nonempty for every valid input.
    """
    ybar = as_vector(ybar)
    if ybar.size != Fx.dim:
        raise ValueError("dimension mismatch")
    hull = Polytope(np.vstack([Fx.vertices, ybar]), tol)
    kept = [v for v in Fx.vertices
            if np.abs(hull.vertices - v).max(axis=1).min() <= tol]
    if not kept:
        raise AssertionError("extreme-point filter produced an empty set")
    return kept


def _ball_union_member(gens: np.ndarray, ell: float, x: np.ndarray,
                       ybar: np.ndarray, Z: np.ndarray, tol: float) -> np.ndarray:
    """Membership of the rows of Z in the union of generator balls at x.

    The test is the support-function form of ball-union membership,

        ||w||^2 <= (<w, ybar> - sigma(w)) / ell + tol * ||w|| / |ell|

    with w = z - x. At tol = 0 this is exact membership. The slack term is
    calibrated to the ROSL inequality: any z whose image comes within tol
    of ybar satisfies the relaxed test for every base point x, so grid
    masks computed with it never exclude an oracle member found at the
    same tolerance.
    """
    W = Z - x
    wsq = np.einsum("ij,ij->i", W, W)
    centers = (ybar - gens) / (2.0 * ell)
    deficit = wsq - 2.0 * (W @ centers.T).max(axis=1)
    if tol > 0.0:
        return deficit <= tol * np.sqrt(wsq) / abs(ell)
    return deficit <= 0.0


def gf_membership(F: SetValuedMap, x, ybar, z, tol: float = 0.0) -> bool:
    """True iff z lies in the union of the localization balls at x.

    ``tol`` relaxes the test just enough to keep every z whose image
    passes within tol of ybar (see _ball_union_member); at tol = 0 the
    verdict matches the explicit gf_balls route exactly. Always true for
    z = x."""
    x = as_vector(x)
    ybar = as_vector(ybar)
    z = as_vector(z)
    if x.size != F.dim or ybar.size != F.dim or z.size != F.dim:
        raise ValueError("dimension mismatch")
    gens = F.eval(x).vertices
    return bool(_ball_union_member(gens, F.ell, x, ybar, z[None, :], float(tol))[0])


# ---------------------------------------------------------------------------
# grid approximations

def preimage_outer(F: SetValuedMap, ybar, grid: GridSpec, base_points,
                   filtered: bool = False, tol: float | None = None) -> GridMask:
    """Outer approximation: a node survives iff it lies in G(x, ybar) for
    every base point x. Supersets of base points give subset masks, and no
    node of the oracle mask is ever excluded (up to the shared tol)."""
    base = [as_vector(p) for p in base_points]
    if not base:
        raise ValueError("empty base points")
    ybar = as_vector(ybar)
    if grid.dim != F.dim or ybar.size != F.dim:
        raise ValueError("dimension mismatch")
    if any(p.size != F.dim for p in base):
        raise ValueError("dimension mismatch")
    slack = grid.membership_tol if tol is None else float(tol)
    nodes = grid.nodes()
    alive = np.ones(len(nodes), dtype=bool)
    # evaluate every image once and sweep the tightest localization sets
    # first; the intersection is order-independent, but small ball unions
    # collapse the alive set early and keep the sweep cheap
    gens_list = []
    tightness = np.empty(len(base))
    for i, x in enumerate(base):
        image = F.eval(x)
        if filtered:
            gens = np.asarray(gf_extreme_filter(image, ybar))
        else:
            gens = image.vertices
        gens_list.append(gens)
        tightness[i] = float(np.linalg.norm(ybar - gens, axis=1).min())
    idx = np.flatnonzero(alive)
    survivors = nodes[idx]
    for i in np.argsort(tightness, kind="stable"):
        if idx.size == 0:
            break
        keep = _ball_union_member(gens_list[i], F.ell, base[i], ybar,
                                  survivors, slack)
        if not keep.all():
            alive[idx[~keep]] = False
            idx = idx[keep]
            survivors = survivors[keep]
    meta = {"map": F.name, "ybar": ybar, "source": "outer", "tol": slack,
            "filtered": filtered, "base_points": np.asarray(base)}
    return GridMask(grid, alive, meta)


def preimage_oracle(F: SetValuedMap, ybar, grid: GridSpec,
                    tol: float | None = None) -> GridMask:
    """Ground truth by brute force: node z is a member iff ybar lies in
    F(z) within tol."""
    ybar = as_vector(ybar)
    if grid.dim != F.dim or ybar.size != F.dim:
        raise ValueError("dimension mismatch")
    slack = grid.membership_tol if tol is None else float(tol)
    nodes = grid.nodes()
    member = np.fromiter((contains(F.eval(z), ybar, slack) for z in nodes),
                         dtype=bool, count=len(nodes))
    meta = {"map": F.name, "ybar": ybar, "source": "oracle", "tol": slack,
            "base_points": "oracle"}
    return GridMask(grid, member, meta)


def inflate_refine(F: SetValuedMap, ybar, grid: GridSpec, eps: float,
                   iters: int, filtered: bool = False,
                   tol: float | None = None) -> GridMask:
    """Iterated base-point generator: recompute the outer mask using only
    the grid nodes within eps of the current mask, starting from the full
    grid. Exploratory; whether the fixed point equals the preimage is an
    open question and is not asserted anywhere."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    nodes = grid.nodes()
    member = np.ones(len(nodes), dtype=bool)
    mask = None
    for _ in range(iters):
        near = _nodes_within(nodes, nodes[member], float(eps))
        if not near.any():
            break
        mask = preimage_outer(F, ybar, grid, nodes[near], filtered, tol)
        member = mask.member
    if mask is None:
        raise ValueError("empty base points")
    mask.meta["base_points"] = f"inflate:{eps},{iters}"
    return mask


def _nodes_within(nodes: np.ndarray, anchors: np.ndarray, eps: float) -> np.ndarray:
    if len(anchors) == len(nodes):
        return np.ones(len(nodes), dtype=bool)
    near = np.zeros(len(nodes), dtype=bool)
    if len(anchors) == 0:
        return near
    eps_sq = eps * eps
    step = max(1, int(2e6 / max(1, len(anchors))))
    for start in range(0, len(nodes), step):
        chunk = nodes[start:start + step]
        dsq = ((chunk[:, None, :] - anchors[None, :, :]) ** 2).sum(axis=2)
        near[start:start + step] = (dsq.min(axis=1) <= eps_sq)
    return near


# ---------------------------------------------------------------------------
# localization ball check and constructive exclusion witness

def solvability_check(F: SetValuedMap, x, y_index: int, ybar,
                      oracle: GridMask) -> bool:
    """True iff the localization ball of the selected vertex, inflated by
    one grid spacing, contains a member node of the oracle mask.

    A False return means either a violated hypothesis (the map is not
    ROSL/USC as declared) or insufficient grid coverage; the failing ball
    is reported through the module logger.
    """
    x = as_vector(x)
    ybar = as_vector(ybar)
    verts = F.eval(x).vertices
    if not 0 <= int(y_index) < len(verts):
        raise ValueError("y_index out of range")
    y = verts[int(y_index)]
    center = x + (ybar - y) / (2.0 * F.ell)
    radius = float(np.linalg.norm(ybar - y)) / (2.0 * abs(F.ell))
    inflate = float(oracle.grid.spacing.max())
    members = oracle.member_nodes()
    if len(members) > 0:
        dists = np.linalg.norm(members - center, axis=1)
        if float(dists.min()) <= radius + inflate:
            return True
    logger.warning("no preimage node in localization ball center=%s radius=%s "
                   "(inflation %s)", center.tolist(), radius, inflate)
    return False


def witness_excluding_base(F: SetValuedMap, ybar, z,
                           max_delta_trials: int = 64) -> np.ndarray | None:
    """A base point x whose localization set excludes the non-preimage
    point z, or None when the scale sweep fails.

    The direction is the separating vector from projecting ybar onto F(z);
    the step delta sweeps delta0 * 2**k for k = 0, -1, +1, -2, +2, ... and
    the first x with z outside G(x, ybar) is returned.
    """
    ybar = as_vector(ybar)
    z = as_vector(z)
    image = F.eval(z)
    if contains(image, ybar, DEFAULT_TOL):
        raise ValueError("z in preimage")
    p, dist = project_onto(image, ybar)
    v = (p - ybar) / dist
    delta0 = dist / (2.0 * abs(F.ell))
    for k in _delta_exponents(max_delta_trials):
        x = z + (delta0 * 2.0 ** k) * v
        if not gf_membership(F, x, ybar, z, 0.0):
            return x
    return None


def _delta_exponents(count: int):
    yield 0
    k = 1
    produced = 1
    while produced < count:
        yield -k
        produced += 1
        if produced >= count:
            return
        yield k
        produced += 1
        k += 1


# ---------------------------------------------------------------------------
# mask comparison and export

def mask_diff_summary(outer: GridMask, oracle: GridMask) -> dict:
    """Node counts and the band width of the disagreement between an outer
    mask and the oracle mask on the same grid.

    ``max_band_distance`` is the largest distance from an extra outer node
    to the nearest oracle member node (0 when there are no extras, inf when
    the oracle is empty); ``excluded_nodes`` counts oracle members missing
    from the outer mask and must be 0 for a sound outer approximation.
    """
    if outer.grid.shape != oracle.grid.shape or outer.grid.dim != oracle.grid.dim:
        raise ValueError("masks use different grids")
    excluded = int((oracle.member & ~outer.member).sum())
    extra_idx = np.flatnonzero(outer.member & ~oracle.member)
    nodes = outer.grid.nodes()
    anchors = nodes[oracle.member]
    if extra_idx.size == 0:
        band = 0.0
    elif len(anchors) == 0:
        band = float("inf")
    else:
        extras = nodes[extra_idx]
        dsq = ((extras[:, None, :] - anchors[None, :, :]) ** 2).sum(axis=2)
        band = float(np.sqrt(dsq.min(axis=1)).max())
    spacing = float(outer.grid.spacing.max())
    return {
        "outer_nodes": outer.count,
        "oracle_nodes": oracle.count,
        "extra_nodes": int(extra_idx.size),
        "excluded_nodes": excluded,
        "max_band_distance": band,
        "band_spacings": band / spacing,
    }


def _fmt(value: float) -> str:
    return repr(float(value))


def mask_to_csv(mask: GridMask, path) -> None:
    """Write the mask as CSV: a one-line header with the grid and target,
    then one row per node with its coordinates and a 0/1 flag."""
    grid = mask.grid
    ybar = mask.meta.get("ybar")
    ybar_txt = ",".join(_fmt(v) for v in as_vector(ybar)) if ybar is not None else ""
    header = ("# dim={d} lower={lo} upper={hi} nodes={n} ybar={y} source={src}"
              .format(d=grid.dim,
                      lo=",".join(_fmt(v) for v in grid.lower),
                      hi=",".join(_fmt(v) for v in grid.upper),
                      n=grid.nodes_per_axis,
                      y=ybar_txt,
                      src=mask.meta.get("source", "outer")))
    lines = [header]
    for node, flag in zip(grid.nodes(), mask.member):
        coords = ",".join(_fmt(c) for c in node)
        lines.append(f"{coords},{1 if flag else 0}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def mask_to_pgm(mask: GridMask, path) -> None:
    """Write a 2-D mask as an ASCII PGM (P2) image, one image row per
    axis-0 index, 255 = member, 0 = outside."""
    if mask.grid.dim != 2:
        raise ValueError("PGM export requires a 2-D grid")
    n = mask.grid.nodes_per_axis
    cells = mask.member.reshape(n, n)
    lines = ["P2", f"{n} {n}", "255"]
    for row in cells:
        lines.append(" ".join("255" if flag else "0" for flag in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
