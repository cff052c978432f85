"""Set-valued maps with a declared relaxed one-sided Lipschitz constant.

A map F: R^d -> (convex compact sets) is ell-relaxed one-sided Lipschitz
(ROSL) when for all x, x2 and every y in F(x) some y2 in F(x2) satisfies
<y2 - y, x2 - x> <= ell * ||x2 - x||^2. Everything here assumes ell < 0
(contraction). The checkers work by sampling: they can refute the property
on the given samples but a pass is never a proof.

The worst violation over an ordered pair reduces to support functions:
with u = x2 - x, the largest over y in F(x) of the best-response inner
product equals sigma_{F(x)}(-u) - sigma_{F(x2)}(-u), because the inner
objective is linear in y2 and the outer one linear in y.
"""

from __future__ import annotations

import bisect
import dataclasses
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import DEFAULT_TOL, Polytope, as_vector, project_onto, support


@dataclass(frozen=True, eq=False)
class SetValuedMap:
    """Evaluable map x -> Polytope with declared ROSL constant ell < 0.

    ``usc_flag`` records declared upper semicontinuity; it is never
    verified. Evaluators must be pure and re-entrant.
    """

    dim: int
    ell: float
    evaluator: Callable[[np.ndarray], Polytope]
    usc_flag: bool = True
    name: str = "custom"

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))
        ell = float(self.ell)
        if not np.isfinite(ell) or ell >= 0.0:
            raise ValueError("ell must be finite and < 0")
        object.__setattr__(self, "ell", ell)

    def eval(self, x) -> Polytope:
        x = as_vector(x)
        if x.size != self.dim:
            raise ValueError("dimension mismatch")
        image = self.evaluator(x)
        if not isinstance(image, Polytope) or image.dim != self.dim:
            raise ValueError("evaluator returned wrong dimension")
        return image

    def with_ell(self, ell: float) -> "SetValuedMap":
        return dataclasses.replace(self, ell=float(ell))


def piecewise1d(breakpoints, branches, ell: float, usc_flag: bool = True,
                name: str = "piecewise1d") -> SetValuedMap:
    """1-D map with interval images, affine in x on each branch.

    ``branches`` has length 2*len(breakpoints) + 1 and alternates region /
    breakpoint / region / ... entries. Each entry is ((lo0, lo1), (hi0, hi1))
    and evaluates to the interval [lo0 + lo1*x, hi0 + hi1*x].
    """
    bps = [float(b) for b in breakpoints]
    if any(not np.isfinite(b) for b in bps):
        raise ValueError("non-finite breakpoint")
    if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
        raise ValueError("breakpoints must be strictly increasing")
    if len(branches) != 2 * len(bps) + 1:
        raise ValueError("need 2*len(breakpoints)+1 branches")
    coeffs = []
    for (lo0, lo1), (hi0, hi1) in branches:
        coeffs.append((float(lo0), float(lo1), float(hi0), float(hi1)))

    def evaluate(x: np.ndarray) -> Polytope:
        t = float(x[0])
        k = bisect.bisect_left(bps, t)
        if k < len(bps) and bps[k] == t:
            idx = 2 * k + 1
        else:
            idx = 2 * k
        lo0, lo1, hi0, hi1 = coeffs[idx]
        lo = lo0 + lo1 * t
        hi = hi0 + hi1 * t
        if lo > hi:
            raise ValueError("branch yields empty interval")
        return Polytope([[lo], [hi]])

    return SetValuedMap(1, ell, evaluate, usc_flag, name)


def example34() -> SetValuedMap:
    """Built-in 1-D interval map, ROSL with ell = -1.

    Images: [1, 2] - x for x < 0, the interval [-2, 2] at x = 0, and
    [-2, -1] - x for x > 0. The preimage of 0 is exactly {0}.
    """
    return piecewise1d(
        breakpoints=[0.0],
        branches=[((1.0, -1.0), (2.0, -1.0)),
                  ((-2.0, 0.0), (2.0, 0.0)),
                  ((-2.0, -1.0), (-1.0, -1.0))],
        ell=-1.0,
        name="example34",
    )


def affine_polytope(b, M, P: Polytope, ell: float | None = None,
                    usc_flag: bool = True, name: str = "affine_polytope",
                    tol: float = DEFAULT_TOL) -> SetValuedMap:
    """Map F(x) = b - M x + P with M symmetric positive definite.

    The natural ROSL constant is -lambda_min(M); pass ``ell`` to declare a
    different (still negative) value, e.g. to exercise the checker.
    """
    b = as_vector(b)
    M = np.asarray(M, dtype=float)
    d = b.size
    if M.shape != (d, d):
        raise ValueError("M must be d x d")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite matrix entries")
    scale = max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > tol * scale:
        raise ValueError("M must be symmetric")
    lam_min = float(np.linalg.eigvalsh(M).min())
    if lam_min <= 0.0:
        raise ValueError("M must be positive definite")
    if P.dim != d:
        raise ValueError("dimension mismatch")
    if ell is None:
        ell = -lam_min
    base = P.vertices

    def evaluate(x: np.ndarray) -> Polytope:
        # translation preserves extreme points and lexicographic order
        return Polytope._from_canonical(base + (b - M @ x))

    return SetValuedMap(d, ell, evaluate, usc_flag, name)


def rosl_gap(F: SetValuedMap, x, x2) -> float:
    """Worst ROSL defect over the ordered pair (x, x2); <= 0 means the
    inequality holds for every y in F(x) with its best response in F(x2).
    Coincident points return 0 by convention."""
    x = as_vector(x)
    x2 = as_vector(x2)
    if x.size != F.dim or x2.size != F.dim:
        raise ValueError("dimension mismatch")
    u = x2 - x
    usq = float(u @ u)
    if usq == 0.0:
        return 0.0
    return support(F.eval(x), -u) - support(F.eval(x2), -u) - F.ell * usq


@dataclass(frozen=True)
class RoslReport:
    holds: bool
    worst_gap: float
    worst_pair: tuple[np.ndarray, np.ndarray]
    note: str = "sampled falsification only; holds=True is not a proof"


def check_rosl(F: SetValuedMap, samples, tol: float = DEFAULT_TOL) -> RoslReport:
    """Scan all ordered sample pairs (both orders) for ROSL violations."""
    pts = [as_vector(s) for s in samples]
    distinct = _count_distinct(pts)
    if distinct < 2:
        raise ValueError("need at least 2 distinct samples")
    worst = -np.inf
    worst_pair = (pts[0], pts[0])
    for i, xi in enumerate(pts):
        for j, xj in enumerate(pts):
            if i == j or np.array_equal(xi, xj):
                continue
            gap = rosl_gap(F, xi, xj)
            if gap > worst:
                worst = gap
                worst_pair = (xi, xj)
    return RoslReport(holds=bool(worst <= tol), worst_gap=float(worst),
                      worst_pair=worst_pair)


def estimate_ell(F: SetValuedMap, samples) -> float:
    """Largest ROSL constant consistent with the sampled pairs (the sampled
    supremum of the pairwise ratio); at least the true constant for genuinely
    ROSL maps."""
    pts = [as_vector(s) for s in samples]
    if _count_distinct(pts) < 2:
        raise ValueError("all samples coincident")
    best = -np.inf
    for i, xi in enumerate(pts):
        for j, xj in enumerate(pts):
            if i == j:
                continue
            u = xj - xi
            usq = float(u @ u)
            if usq == 0.0:
                continue
            ratio = (support(F.eval(xi), -u) - support(F.eval(xj), -u)) / usq
            best = max(best, ratio)
    return float(best)


def usc_defect(F: SetValuedMap, x, x2) -> float:
    """One-sided Hausdorff defect max_{v in F(x2)} dist(v, F(x)).

    Diagnostic only: small values on sampled pairs are consistent with the
    declared upper semicontinuity flag, never a verification of it.
    """
    Fx = F.eval(x)
    worst = 0.0
    for v in F.eval(x2).vertices:
        worst = max(worst, project_onto(Fx, v)[1])
    return worst


def _count_distinct(pts: list[np.ndarray]) -> int:
    seen: list[np.ndarray] = []
    for p in pts:
        if not any(np.array_equal(p, q) for q in seen):
            seen.append(p)
    return len(seen)


# ---------------------------------------------------------------------------
# map-definition files (JSON)

_COMMON_KEYS = {"dim", "ell", "family"}
_FAMILY_KEYS = {
    "example34": set(),
    "affine_polytope": {"b", "M", "P_vertices"},
    "piecewise1d": {"branches"},
}


def load_map(source) -> SetValuedMap:
    """Build a map from a definition file path or an equivalent dict.

    Exact schema: {"dim": int, "ell": float, "family": <name>, ...family
    payload...}. Unknown fields are rejected.
    """
    if isinstance(source, dict):
        obj = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError("map definition must be a JSON object")
    family = obj.get("family")
    if family not in _FAMILY_KEYS:
        raise ValueError(f"unknown family {family!r}")
    allowed = _COMMON_KEYS | _FAMILY_KEYS[family]
    for key in obj:
        if key not in allowed:
            raise ValueError(f"unknown field {key!r}")
    for key in allowed:
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    dim = obj["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise ValueError("dim must be an integer")
    ell = obj["ell"]
    if not isinstance(ell, (int, float)) or isinstance(ell, bool):
        raise ValueError("ell must be a number")
    ell = float(ell)

    if family == "example34":
        if dim != 1:
            raise ValueError("example34 requires dim = 1")
        return example34().with_ell(ell)
    if family == "affine_polytope":
        P = Polytope(obj["P_vertices"])
        F = affine_polytope(obj["b"], obj["M"], P, ell=ell)
        if F.dim != dim:
            raise ValueError("dim does not match payload")
        return F
    return _load_piecewise1d(obj, dim, ell)


def _load_piecewise1d(obj, dim: int, ell: float) -> SetValuedMap:
    if dim != 1:
        raise ValueError("piecewise1d requires dim = 1")
    raw = obj["branches"]
    if not isinstance(raw, list) or len(raw) % 2 == 0:
        raise ValueError("branches must be a list of odd length")
    breakpoints = []
    branches = []
    for pos, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ValueError("branch entries must be objects")
        is_point = pos % 2 == 1
        allowed = {"x", "lo", "hi"} if is_point else {"lo", "hi"}
        for key in entry:
            if key not in allowed:
                raise ValueError(f"unknown field {key!r} in branch")
        for key in allowed:
            if key not in entry:
                raise ValueError(f"missing field {key!r} in branch")
        if is_point:
            breakpoints.append(float(entry["x"]))
        lo = entry["lo"]
        hi = entry["hi"]
        if len(lo) != 2 or len(hi) != 2:
            raise ValueError("branch lo/hi must be [c0, c1] pairs")
        branches.append(((float(lo[0]), float(lo[1])),
                         (float(hi[0]), float(hi[1]))))
    return piecewise1d(breakpoints, branches, ell)
