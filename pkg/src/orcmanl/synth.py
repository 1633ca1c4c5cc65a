"""Noisy samples from synthetic manifolds and ground-truth shortcut labels.

Base points are drawn uniformly with respect to arc length (curves) or surface
area (surfaces) by rejection against the speed / area element of each
parametrisation.  The perturbation is an isotropic Gaussian truncated to the
ball of radius ``tau``; both proposal schemes used below are exact rejection
samplers for that law.

Shape constants live in :data:`DEFAULT_SHAPES`.  The concentric circles, moons,
swiss rolls and S curve follow the usual toy-dataset conventions; the other
families are our own parametrisations (see each builder's docstring).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .errors import LabelingFailure, UnsupportedManifold
from ._paths import bounded_pair_distances
from .graph import NeighborGraph, build_knn_graph

__all__ = [
    "Family",
    "ManifoldSpec",
    "NoiseModel",
    "PointCloud",
    "EdgeLabelSet",
    "DEFAULT_SHAPES",
    "PAPER_NOISE",
    "sample_manifold",
    "dense_reference",
    "label_edges",
    "GeodesicReference",
]


class Family(str, enum.Enum):
    CONCENTRIC_CIRCLES = "concentric_circles"
    MIXTURE_OF_GAUSSIANS = "mixture_of_gaussians"
    MOONS = "moons"
    S_CURVE = "s_curve"
    SWISS_ROLL_1D = "swiss_roll_1d"
    CASSINI = "cassini"
    CONCENTRIC_PARABOLAS = "concentric_parabolas"
    CHAINED_TORI = "chained_tori"
    CONCENTRIC_HYPERBOLOIDS = "concentric_hyperboloids"
    HYPERBOLOID_PARABOLOID = "hyperboloid_paraboloid"
    ADJACENT_PARABOLOIDS = "adjacent_paraboloids"
    SWISS_ROLL_2D = "swiss_roll_2d"
    SWISS_HOLE_2D = "swiss_hole_2d"


def _family(name) -> Family:
    if isinstance(name, Family):
        return name
    key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
    aliases = {"swiss_roll": "swiss_roll_2d", "swiss_hole": "swiss_hole_2d", "tori": "chained_tori",
               "circles": "concentric_circles", "gaussians": "mixture_of_gaussians", "mog": "mixture_of_gaussians",
               "scurve": "s_curve", "hyperboloids": "concentric_hyperboloids",
               "paraboloids": "adjacent_paraboloids", "parabolas": "concentric_parabolas"}
    key = aliases.get(key, key)
    try:
        return Family(key)
    except ValueError:
        raise UnsupportedManifold(f"unknown manifold family {name!r}") from None


DEFAULT_SHAPES: dict[Family, dict[str, float]] = {
    Family.CONCENTRIC_CIRCLES: {"outer_radius": 1.0, "inner_radius": 0.4},
    Family.MIXTURE_OF_GAUSSIANS: {"height": 1.5, "width": 1.0, "spacing": 2.5, "extent": 1.5, "gap": 1.3},
    Family.MOONS: {"radius": 1.0, "shift_x": 1.0, "shift_y": 0.52},
    Family.S_CURVE: {"radius": 1.5, "turn": 1.65},
    Family.SWISS_ROLL_1D: {"t_min": 1.5 * np.pi, "t_max": 4.5 * np.pi},
    Family.CASSINI: {"focus": 1.0, "product": 0.98},
    Family.CONCENTRIC_PARABOLAS: {"curvature": 1.0, "gap": 0.5, "half_width": 1.5},
    Family.CHAINED_TORI: {"major_radius": 4.5, "minor_radius": 1.25},
    Family.CONCENTRIC_HYPERBOLOIDS: {"inner_waist": 1.0, "outer_waist": 2.0, "half_height": 2.0},
    Family.HYPERBOLOID_PARABOLOID: {"waist": 1.0, "half_height": 1.5, "curvature": 0.5, "gap": 1.0},
    Family.ADJACENT_PARABOLOIDS: {"curvature": 0.5, "gap": 1.0, "radius": 2.5},
    Family.SWISS_ROLL_2D: {"t_min": 1.5 * np.pi, "t_max": 4.5 * np.pi, "height": 21.0},
    Family.SWISS_HOLE_2D: {"t_min": 1.5 * np.pi, "t_max": 4.5 * np.pi, "height": 21.0},
}

#: (tau, sigma) pairs used for the pruning benchmarks.
PAPER_NOISE: dict[Family, tuple[float, float]] = {
    Family.CONCENTRIC_CIRCLES: (0.28, 0.09),
    Family.MIXTURE_OF_GAUSSIANS: (0.45, 0.18),
    Family.MOONS: (0.19, 0.20),
    Family.S_CURVE: (0.52, 0.28),
    Family.CASSINI: (0.135, 0.05),
    Family.CHAINED_TORI: (0.75, 0.4),
    Family.CONCENTRIC_HYPERBOLOIDS: (0.25, 0.20),
    Family.HYPERBOLOID_PARABOLOID: (0.48, 0.40),
    Family.ADJACENT_PARABOLOIDS: (0.70, 0.60),
    Family.SWISS_ROLL_2D: (2.25, 6.25),
}


@dataclass(frozen=True)
class ManifoldSpec:
    family: Family
    shape_params: dict = field(default_factory=dict)

    def __post_init__(self):
        fam = _family(self.family)
        object.__setattr__(self, "family", fam)
        params = dict(DEFAULT_SHAPES[fam])
        unknown = set(self.shape_params) - set(params)
        if unknown:
            raise ValueError(f"unknown shape parameters for {fam.value}: {sorted(unknown)}")
        params.update({k: float(v) for k, v in self.shape_params.items()})
        if any(not val > 0 for val in params.values()):
            raise ValueError("shape parameters must be strictly positive")
        object.__setattr__(self, "shape_params", params)

    @property
    def intrinsic_dim(self) -> int:
        return _BUILDERS[self.family][0]

    @property
    def ambient_dim(self) -> int:
        return self.intrinsic_dim + 1

    def to_dict(self) -> dict:
        return {"family": self.family.value, "shape_params": dict(self.shape_params)}


@dataclass(frozen=True)
class NoiseModel:
    tau: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if not (self.tau >= 0 and self.sigma >= 0):
            raise ValueError("tau and sigma must be nonnegative")

    @classmethod
    def paper(cls, family) -> "NoiseModel":
        return cls(*PAPER_NOISE[_family(family)])


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    base_points: np.ndarray
    component_id: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        base = np.asarray(self.base_points, dtype=float)
        comp = np.asarray(self.component_id, dtype=np.int64)
        if pts.ndim != 2 or pts.shape != base.shape or comp.shape != (pts.shape[0],):
            raise ValueError("points, base_points and component_id shapes disagree")
        if pts.shape[0] < 1 or not np.all(np.isfinite(pts)) or not np.all(np.isfinite(base)):
            raise ValueError("a point cloud needs at least one finite point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "base_points", base)
        object.__setattr__(self, "component_id", comp)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def scaled(self, factor: float) -> "PointCloud":
        return PointCloud(self.points * factor, self.base_points * factor, self.component_id)


# --------------------------------------------------------------------------
# parametrisations: each builder returns a list of components
#   (map, lower bounds, upper bounds, keep-mask or None)
# map takes an (n, m) parameter array and returns (n, D) points.

_Component = tuple[Callable[[np.ndarray], np.ndarray], np.ndarray, np.ndarray, Callable | None]


def _circle(cx, cy, r, t0=0.0, t1=2 * np.pi, sign=1.0):
    def f(p):
        t = p[:, 0]
        return np.column_stack([cx + r * np.cos(t), cy + sign * r * np.sin(t)])
    return f, np.array([t0]), np.array([t1]), None


def _concentric_circles(q):
    return [_circle(0, 0, q["outer_radius"]), _circle(0, 0, q["inner_radius"])]


def _mixture_of_gaussians(q):
    """Graph ``(x, f(x))`` of a three-bump Gaussian mixture profile and a copy lifted by ``gap``.

    A single graph curve has no pairs that are close in the plane but far along
    the curve without its noise tube overlapping itself, so the second copy
    supplies the nearby branch.  The steep flanks bring the two tubes closest.
    """
    h, w, s, ext, gap = q["height"], q["width"], q["spacing"], q["extent"], q["gap"]
    centers = np.array([-s, 0.0, s])
    heights = h * np.array([1.0, 0.6, 1.0])

    def profile(lift):
        def f(p):
            x = p[:, 0]
            y = (heights[None, :] * np.exp(-0.5 * ((x[:, None] - centers[None, :]) / w) ** 2)).sum(1)
            return np.column_stack([x, y + lift])
        return f, np.array([-s - ext]), np.array([s + ext]), None
    return [profile(0.0), profile(gap)]


def _moons(q):
    r, sx, sy = q["radius"], q["shift_x"], q["shift_y"]
    return [_circle(0, 0, r, 0, np.pi), _circle(sx, sy, r, 0, np.pi, sign=-1.0)]


def _s_curve(q):
    """Planar S: two circular arcs of ``turn * pi`` radians each, meeting at the origin."""
    r, turn = q["radius"], q["turn"]

    def f(p):
        t = p[:, 0]
        return np.column_stack([r * np.sin(t), r * np.sign(t) * (np.cos(t) - 1.0)])
    return [(f, np.array([-turn * np.pi]), np.array([turn * np.pi]), None)]


def _swiss_roll_1d(q):
    def f(p):
        t = p[:, 0]
        return np.column_stack([t * np.cos(t), t * np.sin(t)])
    return [(f, np.array([q["t_min"]]), np.array([q["t_max"]]), None)]


def _cassini(q):
    """Cassini ovals ``|z - a| |z + a| = b^2``; for ``b < a`` two loops around the foci."""
    a, b = q["focus"], q["product"]
    if b >= a:
        def f(p):
            th = p[:, 0]
            r2 = a * a * np.cos(2 * th) + np.sqrt(b ** 4 - a ** 4 * np.sin(2 * th) ** 2)
            r = np.sqrt(r2)
            return np.column_stack([r * np.cos(th), r * np.sin(th)])
        return [(f, np.array([0.0]), np.array([2 * np.pi]), None)]

    def loop(sign):
        # z^2 = a^2 + b^2 e^{i phi}; each branch of the square root is one loop
        def f(p):
            phi = p[:, 0]
            z = sign * np.sqrt(a * a + b * b * np.exp(1j * phi))
            return np.column_stack([z.real, z.imag])
        return f, np.array([-np.pi]), np.array([np.pi]), None
    return [loop(1.0), loop(-1.0)]


def _concentric_parabolas(q):
    c, g, hw = q["curvature"], q["gap"], q["half_width"]

    def para(offset):
        def f(p):
            x = p[:, 0]
            return np.column_stack([x, c * x * x + offset])
        return f, np.array([-hw]), np.array([hw]), None
    return [para(0.0), para(g)]


def _chained_tori(q):
    """Two interlocked tori: one in the xy-plane, the other in the xz-plane shifted by R."""
    big, small = q["major_radius"], q["minor_radius"]

    def torus(shift, vertical):
        def f(p):
            u, v = p[:, 0], p[:, 1]
            ring = big + small * np.cos(v)
            a, b, c = ring * np.cos(u), ring * np.sin(u), small * np.sin(v)
            if vertical:
                return np.column_stack([a + shift, c, b])
            return np.column_stack([a, b, c])
        return f, np.array([0.0, 0.0]), np.array([2 * np.pi, 2 * np.pi]), None
    return [torus(0.0, False), torus(big, True)]


def _hyperboloid(waist, half_height, dx=0.0):
    def f(p):
        z, th = p[:, 0], p[:, 1]
        r = np.sqrt(waist * waist + z * z)
        return np.column_stack([dx + r * np.cos(th), r * np.sin(th), z])
    return f, np.array([-half_height, 0.0]), np.array([half_height, 2 * np.pi]), None


def _concentric_hyperboloids(q):
    h = q["half_height"]
    return [_hyperboloid(q["inner_waist"], h), _hyperboloid(q["outer_waist"], h)]


def _paraboloid_cap(curvature, radius, apex, direction, dx=0.0):
    def f(p):
        rho, th = p[:, 0], p[:, 1]
        return np.column_stack([dx + rho * np.cos(th), rho * np.sin(th),
                                apex + direction * curvature * rho * rho])
    return f, np.array([0.0, 0.0]), np.array([radius, 2 * np.pi]), None


def _hyperboloid_paraboloid(q):
    """Hyperboloid around the z axis; an upward paraboloid cup perched above its top rim."""
    w, h, c, g = q["waist"], q["half_height"], q["curvature"], q["gap"]
    rim = np.sqrt(w * w + h * h)
    return [_hyperboloid(w, h), _paraboloid_cap(c, rim, h + g, 1.0)]


def _adjacent_paraboloids(q):
    """Two paraboloids opening away from each other with apexes ``gap`` apart."""
    c, g, r = q["curvature"], q["gap"], q["radius"]
    return [_paraboloid_cap(c, r, 0.5 * g, 1.0), _paraboloid_cap(c, r, -0.5 * g, -1.0)]


def _roll_map(p):
    t, h = p[:, 0], p[:, 1]
    return np.column_stack([t * np.cos(t), h, t * np.sin(t)])


def _swiss_roll_2d(q):
    return [(_roll_map, np.array([q["t_min"], 0.0]), np.array([q["t_max"], q["height"]]), None)]


def _swiss_hole_2d(q):
    t0, t1, hh = q["t_min"], q["t_max"], q["height"]

    def keep(p):
        # rectangular hole in the middle of the unrolled sheet
        in_t = (p[:, 0] > t0 + 0.4 * (t1 - t0)) & (p[:, 0] < t0 + 0.6 * (t1 - t0))
        in_h = (p[:, 1] > hh / 3) & (p[:, 1] < 2 * hh / 3)
        return ~(in_t & in_h)
    return [(_roll_map, np.array([t0, 0.0]), np.array([t1, hh]), keep)]


_BUILDERS: dict[Family, tuple[int, Callable]] = {
    Family.CONCENTRIC_CIRCLES: (1, _concentric_circles),
    Family.MIXTURE_OF_GAUSSIANS: (1, _mixture_of_gaussians),
    Family.MOONS: (1, _moons),
    Family.S_CURVE: (1, _s_curve),
    Family.SWISS_ROLL_1D: (1, _swiss_roll_1d),
    Family.CASSINI: (1, _cassini),
    Family.CONCENTRIC_PARABOLAS: (1, _concentric_parabolas),
    Family.CHAINED_TORI: (2, _chained_tori),
    Family.CONCENTRIC_HYPERBOLOIDS: (2, _concentric_hyperboloids),
    Family.HYPERBOLOID_PARABOLOID: (2, _hyperboloid_paraboloid),
    Family.ADJACENT_PARABOLOIDS: (2, _adjacent_paraboloids),
    Family.SWISS_ROLL_2D: (2, _swiss_roll_2d),
    Family.SWISS_HOLE_2D: (2, _swiss_hole_2d),
}


def _volume_element(fmap, params: np.ndarray, h: float = 1e-6) -> np.ndarray:
    cols = []
    for d in range(params.shape[1]):
        step = np.zeros(params.shape[1])
        step[d] = h
        cols.append((fmap(params + step) - fmap(params - step)) / (2 * h))
    jac = np.stack(cols, axis=2)          # (n, D, m)
    gram = np.einsum("ndi,ndj->nij", jac, jac)
    return np.sqrt(np.maximum(np.linalg.det(gram), 0.0))


def _envelope(fmap, lo, hi, keep) -> float:
    m = lo.size
    per_axis = 4001 if m == 1 else 301
    axes = [np.linspace(lo[d], hi[d], per_axis) for d in range(m)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    vol = _volume_element(fmap, grid)
    return 1.25 * float(vol.max())


def _sample_base(spec: ManifoldSpec, n: int, rng: np.random.Generator):
    _, build = _BUILDERS[spec.family]
    comps = build(spec.shape_params)
    m = spec.intrinsic_dim
    bounds = np.array([_envelope(f, lo, hi, keep) for f, lo, hi, keep in comps])
    lows = np.array([lo for _, lo, _, _ in comps])
    spans = np.array([hi - lo for _, lo, hi, _ in comps])
    weight = spans.prod(axis=1) * bounds
    weight = weight / weight.sum()
    base_parts, comp_parts = [], []
    have = 0
    while have < n:
        batch = max(64, 2 * (n - have))
        which = rng.choice(len(comps), size=batch, p=weight)
        params = lows[which] + spans[which] * rng.random((batch, m))
        threshold = rng.random(batch) * bounds[which]
        pts = np.empty((batch, spec.ambient_dim))
        ok = np.zeros(batch, dtype=bool)
        for c, (fmap, _, _, keep) in enumerate(comps):
            sel = np.flatnonzero(which == c)
            if sel.size == 0:
                continue
            vol = _volume_element(fmap, params[sel])
            if np.any(vol > bounds[c]):
                raise RuntimeError("volume-element envelope too small; refine the grid")
            hit = threshold[sel] < vol
            if keep is not None:
                hit &= keep(params[sel])
            ok[sel] = hit
            pts[sel] = fmap(params[sel])
        base_parts.append(pts[ok])
        comp_parts.append(which[ok])
        have += int(ok.sum())
    base = np.concatenate(base_parts)[:n]
    comp = np.concatenate(comp_parts)[:n].astype(np.int64)
    return base, comp


def _truncated_gaussian(n: int, dim: int, tau: float, sigma: float, rng: np.random.Generator):
    out = np.zeros((n, dim))
    if tau == 0 or sigma == 0 or n == 0:
        return out
    filled = 0
    while filled < n:
        need = n - filled
        batch = max(64, 2 * need)
        if sigma <= tau:
            xi = rng.normal(scale=sigma, size=(batch, dim))
            ok = np.einsum("ij,ij->i", xi, xi) <= tau * tau
        else:
            # uniform in the ball, thinned by the Gaussian density (acceptance >= e^-1/2)
            direction = rng.normal(size=(batch, dim))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = tau * rng.random(batch) ** (1.0 / dim)
            xi = direction * radius[:, None]
            ok = rng.random(batch) < np.exp(-0.5 * (radius / sigma) ** 2)
        take = xi[ok][:need]
        out[filled:filled + take.shape[0]] = take
        filled += take.shape[0]
    return out


def sample_manifold(spec: ManifoldSpec, noise: NoiseModel, n: int, seed: int) -> PointCloud:
    """Draw ``n`` noisy points near the manifold; deterministic in ``(spec, noise, n, seed)``."""
    if not isinstance(spec, ManifoldSpec):
        spec = ManifoldSpec(_family(spec))
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    base, comp = _sample_base(spec, n, rng)
    xi = _truncated_gaussian(n, spec.ambient_dim, noise.tau, noise.sigma, rng)
    return PointCloud(base + xi, base, comp)


def dense_reference(spec: ManifoldSpec, n_ref: int, seed: int) -> PointCloud:
    """Noiseless sample used to estimate geodesic distances."""
    return sample_manifold(spec, NoiseModel(0.0, 0.0), n_ref, seed)


class EdgeLabel(str, enum.Enum):
    GOOD = "good"
    SHORTCUT = "shortcut"


@dataclass(frozen=True, eq=False)
class EdgeLabelSet:
    """Per-edge shortcut flags aligned with the graph's edge order.

    ``ratio`` is geodesic over Euclidean length; ``inf`` means the endpoints sit on
    different components or the geodesic exceeds the search radius.
    """

    u: np.ndarray
    v: np.ndarray
    shortcut: np.ndarray
    ratio: np.ndarray
    ratio_threshold: float
    reference_size: int
    slack: float = 0.0

    @property
    def labels(self) -> dict[tuple[int, int], EdgeLabel]:
        return {(int(a), int(b)): EdgeLabel.SHORTCUT if s else EdgeLabel.GOOD
                for a, b, s in zip(self.u, self.v, self.shortcut)}

    @property
    def n_shortcut(self) -> int:
        return int(self.shortcut.sum())

    def label_of(self, a: int, b: int) -> EdgeLabel:
        a, b = min(a, b), max(a, b)
        hit = np.flatnonzero((self.u == a) & (self.v == b))
        if hit.size == 0:
            raise KeyError((a, b))
        return EdgeLabel.SHORTCUT if self.shortcut[hit[0]] else EdgeLabel.GOOD


def _reference_graph(ref_pts, ref_comp, k_ref: int) -> NeighborGraph:
    """``k_ref``-NN graph of the reference plus short bridging chords.

    A plain kNN chain along a curve occasionally breaks at a locally sparse
    spot; on a closed curve the break disconnects nothing, it just sends
    geodesics the long way round.  A spanning forest cannot repair that (it
    already spans the loop without the gap), so every within-component pair
    closer than twice the longest spanning-forest edge is added as well.  The
    largest gap on a loop is the one edge the forest skips, and it exceeds
    twice the runner-up only with negligible probability.
    """
    base = build_knn_graph(ref_pts, k_ref)
    wide = build_knn_graph(ref_pts, min(2 * k_ref, ref_pts.shape[0] - 1))
    wide = wide.subgraph(ref_comp[wide.u] == ref_comp[wide.v])
    forest = csgraph.minimum_spanning_tree(wide.adjacency())
    reach = 2.0 * float(forest.data.max()) if forest.nnz else 0.0
    chords = cKDTree(ref_pts).query_pairs(reach, output_type="ndarray")
    u = np.concatenate([base.u, chords[:, 0]])
    v = np.concatenate([base.v, chords[:, 1]])
    keep = ref_comp[u] == ref_comp[v]
    pairs = np.unique(np.sort(np.stack([u[keep], v[keep]], axis=1), axis=1), axis=0)
    w = np.maximum(np.linalg.norm(ref_pts[pairs[:, 0]] - ref_pts[pairs[:, 1]], axis=1), 1e-12)
    return NeighborGraph.from_edges(ref_pts.shape[0], pairs[:, 0], pairs[:, 1], w)


class GeodesicReference:
    """A dense noiseless sample prepared for repeated geodesic lookups.

    Holds the stitched reference graph and a KD-tree over the sample, so many
    graphs can be labeled against one reference without rebuilding either.
    """

    def __init__(self, reference: PointCloud, k_ref: int = 10):
        self.cloud = reference
        self.k_ref = int(k_ref)
        self.graph = _reference_graph(reference.points, reference.component_id, self.k_ref)
        self.tree = cKDTree(reference.points)
        n_cc, _ = csgraph.connected_components(self.graph.adjacency(), directed=False)
        n_comp = np.unique(reference.component_id).size
        if n_cc != n_comp:
            raise LabelingFailure(
                f"reference graph splits into {n_cc} pieces across {n_comp} "
                "manifold components; increase n_ref")
        self.median_edge = float(np.median(self.graph.weight)) if self.graph.n_edges else 0.0


def label_edges(graph: NeighborGraph, cloud: PointCloud, reference,
                ratio_threshold: float = 3.0, k_ref: int = 10,
                anchor: str = "projection", slack: float | None = None) -> EdgeLabelSet:
    """Flag shortcut edges against a dense noiseless reference sample.

    Each endpoint is anchored to its nearest reference point: the nearest one to
    the noisy point itself (``anchor="projection"``, a discrete orthogonal
    projection) or to its noiseless base point (``anchor="base"``).  An edge is a
    shortcut when its base points, or its anchors, lie on different components,
    or when the geodesic between the anchors, estimated by shortest paths in a
    ``k_ref``-NN graph of the reference, exceeds ``ratio_threshold`` times the
    edge's Euclidean length plus ``slack``.  The slack absorbs the reference's
    own discretization, which otherwise dominates the ratio of edges shorter
    than the reference spacing; it defaults to twice the median
    reference-graph edge length.

    ``reference`` is a :class:`PointCloud` or a prepared
    :class:`GeodesicReference` (whose own ``k_ref`` then applies).
    """
    if anchor not in ("projection", "base"):
        raise ValueError("anchor must be 'projection' or 'base'")
    if not isinstance(reference, GeodesicReference):
        reference = GeodesicReference(reference, k_ref)
    ref_graph = reference.graph
    ref_comp = reference.cloud.component_id

    query = cloud.points if anchor == "projection" else cloud.base_points
    _, nearest = reference.tree.query(query)
    au, av = nearest[graph.u], nearest[graph.v]
    length = graph.weight
    ratio = np.full(graph.n_edges, np.inf)
    same_comp = ref_comp[au] == ref_comp[av]
    ratio[same_comp & (au == av)] = 0.0

    todo = np.flatnonzero(same_comp & (au != av))
    if slack is None:
        slack = 2.0 * reference.median_edge
    limit = ratio_threshold * length[todo] + slack
    geo = bounded_pair_distances(ref_graph, au[todo], av[todo], limit)
    shortcut = np.ones(graph.n_edges, dtype=bool)
    shortcut[same_comp & (au == av)] = False
    shortcut[todo] = ~(geo <= limit)
    shortcut |= cloud.component_id[graph.u] != cloud.component_id[graph.v]
    ratio[todo] = geo / length[todo]
    return EdgeLabelSet(graph.u, graph.v, shortcut, ratio, float(ratio_threshold), reference.cloud.n,
                        float(slack))
