"""Convex hulls in low dimension and functionals of the resulting polytopes.

The hull is an incremental beneath-beyond construction with simplicial
facets; coplanar neighbours are merged at the end so that polytopes with
non-simplicial facets (cubes, polar duals) come out with their true faces.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DegenerateInput, FaceNotFound, OriginNotInterior, ParameterError

__all__ = [
    "EPS_GEOM",
    "MAX_DIM",
    "Polytope",
    "IncrementalHull",
    "convex_hull",
    "f_vector",
    "euler_characteristic",
    "polar_dual",
    "inradius",
    "circumradius",
    "facet_volumes",
    "volume",
    "t_functional",
    "simplex_volume",
    "external_angle_mc",
    "internal_angle_mc",
    "write_off",
]

EPS_GEOM = 1e-9
MAX_DIM = 6


@dataclass(frozen=True, eq=False)
class Polytope:
    """A full-dimensional convex polytope in R^d.

    Attributes:
        vertices: (n, d) array of vertex coordinates.
        normals: (m, d) unit outer facet normals.
        offsets: (m,) facet offsets, ``normals[i] @ x <= offsets[i]`` on the polytope.
        facets: sorted vertex index tuples, one per facet.
    """

    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    facets: tuple[tuple[int, ...], ...]
    _face_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for arr in (self.vertices, self.normals, self.offsets):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def is_simplicial(self) -> bool:
        return all(len(f) == self.dim for f in self.facets)

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.vertices))) if self.vertices.size else 1.0

    def contains(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Whether each row of ``x`` satisfies all facet inequalities."""
        x = np.atleast_2d(x)
        return np.all(x @ self.normals.T <= self.offsets + tol, axis=1)


# ------------------------------------------------------------------ hull ---

def _facet_normals(pts: np.ndarray) -> np.ndarray:
    """Unit normals of a stack of (d, d) vertex matrices."""
    edges = pts[:, 1:, :] - pts[:, :1, :]
    d = pts.shape[2]
    # generalised cross product by cofactor expansion
    normals = np.empty((pts.shape[0], d))
    for i in range(d):
        minor = np.delete(edges, i, axis=2)
        normals[:, i] = (-1) ** i * np.linalg.det(minor) if d > 1 else 1.0
    norm = np.linalg.norm(normals, axis=1)
    return normals / norm[:, None]


class IncrementalHull:
    """Beneath-beyond hull that accepts points in batches.

    Points inside the current hull are dropped for good; the hull only grows,
    so this is exact for the hull of every point ever added.
    """

    def __init__(self, d: int, eps: float = EPS_GEOM, max_dim: int = MAX_DIM):
        if d < 1:
            raise ParameterError(f"dimension must be >= 1, got {d}")
        if d > max_dim:
            raise ParameterError(f"dimension {d} exceeds the cap {max_dim}")
        self.d = d
        self.eps = eps
        self.points = np.empty((0, d))
        self._pending: list[int] = []
        self._scale = 0.0
        self._ready = False
        self._cap = 0
        self.normals = np.empty((0, d))
        self.offsets = np.empty(0)
        self.verts = np.empty((0, d), dtype=np.int64)
        self.alive = np.empty(0, dtype=bool)
        self._n_facets = 0
        self._ridges: dict[tuple[int, ...], list[int]] = {}
        self._interior: np.ndarray | None = None

    # -- bookkeeping
    @property
    def ready(self) -> bool:
        """True once a full-dimensional simplex has been found."""
        return self._ready

    def _tol(self) -> float:
        return self.eps * max(self._scale, 1e-300)

    def _local_tol(self, x_norm, offsets):
        # relative to the query point and the facet plane, not the whole hull:
        # a global scale hides atoms just beyond facets near the unit sphere
        return self.eps * np.maximum(np.maximum(x_norm, np.abs(offsets)), 1e-300)

    def _grow(self, extra: int) -> None:
        need = self._n_facets + extra
        if need <= self._cap:
            return
        cap = max(need, 2 * self._cap, 16)
        d = self.d
        for name, shape, dtype in (("normals", (cap, d), float), ("offsets", (cap,), float),
                                   ("verts", (cap, d), np.int64), ("alive", (cap,), bool)):
            old = getattr(self, name)
            new = np.zeros(shape, dtype=dtype)
            new[: old.shape[0]] = old
            setattr(self, name, new)
        self._cap = cap

    def _add_facets(self, vert_rows: np.ndarray) -> np.ndarray:
        k = vert_rows.shape[0]
        self._grow(k)
        ids = np.arange(self._n_facets, self._n_facets + k)
        pts = self.points[vert_rows]
        if self.d == 1:
            normals = np.where(pts[:, 0, :] >= self._interior, 1.0, -1.0)
        else:
            normals = _facet_normals(pts)
            side = np.einsum("ij,ij->i", normals, self._interior - pts[:, 0, :])
            normals[side > 0] *= -1.0
        self.normals[ids] = normals
        self.offsets[ids] = np.einsum("ij,ij->i", normals, pts[:, 0, :])
        self.verts[ids] = np.sort(vert_rows, axis=1)
        self.alive[ids] = True
        self._n_facets += k
        for fid in ids:
            row = tuple(self.verts[fid])
            for j in range(self.d):
                self._ridges.setdefault(row[:j] + row[j + 1:], []).append(int(fid))
        return ids

    def _kill(self, fid: int) -> None:
        self.alive[fid] = False
        row = tuple(self.verts[fid])
        for j in range(self.d):
            key = row[:j] + row[j + 1:]
            lst = self._ridges[key]
            lst.remove(fid)
            if not lst:
                del self._ridges[key]

    # -- construction
    def _try_initial(self) -> bool:
        idx = np.array(self._pending)
        pts = self.points[idx]
        self._scale = max(self._scale, float(np.max(np.abs(pts))))
        tol = self._tol()
        chosen = [0]
        basis = np.empty((0, self.d))
        for _ in range(self.d):
            diff = pts - pts[chosen[0]]
            resid = diff - (diff @ basis.T) @ basis if basis.size else diff
            dist = np.linalg.norm(resid, axis=1)
            j = int(np.argmax(dist))
            if dist[j] <= tol * 10:
                return False
            chosen.append(j)
            basis = np.vstack([basis, resid[j] / dist[j]])
        simplex = idx[chosen]
        self._interior = self.points[simplex].mean(axis=0)
        rows = np.array([[v for v in simplex if v != skip] for skip in simplex])
        self._add_facets(rows)
        self._ready = True
        rest = [int(i) for i in idx if i not in set(simplex.tolist())]
        self._pending = []
        self._insert_many(rest)
        return True

    def _insert_many(self, indices: Sequence[int]) -> None:
        if not indices:
            return
        idx = np.asarray(indices, dtype=np.int64)
        live = np.flatnonzero(self.alive[: self._n_facets])
        pts = self.points[idx]
        dist = pts @ self.normals[live].T - self.offsets[live]
        tol = self._local_tol(np.linalg.norm(pts, axis=1)[:, None], self.offsets[live][None, :])
        outside = idx[np.any(dist > tol, axis=1)]
        for p in outside:
            self._insert(int(p))

    def _insert(self, p: int) -> None:
        x = self.points[p]
        live = np.flatnonzero(self.alive[: self._n_facets])
        dist = self.normals[live] @ x - self.offsets[live]
        visible = live[dist > self._local_tol(np.linalg.norm(x), self.offsets[live])]
        if visible.size == 0:
            return
        vis_set = set(visible.tolist())
        horizon = []
        for fid in visible:
            row = tuple(self.verts[fid])
            for j in range(self.d):
                key = row[:j] + row[j + 1:]
                if any(g not in vis_set for g in self._ridges[key] if g != fid):
                    horizon.append(key)
        for fid in visible:
            self._kill(int(fid))
        rows = np.array([key + (p,) for key in horizon], dtype=np.int64)
        self._add_facets(rows)

    def add(self, points: np.ndarray) -> None:
        """Add a batch of points (in the order given)."""
        points = np.asarray(points, dtype=float).reshape(-1, self.d)
        if not np.all(np.isfinite(points)):
            raise ParameterError("hull input contains non-finite coordinates")
        start = self.points.shape[0]
        self.points = np.vstack([self.points, points])
        new = list(range(start, start + points.shape[0]))
        if points.size:
            self._scale = max(self._scale, float(np.max(np.abs(points))))
        if self.d == 1:
            xs = self.points[:, 0]
            self._ready = xs.size >= 2 and xs.max() - xs.min() > self._tol()
            return
        if not self._ready:
            self._pending.extend(new)
            if len(self._pending) >= self.d + 1:
                self._try_initial()
            return
        self._insert_many(new)

    # -- queries
    def live_facets(self) -> np.ndarray:
        return np.flatnonzero(self.alive[: self._n_facets])

    def min_offset(self) -> float:
        """Smallest facet offset; the inradius about 0 when positive."""
        if not self._ready:
            return -math.inf
        if self.d == 1:
            xs = self.points[:, 0]
            return float(min(-xs.min(), xs.max()))
        return float(np.min(self.offsets[self.live_facets()]))

    def polytope(self, merge: bool = True) -> Polytope:
        if not self._ready:
            raise DegenerateInput(
                f"affine hull of the {self.points.shape[0]} input points has dimension < {self.d}")
        if self.d == 1:
            return _hull_1d(self.points)
        live = self.live_facets()
        normals = self.normals[live]
        offsets = self.offsets[live]
        groups = [[i] for i in range(live.size)]
        if merge and self.d > 1:
            groups = self._merge_groups(live, normals, offsets)
        facet_sets = [sorted({int(v) for i in g for v in self.verts[live[i]]}) for g in groups]
        g_normals = np.array([normals[g].mean(axis=0) for g in groups])
        g_normals /= np.linalg.norm(g_normals, axis=1)[:, None]
        g_offsets = np.array([offsets[g].mean() for g in groups])
        used = sorted({v for s in facet_sets for v in s})
        if merge and any(len(s) > self.d for s in facet_sets):
            used = self._true_vertices(used, facet_sets, g_normals)
        remap = {v: i for i, v in enumerate(used)}
        facets = tuple(tuple(remap[v] for v in s if v in remap) for s in facet_sets)
        return Polytope(self.points[used].copy(), g_normals, g_offsets, facets)

    def _merge_groups(self, live, normals, offsets) -> list[list[int]]:
        pos = {int(f): i for i, f in enumerate(live)}
        parent = list(range(live.size))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        tol = self._tol()
        for pair in self._ridges.values():
            if len(pair) != 2:
                continue
            i, j = pos[pair[0]], pos[pair[1]]
            if (np.linalg.norm(normals[i] - normals[j]) <= 1e3 * self.eps
                    and abs(offsets[i] - offsets[j]) <= 1e3 * tol):
                parent[find(i)] = find(j)
        groups: dict[int, list[int]] = {}
        for i in range(live.size):
            groups.setdefault(find(i), []).append(i)
        return list(groups.values())

    def _true_vertices(self, used, facet_sets, g_normals) -> list[int]:
        keep = []
        for v in used:
            rows = [i for i, s in enumerate(facet_sets) if v in s]
            if np.linalg.matrix_rank(g_normals[rows], tol=1e-7) == self.d:
                keep.append(v)
        return keep


def convex_hull(points: Sequence[Sequence[float]] | np.ndarray, shuffle_seed: int | None = 0,
                eps: float = EPS_GEOM, max_dim: int = MAX_DIM, merge: bool = True) -> Polytope:
    """Convex hull of a finite point set.

    Args:
        points: (n, d) coordinates, n >= d + 1.
        shuffle_seed: insertion order is a permutation drawn from this seed;
            ``None`` keeps the input order.
        eps: relative tolerance of the orientation predicates.
        max_dim: dimension cap.
        merge: merge coplanar neighbouring facets.

    Raises:
        DegenerateInput: the affine hull is not full-dimensional.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ParameterError("points must be an (n, d) array")
    n, d = pts.shape
    if n < d + 1:
        raise DegenerateInput(f"need at least d+1 = {d + 1} points, got {n}")
    if d == 1:
        return _hull_1d(pts)
    order = np.arange(n)
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(n)
    hull = IncrementalHull(d, eps, max_dim)
    hull.add(pts[order])
    poly = hull.polytope(merge=merge)
    return poly


def _hull_1d(pts: np.ndarray) -> Polytope:
    lo, hi = float(pts[:, 0].min()), float(pts[:, 0].max())
    if hi - lo <= EPS_GEOM * max(abs(lo), abs(hi), 1e-300):
        raise DegenerateInput("all points coincide")
    return Polytope(np.array([[lo], [hi]]), np.array([[-1.0], [1.0]]),
                    np.array([-lo, hi]), ((0,), (1,)))


# ------------------------------------------------------------- faces ---

def _affine_rank(x: np.ndarray) -> int:
    if x.shape[0] <= 1:
        return 0
    diff = x[1:] - x[0]
    scale = max(float(np.max(np.abs(diff))), 1e-300)
    return int(np.linalg.matrix_rank(diff / scale, tol=1e-8))


def _is_simple(p: Polytope) -> bool:
    counts = np.zeros(p.n_vertices, dtype=np.int64)
    for f in p.facets:
        counts[list(f)] += 1
    return bool(np.all(counts == p.dim))


def _all_faces(p: Polytope) -> dict[int, set[frozenset[int]]]:
    """Proper faces keyed by dimension, as vertex-index sets."""
    if "faces" in p._face_cache:
        return p._face_cache["faces"]
    d = p.dim
    faces: dict[int, set[frozenset[int]]] = {k: set() for k in range(d)}
    if p.is_simplicial:
        for f in p.facets:
            for k in range(d):
                faces[k].update(frozenset(c) for c in itertools.combinations(f, k + 1))
    elif _is_simple(p):
        # each j-set of facets at a vertex cuts out a (d-j)-face
        incid: list[list[int]] = [[] for _ in range(p.n_vertices)]
        for i, f in enumerate(p.facets):
            for v in f:
                incid[v].append(i)
        by_key: dict[tuple[int, ...], list[int]] = {}
        for v, fs in enumerate(incid):
            for j in range(1, d + 1):
                for key in itertools.combinations(fs, j):
                    by_key.setdefault(key, []).append(v)
        for key, vs in by_key.items():
            faces[d - len(key)].add(frozenset(vs))
    else:
        current = {frozenset(f) for f in p.facets}
        seen = set(current)
        while current:
            nxt = set()
            for a, b in itertools.combinations(current, 2):
                c = a & b
                if c and c not in seen:
                    nxt.add(c)
            # intersections with facets reach faces missed by same-level pairs
            for a in current:
                for f in p.facets:
                    c = a & frozenset(f)
                    if c and c not in seen and c != a:
                        nxt.add(c)
            seen |= nxt
            current = nxt
        # dimension from the face lattice: one less than the smallest proper
        # superface; numeric ranks fail on nearly coincident vertices
        masks = {s: sum(1 << i for i in s) for s in seen}
        order = sorted(seen, key=len, reverse=True)
        dims: dict[frozenset[int], int] = {frozenset(f): d - 1 for f in p.facets}
        placed: list[tuple[int, int]] = [(masks[frozenset(f)], d - 1) for f in p.facets]
        for s in order:
            if s in dims:
                continue
            m = masks[s]
            dim = min(dt for mt, dt in placed if mt & m == m and mt != m) - 1
            dims[s] = dim
            placed.append((m, dim))
        for s, k in dims.items():
            faces[k].add(s)
    p._face_cache["faces"] = faces
    return faces


def f_vector(p: Polytope) -> tuple[int, ...]:
    """Face numbers (f_0, ..., f_{d-1})."""
    faces = _all_faces(p)
    return tuple(len(faces[k]) for k in range(p.dim))


def euler_characteristic(fv: Sequence[int]) -> int:
    """Alternating sum of the face numbers."""
    return sum((-1) ** k * f for k, f in enumerate(fv))


def _check_origin(p: Polytope) -> None:
    if not np.all(p.offsets > EPS_GEOM * p.scale):
        raise OriginNotInterior(f"origin is not strictly interior (min offset {p.offsets.min():.3e})")


def polar_dual(p: Polytope) -> Polytope:
    """Polar dual {x : <x, y> <= 1 for y in p}.

    Raises:
        OriginNotInterior: some facet offset is not positive.
    """
    _check_origin(p)
    verts = p.normals / p.offsets[:, None]
    norms = np.linalg.norm(p.vertices, axis=1)
    normals = p.vertices / norms[:, None]
    offsets = 1.0 / norms
    incid: list[list[int]] = [[] for _ in range(p.n_vertices)]
    for i, f in enumerate(p.facets):
        for v in f:
            incid[v].append(i)
    return Polytope(verts, normals, offsets, tuple(tuple(s) for s in incid))


def inradius(p: Polytope) -> float:
    """Radius of the largest origin-centred ball inside p."""
    _check_origin(p)
    return float(p.offsets.min())


def circumradius(p: Polytope) -> float:
    """Largest vertex norm."""
    return float(np.linalg.norm(p.vertices, axis=1).max())


# ---------------------------------------------------------- volumes ---

def simplex_volume(vertices: np.ndarray) -> float:
    """k-volume of a k-simplex given by k+1 vertices in R^D (Gram determinant)."""
    v = np.asarray(vertices, dtype=float)
    k = v.shape[0] - 1
    if k == 0:
        return 1.0
    e = v[1:] - v[0]
    gram = e @ e.T
    return math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(k)


def _simplex_volumes(stack: np.ndarray) -> np.ndarray:
    k = stack.shape[1] - 1
    if k == 0:
        return np.ones(stack.shape[0])
    e = stack[:, 1:, :] - stack[:, :1, :]
    gram = e @ np.swapaxes(e, 1, 2)
    return np.sqrt(np.maximum(np.linalg.det(gram), 0.0)) / math.factorial(k)


def _flat_volume(points: np.ndarray) -> float:
    """k-volume of the hull of points spanning a k-flat in R^D."""
    k = _affine_rank(points)
    if k == 0:
        return 1.0
    centre = points.mean(axis=0)
    q, _ = np.linalg.qr((points - centre).T)
    coords = (points - centre) @ q[:, :k]
    if k == 1:
        return float(coords.max() - coords.min())
    return volume(convex_hull(coords, shuffle_seed=0, merge=False))


def facet_volumes(p: Polytope) -> np.ndarray:
    """(d-1)-volumes of the facets."""
    d = p.dim
    if d == 1:
        return np.ones(p.n_facets)
    out = np.empty(p.n_facets)
    simp = [i for i, f in enumerate(p.facets) if len(f) == d]
    if simp:
        stack = p.vertices[np.array([p.facets[i] for i in simp])]
        out[simp] = _simplex_volumes(stack)
    for i, f in enumerate(p.facets):
        if len(f) != d:
            out[i] = _flat_volume(p.vertices[list(f)])
    return out


def volume(p: Polytope) -> float:
    """d-volume by summing pyramids over an interior apex."""
    centre = p.vertices.mean(axis=0)
    heights = p.offsets - p.normals @ centre
    return float(np.sum(heights * facet_volumes(p)) / p.dim)


def t_functional(p: Polytope, a: float, b: float) -> float:
    """Sum over facets of dist(0, facet)^a * vol(facet)^b."""
    if a < 0 or b < 0:
        raise ParameterError(f"need a, b >= 0, got a={a}, b={b}")
    _check_origin(p)
    vols = facet_volumes(p) if b != 0 else np.ones(p.n_facets)
    return float(np.sum(p.offsets ** a * vols ** b))


# ------------------------------------------------------------ angles ---

def _face_check(p: Polytope, face: Iterable[int]) -> tuple[tuple[int, ...], list[int]]:
    key = tuple(sorted(set(int(v) for v in face)))
    if not key or key[-1] >= p.n_vertices or key[0] < 0:
        raise FaceNotFound(f"{key} is not a vertex index set of this polytope")
    containing = [i for i, f in enumerate(p.facets) if set(key) <= set(f)]
    if not containing:
        raise FaceNotFound(f"{key} lies in no facet")
    common = set.intersection(*(set(p.facets[i]) for i in containing))
    if common != set(key):
        raise FaceNotFound(f"{key} is not a face (smallest face containing it is {sorted(common)})")
    return key, containing


def external_angle_mc(p: Polytope, face: Iterable[int], n: int,
                      rng: np.random.Generator) -> float:
    """Normalised solid angle of the normal cone of p at a face.

    Exact when the normal cone has dimension 1 or 2, Monte Carlo otherwise.
    """
    key, containing = _face_check(p, face)
    d = p.dim
    k = _affine_rank(p.vertices[list(key)])
    cone_dim = d - k
    if cone_dim == 1:
        return 0.5
    normals = p.normals[containing]
    if cone_dim == 2:
        cos = np.clip(normals @ normals.T, -1.0, 1.0)
        return float(np.arccos(cos.min()) / (2 * math.pi))
    y = p.vertices[list(key)].mean(axis=0)
    face_pts = p.vertices[list(key)]
    if k > 0:
        q, _ = np.linalg.qr((face_pts[1:] - face_pts[0]).T)
        lin = q[:, :k]
    else:
        lin = np.zeros((d, 0))
    g = rng.standard_normal((n, d))
    g -= (g @ lin) @ lin.T
    others = p.vertices - y
    inside = np.all(g @ others.T <= 1e-12 * p.scale, axis=1)
    return float(inside.mean())


def internal_angle_mc(vertices: np.ndarray, face: Iterable[int], n: int,
                      rng: np.random.Generator) -> float:
    """Normalised solid angle of the tangent cone of a simplex at a face.

    Args:
        vertices: (m+1, D) affinely independent vertices.
        face: indices of the face vertices.
        n: number of random directions.
    """
    v = np.asarray(vertices, dtype=float)
    m = v.shape[0] - 1
    key = sorted(set(int(i) for i in face))
    if not key or key[0] < 0 or key[-1] > m:
        raise FaceNotFound(f"{key} is not a face of the simplex")
    if _affine_rank(v) != m:
        raise DegenerateInput("simplex vertices are affinely dependent")
    if len(key) == m + 1:
        return 1.0
    q, _ = np.linalg.qr((v[1:] - v[0]).T)
    coords = (v - v[0]) @ q[:, :m]
    # barycentric gradients: rows of inverse of [coords | 1]^T
    mat = np.vstack([coords.T, np.ones(m + 1)])
    grads = np.linalg.inv(mat)[:, :m]
    free = [j for j in range(m + 1) if j not in key]
    u = rng.standard_normal((n, m))
    inside = np.all(u @ grads[free].T >= 0.0, axis=1)
    return float(inside.mean())


# ------------------------------------------------------------ output ---

def write_off(p: Polytope, stream: IO[str]) -> None:
    """Write the polytope in ASCII OFF format (facets as vertex index rows)."""
    stream.write("OFF\n")
    stream.write(f"{p.n_vertices} {p.n_facets} 0\n")
    for row in p.vertices:
        stream.write(" ".join(repr(float(x)) for x in row) + "\n")
    for f in p.facets:
        stream.write(f"{len(f)} " + " ".join(str(i) for i in f) + "\n")
