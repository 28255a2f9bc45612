"""Polytopic reachability for the identified system under bounded injections.

Reach sets are represented by support values along fixed planar query
directions, lifted into the stacked state space per agent, then intersected
back into per-agent position polygons.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class InputPolytope:
    """Convex polygon of admissible per-channel injections, circumscribing a disc.

    Faces are tangent half-planes <normal, u> <= offset; vertices are the
    adjacent tangent-line intersections, counter-clockwise.
    """

    vertices: np.ndarray   # (s, 2)
    normals: np.ndarray    # (s, 2) unit rows
    offsets: np.ndarray    # (s,)

    def contains(self, u, tol=FEAS_TOL):
        u = np.asarray(u, float)
        return bool(np.all(self.normals @ u <= self.offsets + tol))

    def scaled(self, alpha):
        """Polytope scaled about the origin by alpha."""
        return InputPolytope(vertices=self.vertices * alpha,
                             normals=self.normals.copy(),
                             offsets=self.offsets * alpha)


def circumscribe_ball(rho, s, seed=None, jitter=0.05) -> InputPolytope:
    """s-faced polygon circumscribing the disc of radius rho.

    Faces are tangent to the disc at angles that are uniformly spaced when
    seed is None (axis-aligned for s = 4) and randomly jittered otherwise.
    Jitter is kept small so the vertex radius stays near the regular
    polygon's rho / cos(pi/s).
    """
    if s < 3:
        raise InvalidInputError(f"face count must be >= 3, got {s}")
    if rho <= 0:
        raise InvalidInputError(f"rho must be positive, got {rho}")
    base = np.arange(s, dtype=float)
    if seed is not None:
        rng = np.random.default_rng(seed)
        base = base + rng.uniform(-jitter, jitter, size=s)
    angles = 2.0 * np.pi * base / s
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    offsets = np.full(s, float(rho))
    verts = np.empty((s, 2))
    for i in range(s):
        j = (i + 1) % s
        Aij = np.array([normals[i], normals[j]])
        verts[i] = np.linalg.solve(Aij, np.array([rho, rho]))
    return InputPolytope(vertices=verts, normals=normals, offsets=offsets)


@dataclass
class ReachSpec:
    """Support values and attaining points per (agent, query direction)."""

    directions: np.ndarray          # (m, 2) unit rows
    horizon: int
    supports: dict                  # (agent, dir_index) -> (gamma, x_star)


def reach_spec(K_seq, input_map, agents, x0, omega, directions) -> ReachSpec:
    """Support queries for several agents over shared planar directions.

    `input_map` is the per-agent 4x2 actuator matrix; each agent's reach set
    uses its own injection channel.
    """
    D = np.asarray(directions, float)
    n_agents = len(np.asarray(x0)) // 4
    supports = {}
    for a in agents:
        Bsel = embed_input_map(input_map, a, n_agents)
        lifts = np.zeros((len(D), 4 * n_agents))
        lifts[:, 4 * a] = D[:, 0]
        lifts[:, 4 * a + 2] = D[:, 1]
        gammas, points = batch_reach_supports(K_seq, Bsel, x0, omega, lifts)
        for di in range(len(D)):
            supports[(a, di)] = (float(gammas[di]), points[di])
    return ReachSpec(directions=D, horizon=len(K_seq), supports=supports)


def planar_directions(m):
    """m uniformly spaced unit directions in the plane."""
    if m < 3:
        raise InvalidInputError(f"need at least 3 directions, got {m}")
    ang = 2.0 * np.pi * np.arange(m) / m
    return np.column_stack([np.cos(ang), np.sin(ang)])


def lift_direction(d, agent, n_agents):
    """Embed a planar direction into the stacked space at an agent's position slots."""
    out = np.zeros(4 * n_agents)
    out[4 * agent] = d[0]
    out[4 * agent + 2] = d[1]
    return out


def embed_input_map(B, agent, n_agents):
    """Stacked injection map (4N x 2) hitting a single agent's actuator."""
    out = np.zeros((4 * n_agents, B.shape[1]))
    out[4 * agent:4 * agent + 4] = B
    return out


def reach_support(K_seq, Bsel, x0, omega: InputPolytope, final_dir):
    """Support value and support point of the h-step reach set along final_dir.

    Costates are back-propagated through the transposed one-step matrices from
    the query direction; the support point is then rolled forward picking, at
    each step, the polytope vertex maximizing the costate inner product. For
    the identified linear system this yields the exact support function of the
    reach set from the point {x0}.
    """
    K_seq = [np.asarray(K, float) for K in K_seq]
    h = len(K_seq)
    if h < 1:
        raise InvalidInputError("horizon must be >= 1")
    x0 = np.asarray(x0, float)
    final_dir = np.asarray(final_dir, float)
    n = x0.shape[0]
    if final_dir.shape != (n,):
        raise InvalidInputError("final_dir length does not match state")
    if abs(np.linalg.norm(final_dir) - 1.0) > 1e-6:
        raise InvalidInputError("final_dir must be a unit vector")
    Bsel = np.asarray(Bsel, float)
    if Bsel.shape[0] != n:
        raise InvalidInputError("Bsel rows do not match state dimension")
    for K in K_seq:
        if K.shape != (n, n):
            raise InvalidInputError("one-step matrix shape mismatch")

    lam = [None] * (h + 1)
    lam[h] = final_dir
    for k in range(h - 1, -1, -1):
        lam[k] = K_seq[k].T @ lam[k + 1]
    x = x0
    for k in range(h):
        w = Bsel.T @ lam[k + 1]
        u = omega.vertices[int(np.argmax(omega.vertices @ w))]
        x = K_seq[k] @ x + Bsel @ u
    return float(final_dir @ x), x


def batch_reach_supports(K_seq, Bsel, x0, omega: InputPolytope, final_dirs):
    """Vectorized `reach_support` over rows of final_dirs; returns (gammas, points)."""
    K_seq = [np.asarray(K, float) for K in K_seq]
    h = len(K_seq)
    F = np.asarray(final_dirs, float)
    lam = [None] * (h + 1)
    lam[h] = F
    for k in range(h - 1, -1, -1):
        lam[k] = lam[k + 1] @ K_seq[k]
    X = np.broadcast_to(np.asarray(x0, float), F.shape).copy()
    for k in range(h):
        W = lam[k + 1] @ Bsel
        U = omega.vertices[np.argmax(W @ omega.vertices.T, axis=1)]
        X = X @ K_seq[k].T + U @ Bsel.T
    return np.einsum("ij,ij->i", F, X), X


@dataclass
class AgentPolygon:
    """Planar position polygon of one agent's reach set.

    Vertices are the counter-clockwise boundary of the intersection of the
    supporting half-planes <d_k, p> <= gamma_k.
    """

    agent: int
    directions: np.ndarray  # (m, 2)
    supports: np.ndarray    # (m,)
    vertices: np.ndarray    # (v, 2) CCW

    def translated(self, delta):
        d = np.asarray(delta, float)
        return AgentPolygon(agent=self.agent,
                            directions=self.directions,
                            supports=self.supports + self.directions @ d,
                            vertices=self.vertices + d[None, :])


def halfspace_polygon(directions, supports):
    """CCW vertices of the bounded intersection of planar half-planes.

    Intersects all face-line pairs and keeps points feasible for every
    half-plane (FEAS_TOL slack). Raises when the directions fail to positively
    span the plane (unbounded set) or when the intersection is empty.
    """
    D = np.asarray(directions, float)
    g = np.asarray(supports, float)
    m = D.shape[0]
    if m < 3:
        raise DegenerateGeometryError("need at least 3 half-planes")
    ang = np.sort(np.arctan2(D[:, 1], D[:, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    if gaps.max() >= np.pi - 1e-12:
        raise DegenerateGeometryError("directions do not positively span the plane")

    ii, jj = np.triu_indices(m, k=1)
    a, b = D[ii], D[jj]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    ok = np.abs(det) > 1e-12
    with np.errstate(invalid="ignore", divide="ignore"):
        px = (g[ii] * b[:, 1] - g[jj] * a[:, 1]) / det
        py = (a[:, 0] * g[jj] - b[:, 0] * g[ii]) / det
    P = np.column_stack([px, py])[ok]
    if P.size:
        feas = np.all(P @ D.T <= g[None, :] + FEAS_TOL, axis=1)
        P = P[feas]
    if P.shape[0] == 0:
        raise DegenerateGeometryError("empty half-plane intersection")
    # dedupe with a scale-aware tolerance, then order counter-clockwise
    scale = max(1.0, np.abs(P).max())
    kept = P[:1]
    for p in P[1:]:
        if np.min(np.linalg.norm(kept - p, axis=1)) > 1e-9 * scale:
            kept = np.vstack([kept, p])
    P = kept
    centroid = P.mean(axis=0)
    order = np.argsort(np.arctan2(P[:, 1] - centroid[1], P[:, 0] - centroid[0]))
    return P[order]


def agent_polygon(directions, agent, supports) -> AgentPolygon:
    """Per-agent position polygon from its support values."""
    verts = halfspace_polygon(directions, supports)
    return AgentPolygon(agent=int(agent),
                        directions=np.asarray(directions, float),
                        supports=np.asarray(supports, float),
                        vertices=verts)


def _segments(vertices):
    v = np.asarray(vertices, float)
    if v.shape[0] == 1:
        return v, v
    return v, np.roll(v, -1, axis=0)


def _point_in_convex(vertices, p, tol=FEAS_TOL):
    v = np.asarray(vertices, float)
    if v.shape[0] < 3:
        return False
    a, b = _segments(v)
    cross = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
    return bool(np.all(cross >= -tol) or np.all(cross <= tol))


def _point_seg(P, s0, s1):
    # P: (k,2) points, s0/s1: (l,2) segment ends -> (k,l) distances
    d = s1 - s0
    L2 = np.einsum("ij,ij->i", d, d)
    diff = P[:, None, :] - s0[None, :, :]
    t = np.einsum("kli,li->kl", diff, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(L2[None, :] > 0, t / L2[None, :], 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = s0[None, :, :] + t[:, :, None] * d[None, :, :]
    return np.linalg.norm(P[:, None, :] - proj, axis=2)


def _segment_distances(a0, a1, b0, b1):
    """Pairwise distances between segment sets [a0->a1] x [b0->b1].

    For closed polygon rings the endpoint sets equal the vertex sets, so
    vertex-to-opposite-segment distances cover every non-crossing case.
    """
    best = np.minimum(_point_seg(a0, b0, b1), _point_seg(b0, a0, a1).T)

    # proper crossings force distance zero
    r = a1 - a0
    s = b1 - b0
    denom = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
    qp = b0[None, :, :] - a0[:, None, :]
    tnum = qp[:, :, 0] * s[None, :, 1] - qp[:, :, 1] * s[None, :, 0]
    unum = qp[:, :, 0] * r[:, None, 1] - qp[:, :, 1] * r[:, None, 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(denom != 0, tnum / denom, np.inf)
        u = np.where(denom != 0, unum / denom, np.inf)
    crossing = (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1) & np.isfinite(t) & np.isfinite(u)
    best[crossing] = 0.0
    return best


def polygon_distance(P: AgentPolygon, Q: AgentPolygon) -> float:
    """Euclidean distance between two convex polygons (0 when they intersect)."""
    vp = np.asarray(P.vertices, float)
    vq = np.asarray(Q.vertices, float)
    if vp.size == 0 or vq.size == 0:
        raise DegenerateGeometryError("empty polygon")
    if _point_in_convex(vp, vq[0]) or _point_in_convex(vq, vp[0]):
        return 0.0
    a0, a1 = _segments(vp)
    b0, b1 = _segments(vq)
    return float(_segment_distances(a0, a1, b0, b1).min())
