"""Hierarchical density-based clustering over cosine distance.

Used to group a passage's surface-form vectors into themes. The steps:

1. Pairwise cosine distances (1 - cos) and per-point core distances
   (distance to the k-th nearest neighbor, self included, with
   k = min_cluster_size).
2. Mutual reachability distance max(core_i, core_j, d_ij) and a minimum
   spanning tree over it (Prim).
3. A single-linkage dendrogram from the sorted MST edges, condensed so
   only components of at least ``min_cluster_size`` points count as
   clusters; smaller split-offs "fall out" as candidate noise.
4. Cluster selection by excess of mass: a cluster's stability is the sum
   of (lambda_leave - lambda_birth) over its points and child clusters,
   with lambda = 1/distance; a parent is kept when its stability reaches
   the total of its children's. The root is eligible, so a single
   cluster covering everything is a legal outcome.

Points under no selected cluster are noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_LAMBDA = 1e12


@dataclass(frozen=True)
class ClusterSet:
    """Disjoint clusters of input indices plus the leftover noise set."""

    clusters: tuple[tuple[int, ...], ...]
    noise: tuple[int, ...]

    def label_of(self, index: int) -> int:
        for label, members in enumerate(self.clusters):
            if index in members:
                return label
        return -1


def cosine_distance_matrix(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    unit = vectors / norms
    dist = 1.0 - unit @ unit.T
    np.fill_diagonal(dist, 0.0)
    return np.maximum(dist, 0.0)


def density_cluster(vectors: np.ndarray, min_cluster_size: int = 3) -> ClusterSet:
    """Cluster row vectors; every returned cluster has at least
    ``min_cluster_size`` members."""
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    if n == 0:
        return ClusterSet(clusters=(), noise=())
    if n < min_cluster_size:
        return ClusterSet(clusters=(), noise=tuple(range(n)))

    dist = cosine_distance_matrix(vectors)
    k = min(min_cluster_size, n)
    core = np.sort(dist, axis=1)[:, k - 1]
    reach = np.maximum(dist, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(reach, 0.0)

    edges = _prim_mst(reach)
    dendrogram = _single_linkage(n, edges)
    clusters, noise = _condense_and_select(n, dendrogram, min_cluster_size)
    clusters = tuple(
        tuple(sorted(members)) for members in sorted(clusters, key=min)
    )
    return ClusterSet(clusters=clusters, noise=tuple(sorted(noise)))


def _prim_mst(reach: np.ndarray) -> list[tuple[float, int, int]]:
    """Minimum spanning tree edges (weight, a, b) over a dense matrix."""
    n = reach.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best_dist = np.full(n, np.inf)
    best_from = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best_dist[0] = -np.inf
    np.minimum(best_dist, reach[0], out=best_dist)
    best_dist[0] = -np.inf
    edges: list[tuple[float, int, int]] = []
    for _ in range(n - 1):
        candidates = np.where(~in_tree, best_dist, np.inf)
        nxt = int(np.argmin(candidates))
        edges.append((float(best_dist[nxt]), int(best_from[nxt]), nxt))
        in_tree[nxt] = True
        closer = reach[nxt] < best_dist
        closer &= ~in_tree
        best_dist[closer] = reach[nxt][closer]
        best_from[closer] = nxt
    return edges


@dataclass
class _DendroNode:
    left: int
    right: int
    distance: float
    size: int


def _single_linkage(n: int, edges: list[tuple[float, int, int]]) -> list[_DendroNode]:
    """Union-find merge of MST edges in ascending weight order. Nodes
    0..n-1 are leaves; node n+i is the i-th merge."""
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    nodes: list[_DendroNode] = []
    next_id = n
    for weight, a, b in sorted(edges, key=lambda e: e[0]):
        ra, rb = find(a), find(b)
        left_size = 1 if ra < n else nodes[ra - n].size
        right_size = 1 if rb < n else nodes[rb - n].size
        nodes.append(_DendroNode(left=ra, right=rb, distance=weight, size=left_size + right_size))
        parent[ra] = next_id
        parent[rb] = next_id
        next_id += 1
    return nodes


def _leaves_under(node_id: int, n: int, nodes: list[_DendroNode]) -> list[int]:
    if node_id < n:
        return [node_id]
    stack = [node_id]
    out: list[int] = []
    while stack:
        cur = stack.pop()
        if cur < n:
            out.append(cur)
        else:
            stack.append(nodes[cur - n].left)
            stack.append(nodes[cur - n].right)
    return out


@dataclass
class _CondensedCluster:
    birth_lambda: float
    points: list[tuple[int, float]]  # (leaf, lambda at which it fell out)
    children: list[int]  # condensed cluster ids
    child_birth: list[tuple[int, float]]  # (size, birth lambda) per child
    member_leaves: list[int]

    def stability(self) -> float:
        total = sum(lam - self.birth_lambda for _, lam in self.points)
        total += sum(size * (lam - self.birth_lambda) for size, lam in self.child_birth)
        return total


def _lambda_of(distance: float) -> float:
    if distance <= 1.0 / _MAX_LAMBDA:
        return _MAX_LAMBDA
    return 1.0 / distance


def _condense_and_select(
    n: int, nodes: list[_DendroNode], min_cluster_size: int
) -> tuple[list[list[int]], list[int]]:
    if not nodes:
        # Single point; n >= min_cluster_size was checked, so n == 1 and
        # min_cluster_size <= 1 never reaches here.
        return [], list(range(n))
    root = n + len(nodes) - 1
    root_birth = _lambda_of(nodes[-1].distance)
    condensed: list[_CondensedCluster] = []

    def new_cluster(birth: float, scope: int) -> int:
        condensed.append(
            _CondensedCluster(
                birth_lambda=birth,
                points=[],
                children=[],
                child_birth=[],
                member_leaves=_leaves_under(scope, n, nodes),
            )
        )
        return len(condensed) - 1

    root_cluster = new_cluster(root_birth, root)
    # Walk the dendrogram top-down; each frame is (dendro node, condensed
    # cluster currently collecting its points).
    stack: list[tuple[int, int]] = [(root, root_cluster)]
    while stack:
        node_id, cluster_id = stack.pop()
        if node_id < n:
            # Isolated leaf inside a cluster scope: it left at the lambda
            # of the merge that isolated it, handled by the parent below.
            continue
        node = nodes[node_id - n]
        lam = _lambda_of(node.distance)
        sides = []
        for child in (node.left, node.right):
            size = 1 if child < n else nodes[child - n].size
            sides.append((child, size))
        big = [(c, s) for c, s in sides if s >= min_cluster_size]
        if len(big) == 2:
            for child, size in sides:
                child_id = new_cluster(lam, child)
                condensed[cluster_id].children.append(child_id)
                condensed[cluster_id].child_birth.append((size, lam))
                stack.append((child, child_id))
        else:
            for child, size in sides:
                if size >= min_cluster_size:
                    stack.append((child, cluster_id))
                else:
                    for leaf in _leaves_under(child, n, nodes):
                        condensed[cluster_id].points.append((leaf, lam))

    # Excess-of-mass selection, bottom-up; children were appended after
    # their parents so reversed order visits children first.
    subtree: dict[int, float] = {}
    selected: dict[int, bool] = {}
    for cid in range(len(condensed) - 1, -1, -1):
        cluster = condensed[cid]
        child_total = sum(subtree[c] for c in cluster.children)
        own = cluster.stability()
        if own >= child_total:
            selected[cid] = True
            subtree[cid] = own
        else:
            selected[cid] = False
            subtree[cid] = child_total

    # Keep selected clusters whose ancestors are all unselected.
    final: list[list[int]] = []
    claimed: set[int] = set()

    def walk(cid: int) -> None:
        if selected[cid]:
            final.append(condensed[cid].member_leaves)
            claimed.update(condensed[cid].member_leaves)
            return
        for child in condensed[cid].children:
            walk(child)

    walk(root_cluster)
    noise = [leaf for leaf in range(n) if leaf not in claimed]
    return final, noise
