"""Skeleton graph structure for the skeleton-aware network layers.

A topology has one node per joint plus a pseudo-node for the root armature
(global orientation + velocity channels).  Pooling contracts maximal chains
of degree-2 joints, which preserves the graph up to homeomorphism; repeating
it to a fixed point yields the "primal" topology.  Two skeletons can share
network latents when their primal topologies are isomorphic under an
end-effector-preserving matching.
"""

from dataclasses import dataclass

from .errors import ValidationError

JOINT_CHANNELS = 6
ARMATURE_CHANNELS = 9  # 6 orientation + 3 velocity


@dataclass(frozen=True)
class SkeletalTopology:
    """Undirected joint graph with per-node channel counts.

    Nodes 0..J-1 are the skeleton's joints in order; node `armature` (== J
    for topologies built from a skeleton) is the root-armature pseudo-node.
    """

    edges: tuple  # sorted (a, b) pairs, a < b
    channels: tuple  # per-node channel count
    armature: int
    end_effectors: tuple  # node indices, order carries the correspondence
    names: tuple

    @property
    def n_nodes(self):
        return len(self.channels)

    def __post_init__(self):
        n = self.n_nodes
        for a, b in self.edges:
            if not (0 <= a < b < n):
                raise ValidationError(f"bad edge ({a}, {b}) for {n} nodes")
        if not 0 <= self.armature < n:
            raise ValidationError("armature index out of range")
        seen = set()
        for a, b in self.edges:
            seen.update((a, b))
        if n > 1 and len(seen) != n:
            raise ValidationError("topology graph is not connected")

    def adjacency(self):
        adj = {i: [] for i in range(self.n_nodes)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {i: sorted(v) for i, v in adj.items()}

    def degree(self, node):
        return len(self.adjacency()[node])

    def neighborhoods(self, d):
        """For each node, the sorted list of nodes within graph distance d."""
        adj = self.adjacency()
        out = []
        for start in range(self.n_nodes):
            seen = {start}
            frontier = [start]
            for _ in range(d):
                frontier = [n for f in frontier for n in adj[f] if n not in seen]
                seen.update(frontier)
            out.append(tuple(sorted(seen)))
        return tuple(out)

    def rooted_parents(self):
        """Parent of each node when the graph is rooted at the armature."""
        adj = self.adjacency()
        parents = [None] * self.n_nodes
        order = [self.armature]
        seen = {self.armature}
        while order:
            node = order.pop()
            for nb in adj[node]:
                if nb not in seen:
                    seen.add(nb)
                    parents[nb] = node
                    order.append(nb)
        return tuple(parents)


def from_skeleton(skeleton):
    """Topology of a skeleton: joint tree edges plus the armature pseudo-node."""
    j = skeleton.n_joints
    edges = [(joint.parent, i) for i, joint in enumerate(skeleton.joints)
             if joint.parent is not None]
    edges.append((0, j))  # armature attaches to the root joint
    channels = (JOINT_CHANNELS,) * j + (ARMATURE_CHANNELS,)
    names = tuple(joint.name for joint in skeleton.joints) + ("armature",)
    return SkeletalTopology(tuple(sorted(edges)), channels, j,
                            tuple(skeleton.end_effectors), names)


def pool_topology(topology):
    """Contract each maximal degree-2 chain into one node.

    Each chain of interior degree-2 joints is merged, together with its
    child-side endpoint, into a single pooled node (features average over the
    merge group; see the network layer).  Returns (pooled topology, groups)
    where groups[k] lists the original nodes of pooled node k.  A topology
    with no degree-2 interior nodes pools to itself with singleton groups.
    """
    adj = topology.adjacency()
    parents = topology.rooted_parents()

    def interior(n):
        return n != topology.armature and len(adj[n]) == 2

    group_of = {}
    groups = []
    # chains start at an interior node whose parent is not interior
    for n in range(topology.n_nodes):
        if not interior(n) or (parents[n] is not None and interior(parents[n])):
            continue
        chain = [n]
        node = n
        while True:
            (child,) = [c for c in adj[node] if c != parents[node]]
            if interior(child):
                chain.append(child)
                node = child
            else:
                chain.append(child)  # child-side endpoint joins the group
                break
        k = len(groups)
        groups.append(tuple(chain))
        for m in chain:
            group_of[m] = k
    for n in range(topology.n_nodes):
        if n not in group_of:
            group_of[n] = len(groups)
            groups.append((n,))

    # renumber pooled nodes by their smallest original member for stable order
    order = sorted(range(len(groups)), key=lambda k: groups[k][0])
    rank = {k: i for i, k in enumerate(order)}
    groups = tuple(groups[k] for k in order)
    group_of = {m: rank[k] for m, k in group_of.items()}

    edges = {tuple(sorted((group_of[a], group_of[b])))
             for a, b in topology.edges if group_of[a] != group_of[b]}
    channels = tuple(max(topology.channels[m] for m in g) for g in groups)
    names = tuple("+".join(topology.names[m] for m in g) for g in groups)
    pooled = SkeletalTopology(
        tuple(sorted(edges)), channels, group_of[topology.armature],
        tuple(group_of[e] for e in topology.end_effectors), names)
    return pooled, groups


def primal_topology(topology):
    """Pool to a fixed point; returns (primal, groups mapping primal->original)."""
    current = topology
    groups = tuple((n,) for n in range(topology.n_nodes))
    while True:
        pooled, step = pool_topology(current)
        if pooled.n_nodes == current.n_nodes:
            return current, groups
        groups = tuple(tuple(sorted(m for g in sg for m in groups[g]))
                       for sg in step)
        current = pooled


def _canonical(topology, node, parents):
    adj = topology.adjacency()
    # -1 marks "not an end-effector" and keeps the labels sortable
    ee_slot = (topology.end_effectors.index(node)
               if node in topology.end_effectors else -1)
    children = [c for c in adj[node] if c != parents[node]]
    return (ee_slot, tuple(sorted(_canonical(topology, c, parents)
                                  for c in children)))


def primal_correspondence(source, target):
    """Node mapping between two primal topologies, or ValidationError.

    Topologies correspond when their armature-rooted trees are isomorphic via
    a matching that pairs end-effector k with end-effector k.  Build primal
    topologies first with `primal_topology`.
    """
    if len(source.end_effectors) != len(target.end_effectors):
        raise ValidationError(
            "skeletons are not homeomorphic: "
            f"{len(source.end_effectors)} vs {len(target.end_effectors)} end-effectors")
    if source.n_nodes != target.n_nodes:
        raise ValidationError(
            "primal topologies differ: "
            f"{source.n_nodes} vs {target.n_nodes} nodes")
    sp, tp = source.rooted_parents(), target.rooted_parents()
    mapping = {}

    def match(a, b):
        ca = _canonical(source, a, sp)
        cb = _canonical(target, b, tp)
        if ca != cb:
            raise ValidationError(
                "primal topologies are not isomorphic near "
                f"{source.names[a]!r} / {target.names[b]!r}")
        mapping[a] = b
        sa = [c for c in source.adjacency()[a] if c != sp[a]]
        sb = [c for c in target.adjacency()[b] if c != tp[b]]
        sa.sort(key=lambda c: _canonical(source, c, sp))
        sb.sort(key=lambda c: _canonical(target, c, tp))
        for x, y in zip(sa, sb):
            match(x, y)

    match(source.armature, target.armature)
    return mapping
