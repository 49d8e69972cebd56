import csv
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, TextIO, Tuple

import networkx as nx
import numpy as np

from .config import NetworkParams, PopulationParams, ReputationParams
from .exceptions import InvalidAccessError

logger = logging.getLogger(__name__)

# weight given to an edge whose clamped normal draw is zero twice
WEIGHT_FLOOR = 1e-6
STRENGTH_CACHE_SIZE = 256


@dataclass(frozen=True)
class PathStrength:
    value: float
    "Weight product of the strongest minimum-hop path, 0 when disconnected."
    hops: int
    "Length of that path, 0 when disconnected."


@dataclass
class NetworkMutation:
    """
    What an update rule did to the edge set.
    """

    strengthened: int = 0
    created: int = 0
    weakened: int = 0
    removed: int = 0


@dataclass(frozen=True)
class NetworkStats:
    clustering: float
    "Global transitivity, 3 x triangles / connected triples."
    components: int
    density: float
    avg_path_length: float
    "Mean shortest-path length (hops) inside the giant component."
    mean_degree: float
    giant_size: int


class FriendshipNetwork:
    """
    Weighted, undirected friendship graph over agents ``0..n-1``.

    Every stored weight lies in (0, 1]; setting a weight to zero or below
    removes the edge.
    """

    def __init__(self, n: int) -> None:
        if n < 2:
            raise ValueError(f"network needs at least 2 agents, got {n}")
        self.__graph = nx.Graph()
        self.__graph.add_nodes_from(range(n))
        self.__version = 0
        self.__topology_version = 0
        self.__strengths: Dict[int, Dict[int, Tuple[float, int]]] = {}
        self.__strengths_version = -1
        self.__component_sizes: Dict[int, int] = {}
        self.__components_version = -1

    @property
    def n(self) -> int:
        return self.__graph.number_of_nodes()

    @property
    def graph(self) -> nx.Graph:
        """
        The backing :class:`networkx.Graph`; treat as read-only.
        """
        return self.__graph

    @property
    def version(self) -> int:
        "Incremented on every weight mutation."
        return self.__version

    def number_of_edges(self) -> int:
        return self.__graph.number_of_edges()

    def weight(self, i: int, j: int) -> float:
        data = self.__graph.get_edge_data(i, j)
        return 0.0 if data is None else data["weight"]

    def has_edge(self, i: int, j: int) -> bool:
        return self.__graph.has_edge(i, j)

    def neighbors(self, i: int) -> List[int]:
        return list(self.__graph.adj[i])

    def degree(self, i: int) -> int:
        return len(self.__graph.adj[i])

    def weighted_degree(self, i: int) -> float:
        return sum(attrs["weight"] for attrs in self.__graph.adj[i].values())

    def edges(self) -> List[Tuple[int, int, float]]:
        """
        All edges as ``(src, dst, weight)`` with ``src < dst``, sorted.
        """
        return sorted((min(i, j), max(i, j), attrs["weight"])
                      for i, j, attrs in self.__graph.edges(data=True))

    def set_weight(self, i: int, j: int, w: float) -> None:
        if i == j:
            raise InvalidAccessError(f"self-loop on agent {i}")
        existed = self.__graph.has_edge(i, j)
        if w <= 0.0:
            if existed:
                self.__graph.remove_edge(i, j)
                self.__topology_version += 1
        else:
            self.__graph.add_edge(i, j, weight=min(1.0, w))
            if not existed:
                self.__topology_version += 1
        self.__version += 1

    def remove_edge(self, i: int, j: int) -> bool:
        if not self.__graph.has_edge(i, j):
            return False
        self.set_weight(i, j, 0.0)
        return True

    # path strength

    def _search(self, source: int, target: Optional[int] = None,
                max_hops: Optional[int] = None) -> Dict[int, Tuple[float, int]]:
        best = {source: 1.0}
        hops = {source: 0}
        frontier = [source]
        depth = 0
        adj = self.__graph.adj
        while frontier and (max_hops is None or depth < max_hops):
            depth += 1
            layer: Dict[int, float] = {}
            for u in frontier:
                su = best[u]
                for v, attrs in adj[u].items():
                    if v in hops:
                        continue
                    s = su * attrs["weight"]
                    if s > layer.get(v, 0.0):
                        layer[v] = s
            for v, s in layer.items():
                best[v] = s
                hops[v] = depth
            if target is not None and target in layer:
                break
            frontier = list(layer)
        return {v: (best[v], hops[v]) for v in best if v != source}

    def strengths_from(self, source: int, max_hops: Optional[int] = None) -> Dict[int, Tuple[float, int]]:
        """
        Path strength and hop count from ``source`` to every agent it can
        reach (within ``max_hops`` when given).
        """
        if max_hops is not None:
            return self._search(source, max_hops=max_hops)
        if self.__strengths_version != self.__version:
            self.__strengths.clear()
            self.__strengths_version = self.__version
        result = self.__strengths.get(source)
        if result is None:
            if len(self.__strengths) >= STRENGTH_CACHE_SIZE:
                self.__strengths.clear()
            result = self._search(source)
            self.__strengths[source] = result
        return result

    def path_strength(self, i: int, j: int) -> PathStrength:
        if i == j:
            raise InvalidAccessError(f"path strength of agent {i} to itself")
        if self.__strengths_version == self.__version:
            for a, b in ((i, j), (j, i)):
                cached = self.__strengths.get(a)
                if cached is not None:
                    value, hops = cached.get(b, (0.0, 0))
                    return PathStrength(value=value, hops=hops)
        value, hops = self._search(i, target=j).get(j, (0.0, 0))
        return PathStrength(value=value, hops=hops)

    def component_size(self, i: int) -> int:
        if self.__components_version != self.__topology_version:
            self.__component_sizes = {}
            for component in nx.connected_components(self.__graph):
                size = len(component)
                for v in component:
                    self.__component_sizes[v] = size
            self.__components_version = self.__topology_version
        return self.__component_sizes[i]

    def write_csv(self, fd: TextIO) -> None:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(["src", "dst", "weight"])
        for src, dst, w in self.edges():
            writer.writerow([src, dst, repr(w)])


def _edge_weight(raw: float, net: NetworkParams, rng: np.random.Generator) -> float:
    w = min(1.0, raw)
    if w <= 0.0:
        w = min(1.0, rng.normal(net.mu_w, net.sigma_w))
    return w if w > 0.0 else WEIGHT_FLOOR


def init_network(pop: PopulationParams, net: NetworkParams,
                 rng: np.random.Generator) -> FriendshipNetwork:
    """
    Every agent draws a desired degree from Poisson(lambda) and picks that many
    distinct partners uniformly; the union of all picks is the edge set.
    """
    n = pop.n
    network = FriendshipNetwork(n)
    degrees = rng.poisson(net.lambda_friendship, size=n)
    pairs = set()
    for i in range(n):
        k = min(int(degrees[i]), n - 1)
        if k == 0:
            continue
        for p in rng.choice(n - 1, size=k, replace=False):
            j = int(p) if p < i else int(p) + 1
            pairs.add((min(i, j), max(i, j)))
    edges = sorted(pairs)
    raw = rng.normal(net.mu_w, net.sigma_w, size=len(edges))
    for (i, j), w in zip(edges, raw):
        network.set_weight(i, j, _edge_weight(float(w), net, rng))
    logger.info("friendship network: %d agents, %d edges", n, len(edges))
    return network


def spillover_factor(rep: ReputationParams, max_contrib: float, distance: float) -> float:
    return (rep.gamma_base + rep.theta_scale * max_contrib) * math.exp(-rep.alpha_decay * distance)


def apply_success(net: FriendshipNetwork, clique: Sequence[int], rep: ReputationParams,
                  rng: np.random.Generator) -> NetworkMutation:
    if len(clique) < 2:
        raise ValueError(f"clique needs at least 2 members, got {len(clique)}")
    mutation = NetworkMutation()
    for a, b in itertools.combinations(clique, 2):
        w = net.weight(a, b)
        if w > 0.0:
            net.set_weight(a, b, min(1.0, w + rep.delta_success))
            mutation.strengthened += 1
        else:
            net.set_weight(a, b, 1.0 - rng.random())
            mutation.created += 1
    return mutation


def apply_withdraw(net: FriendshipNetwork, issuer: int, clique: Sequence[int],
                   rep: ReputationParams) -> NetworkMutation:
    if issuer not in clique:
        raise InvalidAccessError(f"issuer {issuer} is not in the clique")
    mutation = NetworkMutation()
    for j in clique:
        if j == issuer:
            continue
        w = net.weight(issuer, j)
        if w <= 0.0:
            continue
        w = max(0.0, w - rep.delta_withdraw)
        if w <= rep.epsilon_cut:
            net.remove_edge(issuer, j)
            mutation.removed += 1
        else:
            net.set_weight(issuer, j, w)
            mutation.weakened += 1
    return mutation


def apply_destruction(net: FriendshipNetwork, issuer: int, clique: Sequence[int],
                      contribs: Mapping[int, float], rep: ReputationParams) -> NetworkMutation:
    """
    Sever the issuer's ties inside the clique, then decay its ties to outside
    neighbors by the spillover factor of their distance to the clique.
    """
    if issuer not in clique:
        raise InvalidAccessError(f"issuer {issuer} is not in the clique")
    mutation = NetworkMutation()
    max_contrib = max((contribs[m] for m in clique if m != issuer), default=0.0)

    for j in clique:
        if j != issuer and net.remove_edge(issuer, j):
            mutation.removed += 1

    members = set(clique)
    outside = [j for j in net.neighbors(issuer) if j not in members]
    if not outside:
        return mutation
    strengths = [net.strengths_from(m) for m in clique]
    updates = []
    for j in outside:
        distance = min(s.get(j, (0.0, 0))[0] for s in strengths)
        phi = spillover_factor(rep, max_contrib, distance)
        w = net.weight(issuer, j)
        updates.append((j, (1.0 - phi) * w if w > rep.epsilon_cut else 0.0))
    for j, w in updates:
        if w <= rep.epsilon_cut:
            net.remove_edge(issuer, j)
            mutation.removed += 1
        else:
            net.set_weight(issuer, j, w)
            mutation.weakened += 1
    return mutation


def _mean_path_length(graph: nx.Graph, nodes: Sequence[int], max_sources: int) -> float:
    if max_sources <= 0 or len(nodes) <= max_sources:
        return float(nx.average_shortest_path_length(graph.subgraph(nodes)))
    # evenly spaced sources over the sorted giant component
    stride = len(nodes) / max_sources
    total = 0
    for k in range(max_sources):
        lengths = nx.single_source_shortest_path_length(graph, nodes[int(k * stride)])
        total += sum(lengths.values())
    return total / (max_sources * (len(nodes) - 1))


def network_stats(net: FriendshipNetwork, max_sources: int = 0) -> NetworkStats:
    """
    Small-world diagnostics. With ``max_sources > 0`` the giant-component path
    length is averaged over at most that many breadth-first searches.
    """
    graph = net.graph
    n = graph.number_of_nodes()
    components = list(nx.connected_components(graph))
    giant = max(components, key=len)
    avg_path = _mean_path_length(graph, sorted(giant), max_sources) if len(giant) > 1 else 0.0
    return NetworkStats(
        clustering=nx.transitivity(graph),
        components=len(components),
        density=nx.density(graph),
        avg_path_length=float(avg_path),
        mean_degree=2.0 * graph.number_of_edges() / n,
        giant_size=len(giant),
    )


def write_snapshot(net: FriendshipNetwork, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fd:
        net.write_csv(fd)
