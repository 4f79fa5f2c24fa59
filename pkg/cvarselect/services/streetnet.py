from collections.abc import Sequence
from functools import cached_property, lru_cache
from logging import getLogger

import networkx as nx
import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import truncnorm

from cvarselect.exceptions import ParameterException
from cvarselect.models.streetnet import (
    Placement,
    StreetEdge,
    StreetNetwork,
    StreetNode,
    StreetPath,
    Unreachable,
    WaitModel,
)
from cvarselect.services import streams
from cvarselect.settings.config import config

logger = getLogger(__name__)

# relative slack when matching Dijkstra distances along equal-length routes
PATH_TOLERANCE = 1e-9


class StreetGraph:
    """Directed street graph with cached distances to each target."""

    def __init__(self, *, network: StreetNetwork):
        self.network = network
        self.graph = nx.DiGraph()
        for node in network.nodes:
            self.graph.add_node(node.id, x=node.x, y=node.y)
        for edge in network.edges:
            self.graph.add_edge(
                edge.source, edge.target, len_m=edge.len_m, maxv_mps=edge.maxv_mps
            )
        self._distances: dict[int, dict[int, float]] = {}
        self._waits: dict[int, WaitModel] = {}

    @cached_property
    def degrees(self) -> dict[int, int]:
        return {int(v): int(d) for v, d in self.graph.degree()}

    def has_node(self, node: int) -> bool:
        return self.graph.has_node(node)

    def edge_length(self, source: int, target: int) -> float:
        return self.graph.edges[source, target]["len_m"]

    def edge_time(self, source: int, target: int) -> float:
        data = self.graph.edges[source, target]
        return self.network.beta2 * data["len_m"] / data["maxv_mps"]

    def distances_to(self, target: int) -> dict[int, float]:
        cached = self._distances.get(target)
        if cached is None:
            cached = nx.single_source_dijkstra_path_length(
                self.graph.reverse(copy=False), target, weight="len_m"
            )
            self._distances[target] = cached
        return cached

    def wait_model(self, node: int) -> WaitModel:
        model = self._waits.get(node)
        if model is None:
            degree = self.degrees[node]
            model = WaitModel(
                node=node,
                scale=float(np.sqrt(self.network.beta1 * degree)),
                cap=self.network.t_max_factor * degree,
            )
            self._waits[node] = model
        return model


def shortest_path(
    *, graph: StreetGraph, source: int, target: int
) -> StreetPath | Unreachable:
    """Minimum-length path; ties go to the lexicographically smallest route."""
    if not graph.has_node(source) or not graph.has_node(target):
        raise ParameterException(f"unknown node in {source}->{target}")

    distance = graph.distances_to(target)
    if source not in distance:
        return Unreachable(source=source, target=target)

    nodes = [source]
    length = 0.0
    current = source
    while current != target:
        remaining = distance[current]
        slack = PATH_TOLERANCE * max(1.0, remaining)
        current_next = min(
            w
            for w in graph.graph.successors(current)
            if w in distance
            and abs(graph.edge_length(current, w) + distance[w] - remaining) <= slack
        )
        length += graph.edge_length(current, current_next)
        nodes.append(current_next)
        current = current_next

    return StreetPath(
        nodes=nodes,
        length=length,
        degree=sum(graph.degrees[v] for v in nodes),
    )


def sample_waits(*, model: WaitModel, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws of the truncated normal wait from uniforms ``u``."""
    if model.cap == 0.0 or model.scale == 0.0:
        return np.zeros_like(u, dtype=float)
    upper = ndtr(model.cap / model.scale)
    waits = model.scale * ndtri(0.5 + u * (upper - 0.5))
    return np.clip(waits, 0.0, model.cap)


@lru_cache(maxsize=None)
def wait_moments(model: WaitModel) -> tuple[float, float]:
    """Analytic mean and variance of the wait."""
    if model.cap == 0.0 or model.scale == 0.0:
        return 0.0, 0.0
    mean, var = truncnorm.stats(
        0.0, model.cap / model.scale, loc=0.0, scale=model.scale, moments="mv"
    )
    return float(mean), float(var)


def path_edge_time(*, graph: StreetGraph, nodes: Sequence[int]) -> float:
    return sum(graph.edge_time(u, v) for u, v in zip(nodes, nodes[1:]))


def path_travel_time_samples(
    *, graph: StreetGraph, nodes: Sequence[int], n: int, rng: np.random.Generator
) -> np.ndarray:
    """Waits at every path node plus the deterministic edge times."""
    u = rng.random((len(nodes), n))
    total = np.zeros(n)
    for row, node in enumerate(nodes):
        total = total + sample_waits(model=graph.wait_model(node), u=u[row])
    return total + path_edge_time(graph=graph, nodes=nodes)


def path_moments(*, graph: StreetGraph, nodes: Sequence[int]) -> tuple[float, float]:
    mean = path_edge_time(graph=graph, nodes=nodes)
    var = 0.0
    for node in nodes:
        m, v = wait_moments(graph.wait_model(node))
        mean += m
        var += v
    return mean, var


def synth_city(
    *,
    rows: int,
    cols: int,
    seed: int,
    diagonals: int = 0,
    beta1: float = config.STREET_BETA1,
    beta2: float = config.STREET_BETA2,
    t_max_factor: float = config.STREET_T_MAX_FACTOR,
) -> StreetNetwork:
    """Bidirectional grid city; node ``r * cols + c`` sits at (c, r) * spacing."""
    if rows < 2 or cols < 2:
        raise ParameterException(f"a city needs at least 2x2 nodes, got {rows}x{cols}")
    if not 0 <= diagonals <= (rows - 1) * (cols - 1):
        raise ParameterException(f"cannot place {diagonals} diagonals")

    rng = streams.stream(seed=seed, tag=streams.CITY)
    nodes = [
        StreetNode(id=r * cols + c, x=c * config.CITY_SPACING, y=r * config.CITY_SPACING)
        for r in range(rows)
        for c in range(cols)
    ]

    streets: list[tuple[int, int]] = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                streets.append((v, v + 1))
            if r + 1 < rows:
                streets.append((v, v + cols))
    cells = rng.choice((rows - 1) * (cols - 1), size=diagonals, replace=False)
    for cell in sorted(int(i) for i in cells):
        r, c = divmod(cell, cols - 1)
        streets.append((r * cols + c, (r + 1) * cols + c + 1))

    edges: list[StreetEdge] = []
    for a, b in streets:
        length = float(rng.uniform(config.CITY_MIN_LENGTH, config.CITY_MAX_LENGTH))
        speed = float(rng.choice(config.CITY_SPEEDS))
        edges.append(StreetEdge(source=a, target=b, len_m=length, maxv_mps=speed))
        edges.append(StreetEdge(source=b, target=a, len_m=length, maxv_mps=speed))

    logger.info("synthetic city %sx%s (seed %s): %s edges", rows, cols, seed, len(edges))
    return StreetNetwork(
        nodes=nodes, edges=edges, beta1=beta1, beta2=beta2, t_max_factor=t_max_factor
    )


def place_agents(
    *, network: StreetNetwork, n_vehicles: int, n_demands: int, seed: int
) -> Placement:
    """Demands on distinct nodes, vehicles on distinct non-demand nodes."""
    ids = sorted(n.id for n in network.nodes)
    if n_vehicles + n_demands > len(ids):
        raise ParameterException(
            f"{len(ids)} nodes cannot host {n_vehicles} vehicles and {n_demands} demands"
        )

    rng = streams.stream(
        seed=seed, tag=streams.PLACEMENT, keys=(n_vehicles, n_demands)
    )
    order = rng.permutation(len(ids))
    demands = [ids[int(i)] for i in order[:n_demands]]
    vehicles = [ids[int(i)] for i in order[n_demands : n_demands + n_vehicles]]
    return Placement(vehicles=vehicles, demands=demands)
