"""Online triggering assignment on a street network.

Each step advances the clock to the next intersection arrival of any moving
vehicle. Arrivals are applied first, then demands reached by their assigned
vehicle are closed and the vehicles assigned to them are released, and only
then is the trigger condition checked.
"""

import math
import time
from logging import getLogger

import numpy as np

from cvarselect.exceptions import (
    ConfigurationException,
    ParameterException,
    SimulationGuardException,
    UnreachableException,
)
from cvarselect.models.core import GroundSet, PartitionMatroid
from cvarselect.models.risk import RiskParams
from cvarselect.models.streetnet import (
    AssignmentSnapshot,
    OtaEvent,
    OtaMode,
    OtaRun,
    StreetNetwork,
    StreetPath,
    TriggerReason,
    VehicleState,
)
from cvarselect.services import streams
from cvarselect.services.risk import AssignmentTable
from cvarselect.services.sga import sga_solve
from cvarselect.services.streetnet import (
    StreetGraph,
    path_edge_time,
    path_travel_time_samples,
    sample_waits,
    shortest_path,
    wait_moments,
)
from cvarselect.settings.config import config

logger = getLogger(__name__)

Dominance = tuple[int, int, int]


def draw_wait(*, graph: StreetGraph, node: int, seed: int, vehicle: int, arrival: int) -> float:
    """Real-time wait of ``vehicle`` on its ``arrival``-th intersection arrival."""
    u = streams.uniforms(seed=seed, tag=streams.NODE_WAIT, keys=(vehicle, arrival), n=1)
    return float(sample_waits(model=graph.wait_model(node), u=u)[0])


class _Vehicle:
    def __init__(self, *, index: int, node: int):
        self.index = index
        self.node = node
        # nodes still to visit; route[0] is the next node
        self.route: list[int] = []
        self.committed = False
        self.wait = 0.0
        self.t_next: float | None = None
        self.demand: int | None = None
        self.arrivals = 0

    @property
    def moving(self) -> bool:
        return self.demand is not None and bool(self.route)

    @property
    def origin(self) -> int:
        """Node that new routes start from."""
        return self.route[0] if self.committed else self.node


class OtaSimulator:
    def __init__(
        self,
        *,
        network: StreetNetwork,
        vehicles: list[int],
        demands: list[int],
        alpha: float,
        gamma_trigger: float,
        seed: int,
        mode: OtaMode,
        n_samples: int = config.OTA_N_SAMPLES,
        grid_points: int = config.OTA_GRID_POINTS,
        max_steps: int = config.OTA_MAX_STEPS,
    ):
        if len(vehicles) < len(demands):
            raise ConfigurationException(
                f"{len(vehicles)} vehicles cannot serve {len(demands)} demands"
            )
        if not demands:
            raise ConfigurationException("no demands to serve")
        if not 0.0 < alpha <= 1.0:
            raise ParameterException(f"alpha must lie in (0, 1], got {alpha}")
        if not 0.0 < gamma_trigger < 1.0:
            raise ParameterException(f"gamma must lie in (0, 1), got {gamma_trigger}")

        self.graph = StreetGraph(network=network)
        for node in [*vehicles, *demands]:
            if not self.graph.has_node(node):
                raise ConfigurationException(f"node {node} is not in the network")

        self.starts = list(vehicles)
        self.demands = list(demands)
        self.alpha = alpha
        self.gamma = gamma_trigger
        self.seed = seed
        self.mode = mode
        self.n_samples = n_samples
        self.grid_points = grid_points
        self.max_steps = max_steps

    # routing helpers

    def _path(self, source: int, demand: int) -> StreetPath | None:
        path = shortest_path(graph=self.graph, source=source, target=self.demands[demand])
        return path if isinstance(path, StreetPath) else None

    def _can_reach(self, vehicle: _Vehicle, demand: int) -> bool:
        return vehicle.origin in self.graph.distances_to(self.demands[demand])

    def _remaining(self, vehicle: _Vehicle) -> tuple[float, int, float, float]:
        """Length, degree, mean time and time variance left to the demand."""
        route = vehicle.route
        if vehicle.committed:
            data = self.graph.graph.edges[vehicle.node, route[0]]
            length = data["maxv_mps"] * vehicle.t_next / self.graph.network.beta2
            nodes = route
        else:
            length = self.graph.edge_length(vehicle.node, route[0])
            nodes = [vehicle.node, *route]
        length += sum(self.graph.edge_length(u, v) for u, v in zip(route, route[1:]))
        degree = sum(self.graph.degrees[v] for v in nodes)

        mean = vehicle.t_next + path_edge_time(graph=self.graph, nodes=route)
        var = 0.0
        for node in route[:-1]:
            m, v = wait_moments(self.graph.wait_model(node))
            mean += m
            var += v
        return length, degree, mean, var

    # state transitions

    def _arrive(self, vehicle: _Vehicle, node: int) -> None:
        vehicle.node = node
        vehicle.committed = False
        vehicle.wait = draw_wait(
            graph=self.graph,
            node=node,
            seed=self.seed,
            vehicle=vehicle.index,
            arrival=vehicle.arrivals,
        )
        vehicle.arrivals += 1

    def _depart_time(self, vehicle: _Vehicle) -> float | None:
        if not vehicle.route:
            return None
        return vehicle.wait + self.graph.edge_time(vehicle.node, vehicle.route[0])

    def _settle(self) -> None:
        for v in self._vehicles:
            if (
                v.demand is not None
                and not v.committed
                and not v.route
                and v.node == self.demands[v.demand]
            ):
                self._reached.add(v.demand)
        for v in self._vehicles:
            if v.demand in self._reached:
                v.demand = None
                if not v.committed:
                    v.route = []
                    v.t_next = None

    def _unreached(self) -> list[int]:
        return [d for d in range(len(self.demands)) if d not in self._reached]

    def _assign(self, *, step: int) -> None:
        unreached = self._unreached()
        n_unreached = len(unreached)
        n_pairs = len(self._vehicles) * n_unreached

        paths: dict[int, StreetPath | None] = {}
        samples = np.zeros((n_pairs, self.n_samples))
        for v in self._vehicles:
            offset = v.t_next if v.committed else 0.0
            for k, demand in enumerate(unreached):
                element = v.index * n_unreached + k
                path = self._path(v.origin, demand)
                paths[element] = path
                if path is None:
                    continue
                rng = streams.stream(
                    seed=self.seed,
                    tag=streams.OTA_SCENARIO,
                    keys=(self._assignment_index, element),
                )
                times = offset + path_travel_time_samples(
                    graph=self.graph, nodes=path.nodes, n=self.n_samples, rng=rng
                )
                samples[element] = 1.0 / np.maximum(times, config.OTA_MIN_TRAVEL_TIME)

        best = float(samples.max())
        if best <= 0.0:
            raise UnreachableException("no vehicle can reach any unreached demand")

        gamma_cap = n_unreached * best
        params = RiskParams(
            alpha=self.alpha,
            gamma_cap=gamma_cap,
            delta_step=gamma_cap / self.grid_points,
        )
        table = AssignmentTable(
            samples=samples, n_demands=n_unreached, seed=self.seed
        )
        matroid = PartitionMatroid(
            blocks=[e // n_unreached for e in range(n_pairs)],
            caps=[1] * len(self._vehicles),
        )
        result = sga_solve(
            table=table,
            matroid=matroid,
            ground_set=GroundSet(size=n_pairs),
            params=params,
        )

        for element in result.selected.members:
            v = self._vehicles[element // n_unreached]
            path = paths[element]
            if path is None:
                # zero-gain pick without a route: leave the vehicle unassigned
                v.demand = None
                if v.committed:
                    v.route = v.route[:1]
                else:
                    v.route = []
                    v.t_next = None
                continue
            v.demand = unreached[element % n_unreached]
            tail = path.nodes[1:]
            if v.committed:
                v.route = [v.route[0], *tail]
            else:
                v.route = tail
                v.t_next = self._depart_time(v)

        self._assignment_index += 1
        self._snapshots.append(
            AssignmentSnapshot(step=step, assignment=[v.demand for v in self._vehicles])
        )
        self._settle()

    # trigger conditions

    def _dominance(self) -> set[Dominance]:
        found: set[Dominance] = set()
        stats = {v.index: self._remaining(v) for v in self._vehicles if v.moving}
        for demand in self._unreached():
            assigned = [
                v.index for v in self._vehicles if v.demand == demand and v.moving
            ]
            for j in assigned:
                for other in assigned:
                    if j == other:
                        continue
                    length, degree, mean, var = stats[j]
                    length_o, degree_o, mean_o, var_o = stats[other]
                    if self.mode == OtaMode.OTA_GENERAL:
                        hit = mean <= self.gamma * mean_o and var <= var_o
                    else:
                        hit = length <= self.gamma * length_o and degree <= degree_o
                    if hit:
                        found.add((demand, j, other))
        return found

    def _starving(self) -> bool:
        for demand in self._unreached():
            served = any(v.demand == demand and v.moving for v in self._vehicles)
            if not served and any(self._can_reach(v, demand) for v in self._vehicles):
                return True
        return False

    def _forced(self) -> bool:
        """Reassignment cannot change anything."""
        reachable = [
            (v, demand)
            for demand in self._unreached()
            for v in self._vehicles
            if self._can_reach(v, demand)
        ]
        if not reachable:
            return True
        if len(self._unreached()) != 1:
            return False
        return all(v.demand == demand for v, demand in reachable)

    def _vehicle_states(self) -> list[VehicleState]:
        states = []
        for v in self._vehicles:
            state = VehicleState(vehicle=v.index, node=v.node, demand=v.demand)
            if v.committed:
                head = v.route[0]
                data = self.graph.graph.edges[v.node, head]
                remaining_m = data["maxv_mps"] * v.t_next / self.graph.network.beta2
                state.edge = (v.node, head)
                state.edge_remaining_m = remaining_m
                state.fraction = min(1.0, max(0.0, 1.0 - remaining_m / data["len_m"]))
            if v.moving:
                length, degree, _, _ = self._remaining(v)
                state.remaining_length = length
                state.remaining_degree = degree
            states.append(state)
        return states

    def run(self) -> OtaRun:
        started = time.perf_counter()
        self._vehicles = [
            _Vehicle(index=j, node=node) for j, node in enumerate(self.starts)
        ]
        self._reached: set[int] = set()
        self._snapshots: list[AssignmentSnapshot] = []
        self._assignment_index = 0
        for v in self._vehicles:
            self._arrive(v, v.node)

        self._assign(step=0)

        events: list[OtaEvent] = []
        intervals: list[float] = []
        trigger_steps: list[int] = []
        clock = 0.0
        step = 0
        completed = True
        while self._unreached():
            moving = [v for v in self._vehicles if v.moving]
            if not moving:
                completed = False
                logger.warning(
                    "OTA %s stalled at step %s with demands %s unreached",
                    self.mode.value,
                    step,
                    self._unreached(),
                )
                break
            step += 1
            if step > self.max_steps:
                raise SimulationGuardException(
                    f"simulation exceeded {self.max_steps} steps"
                )

            t_next = [v.t_next if v.moving else None for v in self._vehicles]
            t_step = min(v.t_next for v in moving)
            for v in moving:
                if v.t_next <= t_step:
                    self._arrive(v, v.route.pop(0))
                    v.t_next = self._depart_time(v)
                else:
                    v.t_next -= t_step
                    if v.wait >= t_step:
                        v.wait -= t_step
                    else:
                        v.wait = 0.0
                        v.committed = True
            clock += t_step
            intervals.append(t_step)
            self._settle()

            event = OtaEvent(
                step=step,
                t_step=t_step,
                clock=clock,
                vehicles=self._vehicle_states(),
                t_next=t_next,
                reached=sorted(self._reached),
            )
            if self._unreached():
                current = self._dominance()
                event.dominance = sorted(current)
                reason = None
                if self.mode == OtaMode.ALL_STEP:
                    reason = TriggerReason.EVERY_STEP
                elif self.mode != OtaMode.OFFLINE:
                    if self._starving():
                        reason = TriggerReason.STARVATION
                    elif current:
                        reason = TriggerReason.DOMINANCE

                event.trigger_reason = reason
                if reason is not None:
                    if self._forced():
                        event.forced_skip = True
                    else:
                        self._assign(step=step)
                        trigger_steps.append(step)
                        event.triggered = True
            events.append(event)

        run = OtaRun(
            mode=self.mode,
            alpha=self.alpha,
            gamma_trigger=self.gamma,
            seed=self.seed,
            vehicles=self.starts,
            demands=self.demands,
            assignments=self._snapshots,
            trigger_steps=trigger_steps,
            step_intervals=intervals,
            arrival_time=math.fsum(intervals),
            assignment_count=len(trigger_steps) + 1,
            completed=completed,
            events=events,
            wall_time=time.perf_counter() - started,
        )
        logger.info(
            "OTA %s gamma=%s seed=%s: %s steps, %s assignments, arrival %.1f s",
            self.mode.value,
            self.gamma,
            self.seed,
            step,
            run.assignment_count,
            run.arrival_time,
        )
        return run


def ota_run(
    *,
    network: StreetNetwork,
    vehicles: list[int],
    demands: list[int],
    alpha: float,
    gamma_trigger: float,
    seed: int,
    mode: OtaMode,
) -> OtaRun:
    return OtaSimulator(
        network=network,
        vehicles=vehicles,
        demands=demands,
        alpha=alpha,
        gamma_trigger=gamma_trigger,
        seed=seed,
        mode=mode,
    ).run()
