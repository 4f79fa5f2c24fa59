import math

import pytest

from cvarselect.exceptions import (
    ConfigurationException,
    ParameterException,
    SimulationGuardException,
    UnreachableException,
)
from cvarselect.models.streetnet import OtaMode, TriggerReason
from cvarselect.services.ota import OtaSimulator, ota_run
from cvarselect.services.streetnet import place_agents

ALL_MODES = [OtaMode.OFFLINE, OtaMode.OTA_STREET, OtaMode.OTA_GENERAL, OtaMode.ALL_STEP]


def _run(network, mode, seed=1, gamma=0.5, scale=(3, 2)):
    placement = place_agents(
        network=network, n_vehicles=scale[0], n_demands=scale[1], seed=seed
    )
    return ota_run(
        network=network,
        vehicles=placement.vehicles,
        demands=placement.demands,
        alpha=0.1,
        gamma_trigger=gamma,
        seed=seed,
        mode=mode,
    )


@pytest.mark.parametrize("mode", ALL_MODES)
def test_single_pair_is_assigned_once(line_network, mode):
    run = ota_run(
        network=line_network,
        vehicles=[0],
        demands=[2],
        alpha=0.1,
        gamma_trigger=0.5,
        seed=0,
        mode=mode,
    )
    assert run.completed
    assert run.assignment_count == 1
    assert run.assignments[0].assignment == [0]
    assert run.arrival_time > 0.0


def test_invalid_setups(line_network):
    with pytest.raises(ConfigurationException):
        ota_run(
            network=line_network,
            vehicles=[0],
            demands=[1, 2],
            alpha=0.1,
            gamma_trigger=0.5,
            seed=0,
            mode=OtaMode.OFFLINE,
        )
    with pytest.raises(ConfigurationException):
        ota_run(
            network=line_network,
            vehicles=[9],
            demands=[2],
            alpha=0.1,
            gamma_trigger=0.5,
            seed=0,
            mode=OtaMode.OFFLINE,
        )
    with pytest.raises(ParameterException):
        ota_run(
            network=line_network,
            vehicles=[0],
            demands=[2],
            alpha=0.1,
            gamma_trigger=1.0,
            seed=0,
            mode=OtaMode.OTA_STREET,
        )


def test_offline_run_stalls_where_triggering_recovers(line_network):
    # vehicle 3 is isolated, so vehicle 0 has to serve both demands in turn
    offline = ota_run(
        network=line_network,
        vehicles=[0, 3],
        demands=[1, 2],
        alpha=0.1,
        gamma_trigger=0.5,
        seed=0,
        mode=OtaMode.OFFLINE,
    )
    assert not offline.completed
    assert offline.assignment_count == 1
    assert offline.arrival_time == math.fsum(offline.step_intervals)

    triggered = ota_run(
        network=line_network,
        vehicles=[0, 3],
        demands=[1, 2],
        alpha=0.1,
        gamma_trigger=0.5,
        seed=0,
        mode=OtaMode.OTA_STREET,
    )
    assert triggered.completed
    assert triggered.assignment_count == 2
    assert triggered.events[0].trigger_reason == TriggerReason.STARVATION


def test_nobody_can_reach(line_network):
    with pytest.raises(UnreachableException):
        ota_run(
            network=line_network,
            vehicles=[2, 3],
            demands=[0],
            alpha=0.1,
            gamma_trigger=0.5,
            seed=0,
            mode=OtaMode.OTA_STREET,
        )


@pytest.mark.parametrize("mode", ALL_MODES)
def test_runs_are_reproducible(golden_city, mode):
    first = _run(golden_city, mode)
    second = _run(golden_city, mode)
    assert first.model_dump() == second.model_dump()
    assert "wall_time" not in first.model_dump()


@pytest.mark.parametrize("mode", ALL_MODES)
def test_run_bookkeeping(golden_city, mode):
    run = _run(golden_city, mode, seed=4)
    assert run.completed
    assert run.arrival_time == math.fsum(run.step_intervals)
    assert all(t > 0.0 for t in run.step_intervals)
    assert run.assignment_count == len(run.trigger_steps) + 1
    assert run.assignment_count == len(run.assignments)
    assert run.trigger_steps == [e.step for e in run.events if e.triggered]
    for event in run.events:
        if event.triggered:
            assert event.trigger_reason is not None
            assert not event.forced_skip
    if mode == OtaMode.OFFLINE:
        assert run.assignment_count == 1
    if mode == OtaMode.ALL_STEP:
        reasons = {e.trigger_reason for e in run.events if e.trigger_reason is not None}
        assert reasons <= {TriggerReason.EVERY_STEP}


@pytest.fixture(scope="module")
def street_runs(golden_city):
    return [
        _run(golden_city, OtaMode.OTA_STREET, seed=seed, scale=(6, 4)) for seed in range(3)
    ]


def _street_dominance(event, gamma):
    moving = [s for s in event.vehicles if s.remaining_length is not None]
    return {
        (a.demand, a.vehicle, b.vehicle)
        for a in moving
        for b in moving
        if a.vehicle != b.vehicle
        and a.demand == b.demand
        and a.remaining_length <= gamma * b.remaining_length
        and a.remaining_degree <= b.remaining_degree
    }


def test_street_trigger_matches_dominance(street_runs):
    for run in street_runs:
        for event in run.events:
            dominance = _street_dominance(event, run.gamma_trigger)
            assert {tuple(d) for d in event.dominance} == dominance
            if dominance:
                assert event.trigger_reason in (
                    TriggerReason.DOMINANCE,
                    TriggerReason.STARVATION,
                )
            elif event.trigger_reason is not None:
                assert event.trigger_reason == TriggerReason.STARVATION
            assert event.triggered == (
                event.trigger_reason is not None and not event.forced_skip
            )
        assert run.trigger_steps == [e.step for e in run.events if e.triggered]


def test_persistent_dominance_keeps_triggering(street_runs):
    for run in street_runs:
        for before, after in zip(run.events, run.events[1:]):
            if before.dominance and after.dominance:
                assert after.trigger_reason is not None


def test_general_trigger_reasons(golden_city):
    run = _run(golden_city, OtaMode.OTA_GENERAL, seed=2, scale=(6, 4))
    for event in run.events:
        if event.trigger_reason == TriggerReason.DOMINANCE:
            assert event.dominance
        if event.dominance:
            assert event.trigger_reason is not None


def test_step_is_the_earliest_next_arrival(street_runs):
    for run in street_runs:
        for event in run.events:
            pending = [t for t in event.t_next if t is not None]
            assert event.t_step == min(pending)


def test_remaining_length_never_grows_between_triggers(street_runs):
    for run in street_runs:
        for before, after in zip(run.events, run.events[1:]):
            if before.triggered:
                continue
            previous = {s.vehicle: s for s in before.vehicles}
            for state in after.vehicles:
                old = previous[state.vehicle]
                if (
                    state.remaining_length is None
                    or old.remaining_length is None
                    or state.demand != old.demand
                ):
                    continue
                assert state.remaining_length <= old.remaining_length + 1e-6


def test_reached_demands_are_never_assigned_again(street_runs):
    for run in street_runs:
        reached_at = {e.step: set(e.reached) for e in run.events}
        for snapshot in run.assignments[1:]:
            assigned = {d for d in snapshot.assignment if d is not None}
            assert not assigned & reached_at[snapshot.step]
        for event in run.events:
            heading = {s.demand for s in event.vehicles if s.demand is not None}
            assert not heading & set(event.reached)
        for before, after in zip(run.events, run.events[1:]):
            assert set(before.reached) <= set(after.reached)


@pytest.mark.parametrize("mode", [OtaMode.OFFLINE, OtaMode.OTA_STREET])
def test_vehicle_without_route_stays_unassigned(line_network, mode):
    run = ota_run(
        network=line_network,
        vehicles=[0, 3],
        demands=[1, 2],
        alpha=0.1,
        gamma_trigger=0.5,
        seed=0,
        mode=mode,
    )
    assert all(snapshot.assignment[1] is None for snapshot in run.assignments)
    assert run.assignments[0].assignment[0] in (0, 1)


def test_guard(golden_city):
    placement = place_agents(network=golden_city, n_vehicles=3, n_demands=2, seed=1)
    simulator = OtaSimulator(
        network=golden_city,
        vehicles=placement.vehicles,
        demands=placement.demands,
        alpha=0.1,
        gamma_trigger=0.5,
        seed=1,
        mode=OtaMode.OTA_STREET,
        max_steps=0,
    )
    with pytest.raises(SimulationGuardException):
        simulator.run()
