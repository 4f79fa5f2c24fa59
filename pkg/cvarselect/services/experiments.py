import time
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from logging import getLogger
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from cvarselect.exceptions import ConfigurationException, ParameterException, SchemaException
from cvarselect.models.casestudies import CoverageInstance, ModInstance
from cvarselect.models.core import ElementSet, GroundSet, Matroid
from cvarselect.models.experiment import (
    AlphaRun,
    ExperimentConfig,
    GenerateConfig,
    OtaTask,
    SolveReportDTO,
)
from cvarselect.models.risk import RiskParams
from cvarselect.models.streetnet import OtaMode, OtaRun, StreetNetwork
from cvarselect.repositories.uow import BaseUnitOfWork
from cvarselect.services import streams
from cvarselect.services.coverage import (
    CoverageExactTable,
    CoverageScenarioTable,
    coverage_gamma,
    coverage_generate,
    coverage_ground_set,
    coverage_matroid,
)
from cvarselect.services.mod import (
    ModScenarioTable,
    mod_gamma,
    mod_generate,
    mod_ground_set,
    mod_matroid,
)
from cvarselect.services.ota import ota_run
from cvarselect.services.risk import (
    BaseScenarioTable,
    estimate_cvar,
    implied_epsilon,
    required_samples,
)
from cvarselect.services.sga import (
    certificate,
    curvature_report,
    eval_count_bound,
    expectation_greedy,
    sga_solve,
)
from cvarselect.services.streetnet import place_agents, synth_city
from cvarselect.settings.config import config

logger = getLogger(__name__)

Instance = ModInstance | CoverageInstance


def _problem(instance: Instance) -> tuple[GroundSet, Matroid, float]:
    if isinstance(instance, ModInstance):
        return mod_ground_set(instance), mod_matroid(instance), mod_gamma(instance)
    return (
        coverage_ground_set(instance),
        coverage_matroid(instance),
        coverage_gamma(instance),
    )


def _table(
    *, instance: Instance, n_samples: int, seed: int, exact: bool = False
) -> BaseScenarioTable:
    if isinstance(instance, ModInstance):
        if exact:
            raise ConfigurationException(
                "exact expectation is only available for coverage instances"
            )
        return ModScenarioTable(instance=instance, n_samples=n_samples, seed=seed)
    if exact:
        return CoverageExactTable(instance=instance)
    return CoverageScenarioTable(instance=instance, n_samples=n_samples, seed=seed)


def _sampling(
    *, cfg: ExperimentConfig, gamma_cap: float
) -> tuple[int, float | None]:
    """Scenario count and the DKW accuracy it carries, if a confidence is known."""
    delta_conf = cfg.delta_conf
    if cfg.n_samples is not None:
        if cfg.epsilon is not None:
            return cfg.n_samples, cfg.epsilon
        if delta_conf is None:
            return cfg.n_samples, None
        return cfg.n_samples, implied_epsilon(
            gamma_cap=gamma_cap, n_samples=cfg.n_samples, delta_conf=delta_conf
        )

    if cfg.epsilon is not None:
        n_samples = required_samples(
            gamma_cap=gamma_cap,
            epsilon=cfg.epsilon,
            delta_conf=delta_conf or config.DELTA_CONF,
        )
        return n_samples, cfg.epsilon
    return config.N_SAMPLES, None


def _params(
    *,
    alpha: float,
    gamma_cap: float,
    delta_step: float,
    epsilon: float | None,
    delta_conf: float | None,
) -> RiskParams:
    try:
        return RiskParams(
            alpha=alpha,
            gamma_cap=gamma_cap,
            delta_step=delta_step,
            epsilon=epsilon,
            delta_conf=delta_conf,
        )
    except ValidationError as e:
        raise ParameterException(f"invalid risk parameters: {e}") from e


def _members(selected: ElementSet) -> str:
    return " ".join(str(e) for e in selected.members)


def _solve_alpha(
    *,
    table: BaseScenarioTable,
    matroid: Matroid,
    ground_set: GroundSet,
    params: RiskParams,
    n_samples: int,
) -> AlphaRun:
    started = time.perf_counter()
    result = sga_solve(table=table, matroid=matroid, ground_set=ground_set, params=params)
    wall_time = time.perf_counter() - started

    report = curvature_report(table=table, ground_set=ground_set, params=params)
    return AlphaRun(
        params=params,
        result=result,
        curvature=report,
        certificate=certificate(result=result, k_f=report.conservative, params=params),
        eval_bound=eval_count_bound(
            ground_set=ground_set, params=params, n_samples=n_samples
        ),
        wall_time=wall_time,
    )


class BaseExperimentService(ABC):
    @abstractmethod
    def __init__(self, *, uow: BaseUnitOfWork):
        pass

    @abstractmethod
    def run(self, *, cfg: ExperimentConfig) -> list[Path]:
        pass


class OfflineStudyService(BaseExperimentService, ABC):
    """SGA over an alpha grid on one instance with one shared scenario table."""

    instance_type: type[ModInstance] | type[CoverageInstance]

    def __init__(self, *, uow: BaseUnitOfWork):
        self.uow = uow

    @abstractmethod
    def _generate(self, *, seed: int) -> Instance:
        pass

    @abstractmethod
    def _instance_tables(self, *, instance: Instance) -> dict[str, pd.DataFrame]:
        pass

    def _load(self, *, cfg: ExperimentConfig) -> Instance:
        if cfg.instance_path is None:
            return self._generate(seed=cfg.seed)

        instance = self.uow.get_instance_repo().get_one(path=cfg.instance_path)
        if not isinstance(instance, self.instance_type):
            raise SchemaException(
                f"{cfg.instance_path} holds a {instance.version} instance, "
                f"{cfg.study} needs {self.instance_type.model_fields['version'].default}"
            )
        return instance

    def run(self, *, cfg: ExperimentConfig) -> list[Path]:
        with self.uow:
            return self._run(cfg=cfg)

    def _run(self, *, cfg: ExperimentConfig) -> list[Path]:
        instance = self._load(cfg=cfg)
        ground_set, matroid, gamma = _problem(instance)
        gamma_cap = cfg.gamma_cap or gamma
        delta_step = cfg.delta_step or config.DELTA_STEP

        n_samples, epsilon = _sampling(cfg=cfg, gamma_cap=gamma_cap)
        table = _table(
            instance=instance, n_samples=n_samples, seed=cfg.seed, exact=cfg.exact
        )
        if cfg.exact:
            n_samples, epsilon = table.n_samples, 0.0
        # fresh scenarios keep the reported distribution out of sample
        evaluation = _table(
            instance=instance,
            n_samples=cfg.n_samples or config.N_SAMPLES,
            seed=streams.derive_seed(seed=cfg.seed, tag=streams.EVALUATION),
        )
        logger.info(
            "%s: |X|=%s Gamma=%s Delta=%s n_s=%s",
            cfg.study,
            ground_set.size,
            gamma_cap,
            delta_step,
            n_samples,
        )

        runs: dict[float, AlphaRun] = {}
        for alpha in sorted({*cfg.alphas, *config.TRADEOFF_ALPHAS}):
            params = _params(
                alpha=alpha,
                gamma_cap=gamma_cap,
                delta_step=delta_step,
                epsilon=epsilon,
                delta_conf=cfg.delta_conf,
            )
            runs[alpha] = _solve_alpha(
                table=table,
                matroid=matroid,
                ground_set=ground_set,
                params=params,
                n_samples=n_samples,
            )

        grid = sorted(set(cfg.alphas))
        tables = {
            "h_vs_alpha.csv": self._h_vs_alpha(runs=runs, grid=grid, cfg=cfg, n_samples=n_samples),
            "traces.csv": self._traces(runs=runs, grid=grid),
            "additive_term.csv": self._additive(runs=runs, grid=grid),
            "utility_samples.csv": self._samples(runs=runs, grid=grid, evaluation=evaluation),
            "tradeoff.csv": self._tradeoff(runs=runs, evaluation=evaluation),
            "selections.csv": self._selections(
                runs=runs, table=table, matroid=matroid, ground_set=ground_set
            ),
            **self._instance_tables(instance=instance),
        }

        result_repo = self.uow.get_result_repo()
        for name, frame in tables.items():
            result_repo.add_table(name=name, frame=frame, config=cfg)
        self.uow.get_instance_repo().add_one(name="instance.json", instance=instance)
        if cfg.plot_data:
            self._plot_data(tables=tables, grid=grid, cfg=cfg)
        return self.uow.commit()

    @staticmethod
    def _h_vs_alpha(
        *, runs: dict[float, AlphaRun], grid: list[float], cfg: ExperimentConfig, n_samples: int
    ) -> pd.DataFrame:
        rows = []
        for alpha in grid:
            run = runs[alpha]
            row = {
                "alpha": alpha,
                "tau_g": run.result.tau_g,
                "h_value": run.result.h_value,
                "selected": _members(run.result.selected),
                "eval_count": run.result.eval_count,
                "oracle_calls": run.result.oracle_calls,
                "eval_work": run.result.eval_count * n_samples,
                "eval_bound": run.eval_bound,
            }
            if cfg.timings:
                row["wall_s"] = run.wall_time
            rows.append(row)
        return pd.DataFrame(rows)

    @staticmethod
    def _traces(*, runs: dict[float, AlphaRun], grid: list[float]) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "alpha": alpha,
                    "tau": point.tau,
                    "h_value": point.h_value,
                    "selected": _members(point.selected),
                }
                for alpha in grid
                for point in runs[alpha].result.trace
            ]
        )

    @staticmethod
    def _additive(*, runs: dict[float, AlphaRun], grid: list[float]) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "alpha": alpha,
                    "k_mean": runs[alpha].curvature.mean_utility,
                    "k_f": runs[alpha].certificate.k_f,
                    "additive_term": runs[alpha].certificate.additive_term,
                    "gamma_cap": runs[alpha].certificate.gamma_cap,
                    "delta_step": runs[alpha].certificate.delta_step,
                    "epsilon": runs[alpha].certificate.epsilon,
                    "optimum_upper_bound": runs[alpha].certificate.optimum_upper_bound,
                }
                for alpha in grid
            ]
        )

    @staticmethod
    def _samples(
        *, runs: dict[float, AlphaRun], grid: list[float], evaluation: BaseScenarioTable
    ) -> pd.DataFrame:
        frames = []
        for alpha in grid:
            values = evaluation.utilities(elements=runs[alpha].result.selected.members)
            frames.append(
                pd.DataFrame(
                    {
                        "alpha": alpha,
                        "scenario": np.arange(values.size),
                        "utility": values,
                    }
                )
            )
        return pd.concat(frames, ignore_index=True)

    @staticmethod
    def _tradeoff(
        *, runs: dict[float, AlphaRun], evaluation: BaseScenarioTable
    ) -> pd.DataFrame:
        rows = []
        for alpha in config.TRADEOFF_ALPHAS:
            values = evaluation.utilities(elements=runs[alpha].result.selected.members)
            tail = estimate_cvar(values=values, alpha=config.TRADEOFF_RISK_LEVEL)
            rows.append(
                {
                    "alpha": alpha,
                    "selected": _members(runs[alpha].result.selected),
                    "mean": float(values.mean()),
                    "std": float(values.std()),
                    "risk_level": config.TRADEOFF_RISK_LEVEL,
                    "var": tail.var,
                    "cvar": tail.cvar,
                }
            )
        return pd.DataFrame(rows)

    @staticmethod
    def _selections(
        *,
        runs: dict[float, AlphaRun],
        table: BaseScenarioTable,
        matroid: Matroid,
        ground_set: GroundSet,
    ) -> pd.DataFrame:
        picks = [(f"alpha={alpha:g}", runs[alpha].result.selected) for alpha in config.TRADEOFF_ALPHAS]
        picks.append(
            (
                "expectation",
                expectation_greedy(table=table, matroid=matroid, ground_set=ground_set),
            )
        )
        return pd.DataFrame(
            [
                {
                    "solution": label,
                    "rank": rank,
                    "element": e,
                    "label": ground_set.labels[e] if ground_set.labels else str(e),
                }
                for label, selected in picks
                for rank, e in enumerate(selected.members)
            ]
        )

    def _plot_data(
        self, *, tables: dict[str, pd.DataFrame], grid: list[float], cfg: ExperimentConfig
    ) -> None:
        result_repo = self.uow.get_result_repo()
        h_vs_alpha = tables["h_vs_alpha.csv"]
        result_repo.add_plot_data(
            name="h_vs_alpha.dat",
            blocks=[("H(S^G, tau^G) vs alpha", h_vs_alpha[["alpha", "h_value", "tau_g"]])],
            config=cfg,
        )
        traces = tables["traces.csv"]
        result_repo.add_plot_data(
            name="traces.dat",
            blocks=[
                (f"alpha={alpha:g}", traces.loc[traces["alpha"] == alpha, ["tau", "h_value"]])
                for alpha in grid
            ],
            config=cfg,
        )
        samples = tables["utility_samples.csv"]
        result_repo.add_plot_data(
            name="utility_samples.dat",
            blocks=[
                (f"alpha={alpha:g}", samples.loc[samples["alpha"] == alpha, ["scenario", "utility"]])
                for alpha in grid
            ],
            config=cfg,
        )


class ModOfflineService(OfflineStudyService):
    instance_type = ModInstance

    def _generate(self, *, seed: int) -> Instance:
        return mod_generate(
            n_demands=config.MOD_N_DEMANDS, n_vehicles=config.MOD_N_VEHICLES, seed=seed
        )

    def _instance_tables(self, *, instance: Instance) -> dict[str, pd.DataFrame]:
        assert isinstance(instance, ModInstance)
        rows = []
        for e in range(instance.n_pairs):
            demand, vehicle = instance.pair(e)
            lower, upper = instance.interval(demand=demand, vehicle=vehicle)
            rows.append(
                {
                    "pair": e,
                    "demand": demand,
                    "vehicle": vehicle,
                    "mean_eff": instance.mean_eff[demand][vehicle],
                    "lower": lower,
                    "upper": upper,
                }
            )
        return {"efficiencies.csv": pd.DataFrame(rows)}


class CoverageService(OfflineStudyService):
    instance_type = CoverageInstance

    def _generate(self, *, seed: int) -> Instance:
        return coverage_generate(
            width=config.COVERAGE_WIDTH,
            height=config.COVERAGE_HEIGHT,
            obstacles=config.COVERAGE_OBSTACLES,
            n_candidates=config.COVERAGE_N_CANDIDATES,
            budget=config.COVERAGE_BUDGET,
            seed=seed,
        )

    def _instance_tables(self, *, instance: Instance) -> dict[str, pd.DataFrame]:
        assert isinstance(instance, CoverageInstance)
        rows = []
        for e, cell in enumerate(instance.candidates):
            x, y = instance.cell_xy(cell)
            rows.append(
                {
                    "candidate": e,
                    "cell": cell,
                    "x": x,
                    "y": y,
                    "footprint_size": len(instance.footprints[e]),
                    "success_prob": instance.success_prob[e],
                }
            )
        return {"footprints.csv": pd.DataFrame(rows)}


def _ota_task(task: OtaTask) -> OtaRun:
    return ota_run(
        network=task.network,
        vehicles=task.vehicles,
        demands=task.demands,
        alpha=task.alpha,
        gamma_trigger=task.gamma_trigger,
        seed=task.seed,
        mode=task.mode,
    )


class OtaCompareService(BaseExperimentService):
    """Offline, triggered and every-step assignment on one street network."""

    def __init__(self, *, uow: BaseUnitOfWork):
        self.uow = uow

    def _network(self, *, cfg: ExperimentConfig) -> StreetNetwork:
        if cfg.network_path is not None:
            return self.uow.get_network_repo().get_one(path=cfg.network_path)
        return synth_city(rows=config.CITY_ROWS, cols=config.CITY_COLS, seed=config.CITY_SEED)

    def _tasks(self, *, cfg: ExperimentConfig, network: StreetNetwork) -> list[OtaTask]:
        if cfg.mode not in (OtaMode.OTA_STREET, OtaMode.OTA_GENERAL):
            raise ConfigurationException(
                f"--mode selects the triggered variant, got {cfg.mode.value}"
            )

        alpha = cfg.alphas[0]
        gammas = sorted(set(cfg.gamma_triggers or config.OTA_GAMMAS))
        # offline and all-step never read gamma
        variants = [
            (OtaMode.OFFLINE, None),
            *((cfg.mode, gamma) for gamma in gammas),
            (OtaMode.ALL_STEP, None),
        ]
        tasks = []
        for n_vehicles, n_demands in cfg.scales or config.OTA_SCALES:
            if n_vehicles < n_demands:
                raise ConfigurationException(
                    f"{n_vehicles} vehicles cannot serve {n_demands} demands"
                )
            for trial in range(cfg.trials):
                placement = place_agents(
                    network=network,
                    n_vehicles=n_vehicles,
                    n_demands=n_demands,
                    seed=cfg.seed + trial,
                )
                for mode, gamma in variants:
                    tasks.append(
                        OtaTask(
                            network=network,
                            vehicles=placement.vehicles,
                            demands=placement.demands,
                            trial=trial,
                            seed=cfg.seed + trial,
                            mode=mode,
                            gamma_trigger=gammas[len(gammas) // 2] if gamma is None else gamma,
                            alpha=alpha,
                        )
                    )
        return tasks

    def run(self, *, cfg: ExperimentConfig) -> list[Path]:
        with self.uow:
            network = self._network(cfg=cfg)
            tasks = self._tasks(cfg=cfg, network=network)
            logger.info(
                "ota-compare: %s simulations on %s worker(s)", len(tasks), cfg.workers
            )

            # results come back in task order whatever the worker count
            if cfg.workers > 1:
                with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                    ota_runs = list(pool.map(_ota_task, tasks))
            else:
                ota_runs = [_ota_task(task) for task in tasks]

            rows = []
            result_repo = self.uow.get_result_repo()
            for task, run in zip(tasks, ota_runs):
                triggered = task.mode in (OtaMode.OTA_STREET, OtaMode.OTA_GENERAL)
                row = {
                    "vehicles": len(task.vehicles),
                    "demands": len(task.demands),
                    "trial": task.trial,
                    "seed": task.seed,
                    "mode": task.mode.value,
                    "gamma": task.gamma_trigger if triggered else None,
                    "arrival_time": run.arrival_time,
                    "assignment_count": run.assignment_count,
                    "steps": len(run.step_intervals),
                    "completed": run.completed,
                }
                if cfg.timings:
                    row["wall_s"] = run.wall_time
                rows.append(row)

                suffix = f"_g{task.gamma_trigger:g}" if triggered else ""
                result_repo.add_events(
                    name=(
                        f"runs/r{len(task.vehicles)}_n{len(task.demands)}/"
                        f"trial{task.trial:02d}_{task.mode.value}{suffix}.ndjson"
                    ),
                    events=run.events,
                    config=cfg,
                )

            frame = pd.DataFrame(rows)
            result_repo.add_table(name="ota_runs.csv", frame=frame, config=cfg)
            result_repo.add_table(name="ota_summary.csv", frame=self._summary(frame), config=cfg)
            self.uow.get_network_repo().add_one(name="network.json", network=network)
            return self.uow.commit()

    @staticmethod
    def _summary(frame: pd.DataFrame) -> pd.DataFrame:
        return (
            frame.groupby(["vehicles", "demands", "mode", "gamma"], dropna=False, sort=True)
            .agg(
                runs=("trial", "size"),
                arrival_time=("arrival_time", "mean"),
                assignment_count=("assignment_count", "mean"),
                completion_rate=("completed", "mean"),
            )
            .reset_index()
        )


class SolveService(BaseExperimentService):
    def __init__(self, *, uow: BaseUnitOfWork):
        self.uow = uow

    def run(self, *, cfg: ExperimentConfig) -> list[Path]:
        if cfg.instance_path is None:
            raise ConfigurationException("solve needs an instance file")

        with self.uow:
            return self._run(cfg=cfg, instance_path=cfg.instance_path)

    def _run(self, *, cfg: ExperimentConfig, instance_path: Path) -> list[Path]:
        instance = self.uow.get_instance_repo().get_one(path=instance_path)
        ground_set, matroid, gamma = _problem(instance)
        gamma_cap = cfg.gamma_cap or gamma
        n_samples, epsilon = _sampling(cfg=cfg, gamma_cap=gamma_cap)
        table = _table(
            instance=instance, n_samples=n_samples, seed=cfg.seed, exact=cfg.exact
        )
        if cfg.exact:
            n_samples, epsilon = table.n_samples, 0.0

        params = _params(
            alpha=cfg.alphas[0],
            gamma_cap=gamma_cap,
            delta_step=cfg.delta_step or config.DELTA_STEP,
            epsilon=epsilon,
            delta_conf=cfg.delta_conf,
        )
        run = _solve_alpha(
            table=table,
            matroid=matroid,
            ground_set=ground_set,
            params=params,
            n_samples=n_samples,
        )
        report = SolveReportDTO(
            instance=instance.version,
            n_samples=n_samples,
            exact=cfg.exact,
            params=params,
            result=run.result,
            certificate=run.certificate,
            curvature=run.curvature,
            eval_bound=run.eval_bound,
        )

        self.uow.get_result_repo().add_document(
            name="solution.json", document=report, config=cfg
        )
        return self.uow.commit()


class BaseGenerateService(ABC):
    @abstractmethod
    def __init__(self, *, uow: BaseUnitOfWork):
        pass

    @abstractmethod
    def run(self, *, cfg: GenerateConfig) -> list[Path]:
        pass


class GenerateService(BaseGenerateService):
    def __init__(self, *, uow: BaseUnitOfWork):
        self.uow = uow

    def run(self, *, cfg: GenerateConfig) -> list[Path]:
        with self.uow:
            if cfg.kind == "city":
                network = synth_city(
                    rows=cfg.rows or config.CITY_ROWS,
                    cols=cfg.cols or config.CITY_COLS,
                    seed=cfg.seed,
                    diagonals=cfg.diagonals,
                )
                self.uow.get_network_repo().add_one(name="network.json", network=network)
            elif cfg.kind == "mod":
                instance = mod_generate(
                    n_demands=cfg.n_demands or config.MOD_N_DEMANDS,
                    n_vehicles=cfg.n_vehicles or config.MOD_N_VEHICLES,
                    seed=cfg.seed,
                )
                self.uow.get_instance_repo().add_one(name="instance.json", instance=instance)
            else:
                instance = coverage_generate(
                    width=config.COVERAGE_WIDTH,
                    height=config.COVERAGE_HEIGHT,
                    obstacles=config.COVERAGE_OBSTACLES,
                    n_candidates=cfg.n_candidates or config.COVERAGE_N_CANDIDATES,
                    budget=cfg.budget or config.COVERAGE_BUDGET,
                    seed=cfg.seed,
                )
                self.uow.get_instance_repo().add_one(name="instance.json", instance=instance)
            return self.uow.commit()
