from pathlib import Path

import click

from cvarselect.cli.commands.options import (
    default_out,
    delta_conf_option,
    delta_step_option,
    eps_option,
    exact_option,
    gamma_cap_option,
    ns_option,
    out_option,
    parse_floats,
    parse_scales,
    plot_data_option,
    seed_option,
    timings_option,
)
from cvarselect.cli.deps import (
    get_coverage_service,
    get_mod_offline_service,
    get_ota_compare_service,
)
from cvarselect.cli.errors import exit_codes
from cvarselect.models.experiment import ExperimentConfig
from cvarselect.models.streetnet import OtaMode
from cvarselect.settings.config import config

alpha_grid_option = click.option(
    "--alpha-grid",
    callback=parse_floats,
    default=None,
    help="Comma separated risk levels, e.g. 0.1,0.5,1.",
)
instance_option = click.option(
    "--instance", "instance_path", type=click.Path(path_type=Path), default=None
)


def _report(written: list[Path]) -> None:
    for path in written:
        click.echo(str(path))


@click.command("mod-offline")
@seed_option
@alpha_grid_option
@ns_option
@eps_option
@delta_conf_option
@gamma_cap_option
@delta_step_option
@instance_option
@plot_data_option
@timings_option
@out_option
def mod_offline(
    seed: int,
    alpha_grid: list[float] | None,
    n_samples: int | None,
    epsilon: float | None,
    delta_conf: float | None,
    gamma_cap: float | None,
    delta_step: float | None,
    instance_path: Path | None,
    plot_data: bool,
    timings: bool,
    output_dir: Path | None,
):
    """Vehicle-to-demand assignment over a risk-level grid."""
    with exit_codes():
        cfg = ExperimentConfig(
            study="mod-offline",
            seed=seed,
            alphas=alpha_grid or config.ALPHA_GRID,
            n_samples=n_samples,
            epsilon=epsilon,
            delta_conf=delta_conf,
            gamma_cap=gamma_cap,
            delta_step=delta_step,
            instance_path=instance_path,
            plot_data=plot_data,
            timings=timings,
            output_dir=output_dir or default_out("mod-offline"),
        )
        written = get_mod_offline_service(root=cfg.output_dir).run(cfg=cfg)
    _report(written)


@click.command("coverage")
@seed_option
@alpha_grid_option
@ns_option
@eps_option
@delta_conf_option
@gamma_cap_option
@delta_step_option
@instance_option
@exact_option
@plot_data_option
@timings_option
@out_option
def coverage(
    seed: int,
    alpha_grid: list[float] | None,
    n_samples: int | None,
    epsilon: float | None,
    delta_conf: float | None,
    gamma_cap: float | None,
    delta_step: float | None,
    instance_path: Path | None,
    exact: bool,
    plot_data: bool,
    timings: bool,
    output_dir: Path | None,
):
    """Sensor placement with failing sensors over a risk-level grid."""
    with exit_codes():
        cfg = ExperimentConfig(
            study="coverage",
            seed=seed,
            alphas=alpha_grid or config.ALPHA_GRID,
            n_samples=n_samples,
            epsilon=epsilon,
            delta_conf=delta_conf,
            gamma_cap=gamma_cap,
            delta_step=delta_step,
            instance_path=instance_path,
            exact=exact,
            plot_data=plot_data,
            timings=timings,
            output_dir=output_dir or default_out("coverage"),
        )
        written = get_coverage_service(root=cfg.output_dir).run(cfg=cfg)
    _report(written)


@click.command("ota-compare")
@seed_option
@click.option("--alpha", type=float, default=config.OTA_ALPHA, show_default=True)
@click.option(
    "--gamma-trigger",
    "gamma_triggers",
    type=float,
    multiple=True,
    help="Triggering ratio; repeat for several. Defaults to 0.3, 0.5 and 0.7.",
)
@click.option(
    "--mode",
    type=click.Choice([OtaMode.OTA_STREET.value, OtaMode.OTA_GENERAL.value]),
    default=OtaMode.OTA_STREET.value,
    show_default=True,
)
@click.option("--scale", "scales", multiple=True, callback=parse_scales, help="e.g. 6x4")
@click.option("--trials", type=int, default=config.OTA_TRIALS, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--network", "network_path", type=click.Path(path_type=Path), default=None)
@timings_option
@out_option
def ota_compare(
    seed: int,
    alpha: float,
    gamma_triggers: tuple[float, ...],
    mode: str,
    scales: list[tuple[int, int]],
    trials: int,
    workers: int,
    network_path: Path | None,
    timings: bool,
    output_dir: Path | None,
):
    """Offline, triggered and every-step assignment on a street network."""
    with exit_codes():
        cfg = ExperimentConfig(
            study="ota-compare",
            seed=seed,
            alphas=[alpha],
            gamma_triggers=list(gamma_triggers) or config.OTA_GAMMAS,
            mode=OtaMode(mode),
            scales=scales or config.OTA_SCALES,
            trials=trials,
            workers=workers,
            network_path=network_path,
            timings=timings,
            output_dir=output_dir or default_out("ota-compare"),
        )
        written = get_ota_compare_service(root=cfg.output_dir).run(cfg=cfg)
    _report(written)
