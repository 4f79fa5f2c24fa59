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
    seed_option,
)
from cvarselect.cli.deps import get_solve_service
from cvarselect.cli.errors import exit_codes
from cvarselect.models.experiment import ExperimentConfig


@click.command("solve")
@click.argument("instance_path", type=click.Path(path_type=Path))
@click.option("--alpha", type=float, required=True)
@seed_option
@ns_option
@eps_option
@delta_conf_option
@gamma_cap_option
@delta_step_option
@exact_option
@out_option
def solve(
    instance_path: Path,
    alpha: float,
    seed: int,
    n_samples: int | None,
    epsilon: float | None,
    delta_conf: float | None,
    gamma_cap: float | None,
    delta_step: float | None,
    exact: bool,
    output_dir: Path | None,
):
    """Run SGA on an instance file and write the solution with its certificate."""
    with exit_codes():
        cfg = ExperimentConfig(
            study="solve",
            seed=seed,
            alphas=[alpha],
            n_samples=n_samples,
            epsilon=epsilon,
            delta_conf=delta_conf,
            gamma_cap=gamma_cap,
            delta_step=delta_step,
            instance_path=instance_path,
            exact=exact,
            output_dir=output_dir or default_out("solve"),
        )
        written = get_solve_service(root=cfg.output_dir).run(cfg=cfg)
    for path in written:
        click.echo(str(path))
