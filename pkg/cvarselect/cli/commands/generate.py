from pathlib import Path

import click

from cvarselect.cli.commands.options import default_out, out_option, seed_option
from cvarselect.cli.deps import get_generate_service
from cvarselect.cli.errors import exit_codes
from cvarselect.models.experiment import GenerateConfig


@click.command("gen-instance")
@click.argument("kind", type=click.Choice(["mod", "coverage"]))
@seed_option
@click.option("--demands", "n_demands", type=int, default=None)
@click.option("--vehicles", "n_vehicles", type=int, default=None)
@click.option("--candidates", "n_candidates", type=int, default=None)
@click.option("--budget", type=int, default=None)
@out_option
def gen_instance(
    kind: str,
    seed: int,
    n_demands: int | None,
    n_vehicles: int | None,
    n_candidates: int | None,
    budget: int | None,
    output_dir: Path | None,
):
    """Write a seeded assignment or coverage instance file."""
    with exit_codes():
        cfg = GenerateConfig(
            kind=kind,
            seed=seed,
            n_demands=n_demands,
            n_vehicles=n_vehicles,
            n_candidates=n_candidates,
            budget=budget,
            output_dir=output_dir or default_out("instances"),
        )
        written = get_generate_service(root=cfg.output_dir).run(cfg=cfg)
    for path in written:
        click.echo(str(path))


@click.command("gen-city")
@seed_option
@click.option("--rows", type=int, default=None)
@click.option("--cols", type=int, default=None)
@click.option("--diagonals", type=int, default=0, show_default=True)
@out_option
def gen_city(
    seed: int,
    rows: int | None,
    cols: int | None,
    diagonals: int,
    output_dir: Path | None,
):
    """Write a seeded synthetic grid city."""
    with exit_codes():
        cfg = GenerateConfig(
            kind="city",
            seed=seed,
            rows=rows,
            cols=cols,
            diagonals=diagonals,
            output_dir=output_dir or default_out("city"),
        )
        written = get_generate_service(root=cfg.output_dir).run(cfg=cfg)
    for path in written:
        click.echo(str(path))
