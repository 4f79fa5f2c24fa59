import logging

import click

from cvarselect.cli.commands.commands import commands
from cvarselect.settings.config import config


@click.group()
@click.option("--log-level", default=config.LOG_LEVEL, show_default=True)
def cli(log_level: str):
    """Risk-aware selection under matroid constraints."""
    logging.basicConfig(
        level=log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


for command in commands:
    cli.add_command(command)
