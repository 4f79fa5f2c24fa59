from pathlib import Path

import click

from cvarselect.settings.config import config


def parse_floats(ctx: click.Context, param: click.Parameter, value: str | None) -> list[float] | None:
    if value is None:
        return None
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated numbers, got {value!r}")


def parse_scales(
    ctx: click.Context, param: click.Parameter, value: tuple[str, ...]
) -> list[tuple[int, int]]:
    scales = []
    for item in value:
        vehicles, sep, demands = item.lower().partition("x")
        if not sep or not vehicles.isdigit() or not demands.isdigit():
            raise click.BadParameter(f"expected VEHICLESxDEMANDS, got {item!r}")
        scales.append((int(vehicles), int(demands)))
    return scales


def default_out(study: str) -> Path:
    return Path(config.OUTPUT_DIR_RELATIVE) / study


seed_option = click.option("--seed", type=int, default=0, show_default=True)
ns_option = click.option("--ns", "n_samples", type=int, default=None, help="Scenario count n_s.")
eps_option = click.option("--eps", "epsilon", type=float, default=None, help="DKW accuracy epsilon.")
delta_conf_option = click.option("--delta-conf", type=float, default=None, help="DKW confidence delta.")
gamma_cap_option = click.option("--gamma-cap", type=float, default=None, help="Utility cap Gamma.")
delta_step_option = click.option("--delta-step", type=float, default=None, help="Grid step Delta.")
out_option = click.option("--out", "output_dir", type=click.Path(path_type=Path), default=None)
exact_option = click.option(
    "--exact", is_flag=True, help="Enumerate every outcome instead of sampling."
)
plot_data_option = click.option(
    "--plot-data", is_flag=True, help="Also write gnuplot-friendly .dat files."
)
timings_option = click.option("--timings", is_flag=True, help="Add wall-time columns.")
