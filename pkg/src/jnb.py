import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import click
from pydantic import ValidationError

import config as config
from empirical import DatasetError
from entry import RunConfig, empirical_entry, simulate_entry, sweep_entry
from utils import format_validation_error, load_json_config, number_list, parse_utc_hour

CONTEXT_SETTINGS = dict(help_option_names=['-h', '--help'])

_BLOCKS = {"simulate": "params", "sweep": "grid", "empirical": "empirical"}


def _resolve_config(mode: str, config_path, block: Dict[str, Any], top: Dict[str, Any],
                    drop: Tuple[str, ...] = ()) -> RunConfig:
    """Merge the JSON config file with command-line flags; flags win."""
    data = load_json_config(config_path)
    if data.get("mode", mode) != mode:
        raise click.UsageError(f"Config file is for mode '{data['mode']}', not '{mode}'")
    data["mode"] = mode

    block_key = _BLOCKS[mode]
    if not isinstance(data.get(block_key) or {}, dict):
        raise click.UsageError(f"Config field '{block_key}' must be a JSON object")
    merged = dict(data.get(block_key) or {})
    for key, value in block.items():
        if value is not None:
            merged[key] = value
    for key in drop:
        merged.pop(key, None)
    data[block_key] = merged
    for key, value in top.items():
        if value is not None:
            data[key] = value

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        message = format_validation_error(e)
        logging.error("Invalid %s configuration: %s", mode, message)
        raise click.UsageError(f"Invalid configuration:\n{message}")


def _execute(entry: Callable[[RunConfig], List[str]], run_config: RunConfig) -> None:
    try:
        outputs = entry(run_config)
    except DatasetError as e:
        logging.error("Dataset rejected: %s", e)
        raise click.ClickException(f"Invalid input data: {e}")
    except (FileExistsError, NotADirectoryError) as e:
        logging.error(str(e))
        raise click.ClickException(str(e))
    except OSError as e:
        logging.error("Could not write outputs: %s", e, exc_info=True)
        raise click.ClickException(f"Could not write outputs: {e}")
    click.secho(f"Wrote {len(outputs)} files to {run_config.output_dir}", fg="green")


def output_options(f):
    f = click.option("--overwrite/--no-overwrite", default=None,
                     help="Replace existing output files")(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="JSON configuration file; flags override its values")(f)
    f = click.option("-o", "--output-dir", type=click.Path(file_okay=False, path_type=Path),
                     help="Directory receiving the output files")(f)
    return f


@click.command(context_settings=CONTEXT_SETTINGS)
@output_options
@click.option("--alpha", type=float, help="Trendiness boost (>= 0)")
@click.option("--n", type=int, help="Number of simultaneous attention matters (>= 2)")
@click.option("--c", type=float, help="Noise-size parameter (> 0), larger is less noise")
@click.option("--iterations", type=int, help="Total iterations, initialization included (>= 2)")
@click.option("--seed", type=int, help="Seed of the run's random stream")
@click.option("--burn-in", type=int, help=f"Iterations ignored by the metrics (default {config.DEFAULT_BURN_IN})")
def simulate(output_dir, config_path, overwrite, alpha, n, c, iterations, seed, burn_in):
    """
    Run one arena simulation and write trace.csv, events.csv and summary.json.

    Example:

        jnb simulate -o out --alpha 2 --n 20 --c 12 --iterations 10000 --seed 1
    """
    run_config = _resolve_config(
        "simulate", config_path,
        block={"alpha": alpha, "n": n, "c": c, "iterations": iterations, "seed": seed, "burn_in": burn_in},
        top={"output_dir": output_dir, "overwrite": overwrite},
    )
    _execute(simulate_entry, run_config)


@click.command(context_settings=CONTEXT_SETTINGS)
@output_options
@click.option("--alphas", callback=number_list(float), help="Comma-separated trendiness boosts")
@click.option("--ns", callback=number_list(int), help="Comma-separated population sizes")
@click.option("--cs", callback=number_list(float), help="Comma-separated noise-size parameters")
@click.option("--iterations", type=int, help=f"Iterations per run (default {config.DEFAULT_ITERATIONS})")
@click.option("--burn-in", type=int, help=f"Iterations ignored by the metrics (default {config.DEFAULT_BURN_IN})")
@click.option("--seeds", "seed_count", type=int, help=f"Number of seeds per cell (default {config.DEFAULT_SEED_COUNT})")
@click.option("--base-seed", type=int, help="First seed; seeds are base, base+1, ...")
@click.option("--workers", type=int, help="Parallel worker processes (default 1)")
@click.option("--emit-stackplots", "emit_stackplots", type=int, metavar="MAX_T",
              help="Also write the first MAX_T iterations of each cell's first seed")
def sweep(output_dir, config_path, overwrite, alphas, ns, cs, iterations, burn_in, seed_count, base_seed,
          workers, emit_stackplots):
    """
    Run a parameter grid over several seeds and write aggregate.csv and trends.csv.

    Without --config the grid defaults to alpha 0..3 step 0.25, n in {10, 20, 50}, c = 12,
    10000 iterations and 20 seeds.
    """
    block = {"alphas": alphas, "ns": ns, "cs": cs, "iterations": iterations, "burn_in": burn_in,
             "seed_count": seed_count, "base_seed": base_seed}
    if config_path is None:
        defaults = {"alphas": config.DEFAULT_ALPHAS, "ns": config.DEFAULT_NS, "cs": config.DEFAULT_CS}
        block = {k: (defaults[k] if v is None and k in defaults else v) for k, v in block.items()}
    run_config = _resolve_config(
        "sweep", config_path,
        block=block,
        top={"output_dir": output_dir, "overwrite": overwrite, "workers": workers,
             "emit_stackplots": emit_stackplots},
        # generated seeds replace an explicit list from the config file
        drop=("seeds",) if seed_count is not None or base_seed is not None else (),
    )
    _execute(sweep_entry, run_config)


@click.command(context_settings=CONTEXT_SETTINGS)
@output_options
@click.option("--input", "input_path", type=click.Path(dir_okay=False, path_type=Path),
              help="CSV with columns channel_id,video_id,published_at,t_hour,views")
@click.option("--min-videos", type=int, help="Skip channels with fewer videos (default 1)")
@click.option("--min-concurrent", type=int, help="Skip channels never having this many videos live at once")
@click.option("--min-observed-hours", type=int,
              help=f"Videos observed for fewer hours get no lifecycle (default {config.FIRST_WEEK_HOURS})")
@click.option("--until", callback=lambda ctx, p, v: parse_utc_hour(v),
              help="Ignore views after this UTC hour, e.g. 2020-03-14T23:00:00Z")
def empirical(output_dir, config_path, overwrite, input_path, min_videos, min_concurrent, min_observed_hours,
              until):
    """
    Analyze hourly view counts per channel: lifecycle, peak-hour share, Gini and profiles.
    """
    run_config = _resolve_config(
        "empirical", config_path,
        block={"input": input_path, "min_videos": min_videos, "min_concurrent": min_concurrent,
               "min_observed_hours": min_observed_hours, "until": until},
        top={"output_dir": output_dir, "overwrite": overwrite},
    )
    _execute(empirical_entry, run_config)


@click.version_option(version=config.VERSION, prog_name='Junk News Bubbles')
@click.group(context_settings=CONTEXT_SETTINGS,
             help=f'''
                      Junk News Bubbles {config.VERSION}

                      Simulates attention competition in a public arena where trendiness
                      feeds back into visibility, and measures the same statistics on
                      hourly view counts of real channels.
                    ''')
def cli():
    logging.basicConfig(filename=config.LOG_FILE,
                        format="%(asctime)s.%(msecs)03d | %(levelname)s | %(threadName)s | %(message)s",
                        datefmt="%Y-%m-%d | %H:%M:%S",
                        encoding="utf-8",
                        level=logging.DEBUG if config.DEBUG else logging.INFO)

    logging.info(f" ***** Junk News Bubbles {config.VERSION} starts *****")


cli.add_command(simulate)
cli.add_command(sweep)
cli.add_command(empirical)


def main():
    cli()


if __name__ == '__main__':
    main()
