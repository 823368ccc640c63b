import json
import logging
from typing import Optional

import click

from app.api.commands.handlers.error_handlers import solver_error_handler
from app.core.experiment import load_config, with_overrides
from app.models.errors import KGMError
from app.services.pipelines import run

logger = logging.getLogger(__name__)


OPTIONS = (
    click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                 help="INI experiment configuration."),
    click.option("--out", default=None, help="Output directory, overrides [output] dir."),
    click.option("--seed", type=int, default=None, help="RNG seed, overrides [solver] seed."),
    click.option("--quiet", is_flag=True, help="Only log warnings and errors."),
)


def experiment_options(func):
    for option in reversed(OPTIONS):
        func = option(func)
    return func


def execute(command: str, config_path: str, out: Optional[str], seed: Optional[int], quiet: bool) -> None:
    if quiet:
        logging.getLogger().setLevel(logging.WARNING)

    try:
        config = with_overrides(load_config(config_path), out=out, seed=seed)
        result = run(config, command)
    except KGMError as exc:
        logger.error(f"{command} failed: {exc.code} {exc.message}")
        click.get_current_context().exit(solver_error_handler(exc))

    click.echo(json.dumps({
        "command": result.command,
        "exit_code": result.exit_code,
        "failed": result.failed,
        "artifacts": result.artifacts
    }, sort_keys=True))
    click.get_current_context().exit(result.exit_code)
