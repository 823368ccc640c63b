import logging

import click

from app.core.config import LOG_LEVEL

from app.api.commands import (
    check_nl,
    mpa,
    nehari,
    reduce,
    solve,
    truncate
)

logging.basicConfig(
    level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


@click.group()
@click.version_option("1.0.0", prog_name="kgm-solver")
def cli():
    """Variational solver for Klein-Gordon-Maxwell standing waves."""


cli.add_command(reduce.command)
cli.add_command(solve.command)
cli.add_command(mpa.command)
cli.add_command(nehari.command)
cli.add_command(truncate.command)
cli.add_command(check_nl.command)

if __name__ == "__main__":
    cli()
