import click

from app.api.commands.common import execute, experiment_options


@click.command("nehari")
@experiment_options
def command(config_path, out, seed, quiet):
    """Multi-seed minimization over the Nehari manifold."""
    execute("nehari", config_path, out, seed, quiet)
