import click

from app.api.commands.common import execute, experiment_options


@click.command("solve")
@experiment_options
def command(config_path, out, seed, quiet):
    """Run the configured solver method."""
    execute("solve", config_path, out, seed, quiet)
