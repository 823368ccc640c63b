import click

from app.api.commands.common import execute, experiment_options


@click.command("check-nl")
@experiment_options
def command(config_path, out, seed, quiet):
    """Sampled hypothesis report for the configured nonlinearity."""
    execute("check-nl", config_path, out, seed, quiet)
