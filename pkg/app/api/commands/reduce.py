import click

from app.api.commands.common import execute, experiment_options


@click.command("reduce")
@experiment_options
def command(config_path, out, seed, quiet):
    """Solve the electrostatic constraint for u0 and report energy quantities."""
    execute("reduce", config_path, out, seed, quiet)
