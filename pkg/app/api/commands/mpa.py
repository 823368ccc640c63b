import click

from app.api.commands.common import execute, experiment_options


@click.command("mpa")
@experiment_options
def command(config_path, out, seed, quiet):
    """Mountain-pass path deformation followed by descent."""
    execute("mpa", config_path, out, seed, quiet)
