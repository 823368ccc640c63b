import click

from app.api.commands.common import execute, experiment_options


@click.command("truncate")
@experiment_options
def command(config_path, out, seed, quiet):
    """Supercritical truncation ladder."""
    execute("truncate", config_path, out, seed, quiet)
