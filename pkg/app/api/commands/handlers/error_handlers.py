import json

import click

from app.models.errors import KGMError


def solver_error_handler(exc: KGMError) -> int:
    click.echo(
        json.dumps({
            "error": exc.code,
            "message": exc.message,
            "key": exc.key
        }),
        err=True
    )
    return exc.exit_code
