import sys
from collections.abc import Iterator
from contextlib import contextmanager

import click
from pydantic import ValidationError

from cvarselect.exceptions import (
    ConfigurationException,
    EmptyInputException,
    EvaluationException,
    GenerationException,
    InstanceTooLargeException,
    InvalidElementException,
    MatroidViolationException,
    ParameterException,
    SchemaException,
    SimulationGuardException,
    StorageException,
    UnreachableException,
    ZeroSingletonException,
)

EXIT_CONFIG = 2
EXIT_INSTANCE = 3
EXIT_GUARD = 4


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {' '.join(message.split())}", err=True)
    sys.exit(code)


@contextmanager
def exit_codes() -> Iterator[None]:
    """Turns domain failures into a one-line message and a process exit code."""
    try:
        yield
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or e.title
        _fail(f"{location}: {first['msg']}", EXIT_CONFIG)
    except (
        ParameterException,
        ConfigurationException,
        EmptyInputException,
        ZeroSingletonException,
    ) as e:
        _fail(str(e), EXIT_CONFIG)
    except (
        SchemaException,
        StorageException,
        GenerationException,
        UnreachableException,
        MatroidViolationException,
        InvalidElementException,
        EvaluationException,
    ) as e:
        _fail(str(e), EXIT_INSTANCE)
    except (InstanceTooLargeException, SimulationGuardException) as e:
        _fail(str(e), EXIT_GUARD)
