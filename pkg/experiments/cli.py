import sys

from django.core.management import call_command
from django.core.management.base import CommandError

SUBCOMMANDS = ("solve", "simulate", "verify", "bench", "validate")


def run_command(argv, stdout=None, stderr=None) -> int:
    """
    Runs ``[subcommand, *arguments]`` and returns the process exit code:
    0 on success, 1 with a diagnostic on stderr otherwise.
    """
    stderr = stderr or sys.stderr
    if not argv or argv[0] not in SUBCOMMANDS:
        name = argv[0] if argv else ""
        stderr.write(
            f"unknown subcommand {name!r}; expected one of {', '.join(SUBCOMMANDS)}\n"
        )
        return 1
    try:
        call_command(*argv, stdout=stdout or sys.stdout, stderr=stderr)
    except CommandError as exc:
        stderr.write(f"{argv[0]}: {exc}\n")
        return 1
    return 0
