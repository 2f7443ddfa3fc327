from django.core.management.base import CommandError

from experiments.management.commands._base import ExperimentCommand
from experiments.models import ExperimentRun
from experiments.services import simulate_experiment


class Command(ExperimentCommand):
    help = (
        "Run the configured tournament, intersection episodes or soccer match "
        "for every seed and write the CSVs."
    )

    command_name = ExperimentRun.COMMAND_SIMULATE

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--workers",
            type=int,
            help="Worker processes for tournaments (default: config, else setting).",
        )

    def execute_run(self, config, options):
        workers = options.get("workers")
        if workers is not None and workers < 1:
            raise CommandError("--workers must be a positive integer.")
        return simulate_experiment(config, workers=workers)
