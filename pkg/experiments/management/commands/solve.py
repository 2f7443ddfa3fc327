from experiments.management.commands._base import ExperimentCommand
from experiments.models import ExperimentRun
from experiments.services import solve_experiment


class Command(ExperimentCommand):
    help = "Build the configured game, solve one seat's agent and write its policy."

    command_name = ExperimentRun.COMMAND_SOLVE

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--seat",
            choices=["a", "b"],
            help="Seat to solve for (default: the config's solve/seat, else a).",
        )

    def execute_run(self, config, options):
        return solve_experiment(config, seat=options.get("seat"))
