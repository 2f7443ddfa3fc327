from experiments.management.commands._base import ExperimentCommand
from experiments.models import ExperimentRun
from experiments.services import bench_experiment


class Command(ExperimentCommand):
    help = "Time the seat-A planner over the configured sweep of h or k."

    command_name = ExperimentRun.COMMAND_BENCH

    def execute_run(self, config, options):
        return bench_experiment(config)
