from django.core.management.base import CommandError

from experiments.config import CHECKS
from experiments.management.commands._base import ExperimentCommand
from experiments.models import ExperimentRun
from experiments.services import run_check


class Command(ExperimentCommand):
    help = (
        "Run a named bound check and write one CSV per report; exits nonzero "
        "when a bound is violated."
    )

    command_name = ExperimentRun.COMMAND_VERIFY
    config_required = False

    def add_arguments(self, parser):
        parser.add_argument(
            "check",
            nargs="?",
            choices=CHECKS,
            help="Check to run (default: the config's verify/check).",
        )
        parser.add_argument(
            "--config",
            help="Experiment config supplying the model, seed and check options.",
        )
        parser.add_argument("--seed", type=int, help="Master seed (default: 0).")
        parser.add_argument("--trials", type=int, help="Policy-loss trials.")
        parser.add_argument(
            "--models", type=int, help="Models for the contraction and oracle checks."
        )
        parser.add_argument("--h", type=int, dest="h", help="Planning horizon.")
        parser.add_argument("--sweeps", type=int, help="Contraction sweeps.")

    def execute_run(self, config, options):
        check = options.get("check")
        if check is None and config is not None:
            check = config.verify.get("check")
        if check is None:
            raise CommandError("Name a check or give a config with verify/check.")
        overrides = {
            key: options[key]
            for key in ("trials", "models", "h", "sweeps")
            if options.get(key) is not None
        }
        return run_check(check, config=config, seed=options.get("seed"), **overrides)
