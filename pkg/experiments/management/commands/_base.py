import logging
import sys

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError
from django.utils import timezone

from experiments.config import load_experiment_config
from experiments.services import Outcome, finish, record_run

logger = logging.getLogger(__name__)

# Failures a run can end in; anything else is a bug and keeps its traceback.
RUN_ERRORS = (ImproperlyConfigured, ValueError, ArithmeticError, LookupError, OSError)


class ExperimentCommand(BaseCommand):
    """Loads the config, runs ``execute_run`` and records the outcome."""

    command_name = ""
    config_required = True

    def add_arguments(self, parser):
        parser.add_argument(
            "config",
            nargs=None if self.config_required else "?",
            help="Path to the experiment's YAML config.",
        )

    def load_config(self, options):
        path = options.get("config")
        if path is None:
            return None
        try:
            return load_experiment_config(path)
        except ImproperlyConfigured as exc:
            raise CommandError(f"Bad config: {exc}") from exc

    def execute_run(self, config, options) -> Outcome:
        raise NotImplementedError

    def handle(self, *args, **options):
        config = self.load_config(options)
        started_at = timezone.now()
        try:
            outcome = self.execute_run(config, options)
        except RUN_ERRORS as exc:
            if config is not None:
                failed = Outcome(
                    directory=config.output_dir(self.command_name),
                    passed=False,
                    summary={"error": str(exc)},
                )
                record_run(self.command_name, config, failed, started_at=started_at)
            raise CommandError(f"{self.command_name} failed: {exc}") from exc

        finish(self.command_name, config, outcome, started_at, argv=sys.argv)
        for key, value in outcome.summary.items():
            self.stdout.write(f"{key}: {value}")
        for path in outcome.artifacts:
            self.stdout.write(f"wrote {path}")
        if not outcome.passed:
            raise CommandError(
                f"{self.command_name} finished with failures; see {outcome.directory}"
            )
        self.stdout.write(
            self.style.SUCCESS(
                f"{self.command_name.capitalize()} done; manifest at {outcome.manifest}"
            )
        )
