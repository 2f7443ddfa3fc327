import logging

from django.core.management.base import BaseCommand, CommandError

from posg.exceptions import ModelError, ModelFormatError
from posg.serializer import load_model
from posg.validation import validate_model

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Lint a model file: parse it and check every distribution it holds."

    def add_arguments(self, parser):
        parser.add_argument("path", help="Model file in the posg-model format.")
        parser.add_argument(
            "--renormalize-tolerance",
            type=float,
            default=None,
            help="Largest row-sum drift silently renormalized on load.",
        )

    def handle(self, *args, **options):
        path = options["path"]
        try:
            model = load_model(path, options["renormalize_tolerance"])
        except ModelFormatError as exc:
            where = f"{path}:{exc.line}" if exc.line is not None else f"{path}:EOF"
            raise CommandError(f"{where}: {exc.reason}") from exc
        except ModelError as exc:
            raise CommandError(f"{path}: {exc}") from exc
        except OSError as exc:
            raise CommandError(f"Cannot read {path}: {exc}") from exc

        report = validate_model(model)
        if not report.is_valid:
            for line in report.text().splitlines():
                self.stderr.write(line)
            raise CommandError(f"{path}: {len(report)} violation(s)")
        self.stdout.write(
            self.style.SUCCESS(
                f"{path}: {model.name or 'model'} is valid "
                f"({model.n_states} states, {model.n_self}x{model.n_other} actions)"
            )
        )
