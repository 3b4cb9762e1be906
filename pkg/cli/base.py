import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import (
    DegenerateDataError, IngestionError, InvalidConfigError, InvalidInputError, SamplingError, error_message,
)

from .experiments import load_run_config

logger = logging.getLogger(__name__)

CONFIG_ERROR = 1
DATA_ERROR = 2
RUNTIME_ERROR = 3

DATA_ERRORS = (IngestionError, DegenerateDataError, SamplingError, InvalidInputError)


class EngineCommand(BaseCommand):
    """Shared flags, exit codes and stdout discipline for the engine commands.

    Subclasses implement run(**options). Standard output only ever receives
    key=value lines written through emit(); diagnostics go through logging or
    the CommandError Django prints on standard error.
    """

    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--config', help="run config JSON (SimulationConfig)")
        parser.add_argument('--data', help="raw dataset CSV or prepared population JSON")
        parser.add_argument('--dataset', help="schema name for a raw CSV: adult or compas")
        parser.add_argument('--synthetic', action='store_true', help="synthesize the population instead")
        parser.add_argument('--out', help="output directory")
        parser.add_argument('--seed', type=int, help="overrides the config seed")
        parser.add_argument('--race-blind', action='store_true',
                            help="drop the protected attribute from the classifier features")

    def output_dir(self, options):
        return Path(options.get("out") or settings.NWP_OUTPUT_DIR / self.command_name)

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def emit(self, **pairs):
        self.stdout.write(' '.join(f"{key}={value}" for key, value in pairs.items()))

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except CommandError:
            raise
        except InvalidConfigError as exc:
            raise CommandError(error_message(exc), returncode=CONFIG_ERROR) from exc
        except DATA_ERRORS as exc:
            raise CommandError(error_message(exc), returncode=DATA_ERROR) from exc
        except Exception as exc:
            logger.debug("%s failed", self.command_name, exc_info=True)
            raise CommandError(f"runtime failure: {exc}", returncode=RUNTIME_ERROR) from exc

    def run(self, **options):
        raise NotImplementedError('subclasses of EngineCommand must provide a run() method')

    def run_config(self, options):
        return load_run_config(options.get('config'), options.get('seed'), settings.NWP_DEFAULT_SEED)
