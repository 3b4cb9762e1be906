from cli.base import EngineCommand
from cli.experiments import load_sample
from cli.manifest import finish_manifest, start_manifest, write_csv, write_json
from core.exceptions import InvalidConfigError
from temporal.engine import run_simulation
from temporal.models import METHODS
from temporal.serializers import decision_frame, dump_trace, epoch_frame


class Command(EngineCommand):
    help = "Run the multi-epoch loan simulation and write its trace"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--method', default='nwp', help=f"decision rule: {', '.join(METHODS)}")

    def run(self, **options):
        method = options['method']
        if method not in METHODS:
            raise InvalidConfigError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
        config = self.run_config(options)
        sample = load_sample(config, options.get('data'), options.get('dataset'), options.get('synthetic'),
                             blind=options.get('race_blind'))

        manifest = start_manifest(
            self.command_name, self.output_dir(options), config.seed,
            config_path=options.get('config'), input_paths=[options['data']] if options.get('data') else (),
        )
        trace = run_simulation(config, sample, method=method)
        write_json(manifest, 'trace.json', dump_trace(trace))
        write_csv(manifest, 'epochs.csv', epoch_frame(trace))
        write_csv(manifest, 'decisions.csv', decision_frame(trace))
        path = finish_manifest(manifest)

        final = trace.records[-1]
        self.emit(command=self.command_name, method=method, seed=config.seed, epochs=len(trace.records),
                  log_nwp=f"{final.log_nwp:.6f}", combined_error=f"{final.error.combined:.4f}", manifest=path)
