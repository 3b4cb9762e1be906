from baseline.serializers import dump_comparator
from cli.base import EngineCommand
from cli.experiments import compare_simulations, compare_splits, load_sample, parse_methods
from cli.manifest import finish_manifest, start_manifest, write_csv, write_json
from metrics.serializers import dump_report, report_frame


class Command(EngineCommand):
    help = "Run several decision rules under one seed and tabulate their error rates"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--methods', default='none,nwp,ceo', help="comma-separated subset of none,nwp,ceo")
        parser.add_argument('--splits', type=int, help="labeled split protocol with this many seeded 70/30 splits")
        parser.add_argument('--max-age', type=int, default=35, help="compas filter: age <= max-age")
        parser.add_argument('--max-priors', type=int, default=3, help="compas filter: priors_count < max-priors")

    def run(self, **options):
        methods = parse_methods(options['methods'])
        config = self.run_config(options)
        sample = load_sample(
            config, options.get('data'), options.get('dataset'), options.get('synthetic'),
            max_age=options['max_age'], max_priors=options['max_priors'], blind=options.get('race_blind'),
        )

        manifest = start_manifest(
            self.command_name, self.output_dir(options), config.seed,
            config_path=options.get('config'), input_paths=[options['data']] if options.get('data') else (),
        )
        if options.get('splits') is not None:
            report, comparators = compare_splits(config, sample, methods, options['splits'])
            for k, comparator in enumerate(comparators, start=1):
                if comparator is not None:
                    write_json(manifest, f'comparator-split-{k}.json', dump_comparator(comparator))
        else:
            report, _, comparator = compare_simulations(config, sample, methods)
            if comparator is not None:
                write_json(manifest, 'comparator.json', dump_comparator(comparator))
        write_csv(manifest, 'report.csv', report_frame(report))
        write_json(manifest, 'report.json', dump_report(report))
        path = finish_manifest(manifest)

        self.emit(command=self.command_name, methods=','.join(methods), baseline=report.baseline,
                  axis=report.axis, rows=len(report.rows), seed=config.seed, manifest=path)
