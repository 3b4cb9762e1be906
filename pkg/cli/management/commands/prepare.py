from cli.base import EngineCommand
from cli.manifest import finish_manifest, start_manifest, write_csv, write_json
from core.exceptions import InvalidConfigError
from core.seeding import derive_generator
from datasets.ingest import load_csv, load_schema, prepare_adult, prepare_compas, race_blind
from datasets.serializers import dump_population, population_frame


class Command(EngineCommand):
    help = "Filter or sample a raw dataset into a population file"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--n', type=int, help="adult: sample size, split evenly over the groups")
        parser.add_argument('--balance', help="adult: column to balance on; must be the schema group column")
        parser.add_argument('--max-age', type=int, default=35, help="compas filter: age <= max-age")
        parser.add_argument('--max-priors', type=int, default=3, help="compas filter: priors_count < max-priors")

    def run(self, **options):
        if not options.get('dataset'):
            raise InvalidConfigError("prepare needs --dataset adult|compas")
        if not options.get('data'):
            raise InvalidConfigError("prepare needs --data pointing at the raw CSV")
        schema = load_schema(options['dataset'])
        config = self.run_config(options)

        balance = options.get('balance')
        if balance is not None and balance != schema.group_column:
            raise InvalidConfigError(f"{schema.name} balances on {schema.group_column!r}, not {balance!r}")
        n = options.get('n') or config.population_size
        if schema.name == 'adult' and (n < 2 or n % 2):
            raise InvalidConfigError(f"--n must be a positive even number, got {n}")

        table = load_csv(options['data'], schema)
        if schema.name == 'adult':
            sample = prepare_adult(
                table, n, config.income_lo, config.income_hi, config.income_noise_sd,
                derive_generator(config.seed, 'population'), seed=config.seed,
            )
        else:
            sample = prepare_compas(
                table, options['max_age'], options['max_priors'], lo=config.income_lo, hi=config.income_hi,
            )
        if options.get('race_blind'):
            sample = race_blind(sample)

        manifest = start_manifest(
            self.command_name, self.output_dir(options), config.seed,
            config_path=options.get('config'), input_paths=[options['data']],
        )
        write_csv(manifest, 'population.csv', population_frame(sample))
        write_json(manifest, 'population.json', dump_population(sample))
        path = finish_manifest(manifest)

        self.emit(command=self.command_name, dataset=schema.name, rows=len(sample),
                  groups=','.join(f"{g}:{c}" for g, c in sorted(sample.group_counts().items())), manifest=path)
