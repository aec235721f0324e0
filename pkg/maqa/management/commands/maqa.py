"""
python manage.py maqa <mode> [--config PATH] [--seed N] [--out DIR] [--tolerance T] [--d a..b]

Exit codes: 0 success, 1 invalid config or spec, 2 tolerance check failed.
"""

from django.core.management.base import BaseCommand, CommandError

from maqa.config import MODES, check_seed, default_config, parse_config, parse_d_values
from maqa.exceptions import MaqaError
from maqa.runner import EXIT_INVALID, run_command


class Command(BaseCommand):
    help = "Run an aggregation experiment and write its JSON/CSV reports."

    def add_arguments(self, parser):
        parser.add_argument("mode", nargs="?", choices=MODES, help="Experiment mode")
        parser.add_argument("--mode", dest="mode_flag", choices=MODES, help="Same as the positional mode")
        parser.add_argument("--config", help="Path to a JSON experiment config")
        parser.add_argument("--seed", type=int, help="Seed (falls back to the config, then MAQA_SEED)")
        parser.add_argument("--out", help="Output directory for reports")
        parser.add_argument("--tolerance", type=float, help="Quantum/oracle tolerance (default 1e-9)")
        parser.add_argument("--d", dest="d_range", help="d values for resources mode, e.g. 1..8")

    def handle(self, *args, **options):
        mode = options.get("mode") or options.get("mode_flag")
        config_path = options.get("config")

        try:
            if config_path:
                config = parse_config(config_path)
                if mode and mode != config.mode:
                    raise CommandError(
                        f"Mode '{mode}' does not match config mode '{config.mode}'",
                        returncode=EXIT_INVALID,
                    )
            elif mode in ("verify-appendix", "resources"):
                config = default_config(mode)
            else:
                raise CommandError(
                    "A --config file is required for this mode" if mode else "No mode given",
                    returncode=EXIT_INVALID,
                )
            d_values = parse_d_values(options["d_range"]) if options.get("d_range") else None
            if options.get("seed") is not None:
                check_seed(options["seed"], field="--seed")
        except (MaqaError, ValueError) as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID)

        try:
            outcome = run_command(
                config,
                seed=options.get("seed"),
                out_dir=options.get("out"),
                tolerance=options.get("tolerance"),
                d_values=d_values,
            )
        except MaqaError as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID)
        except OSError as exc:
            raise CommandError(f"Could not write reports: {exc}", returncode=EXIT_INVALID)

        for path in outcome["files"]:
            self.stdout.write(f"wrote {path}")
        if outcome["exit_code"]:
            raise CommandError(outcome["message"], returncode=outcome["exit_code"])
        self.stdout.write(self.style.SUCCESS(outcome["message"]))
