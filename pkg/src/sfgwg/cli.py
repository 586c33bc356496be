"""Command-line entry point.

Usage::

    sfgwg <command> --config run.json [--out DIR] [--loss-preset NAME] [--override key=value ...]

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

import argparse
import sys

from .config import apply_overrides, load_config
from .errors import ConfigurationError, NumericalError, SfgError
from .pipeline import COMMANDS, emit_artifacts, run_command

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sfgwg",
        description="Model a quasi-phasematched sum-frequency waveguide converter.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    parser.add_argument("--loss-preset", choices=("literature", "estimated", "lossless"),
                        help="restrict dynamics to one loss preset")
    parser.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field; VALUE is parsed as JSON when possible")
    return parser


def _summary(report):
    lines = []
    for name, q in report.quantities.items():
        v = q["value"]
        text = f"{v:.6g}" if isinstance(v, float) else str(v)
        lines.append(f"{name:40s} {text} {q['unit']}")
    for note in report.annotations:
        lines.append(f"note: {note['note']}")
    return "\n".join(lines)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        overrides = list(args.override)
        if args.loss_preset:
            overrides.append(f'loss_presets=["{args.loss_preset}"]')
        if overrides:
            config = apply_overrides(config, overrides)
        report = run_command(args.command, config)
        manifest = emit_artifacts(report, args.out or config.output_dir)
    except ConfigurationError as exc:
        print(f"sfgwg {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"sfgwg {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SfgError as exc:
        print(f"sfgwg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"sfgwg {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_summary(report))
    for entry in manifest:
        print(f"wrote {entry['path']}  sha256={entry['sha256'][:16]}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
