"""Command line entry point: ``richardson <subcommand> --config FILE [--key value ...]``.

Exit codes: 0 success, 1 usage or configuration error, 2 capacity exceeded,
3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import CapacityError, InvalidInputError, RichardsonError
from .harness import COMMANDS, EXPERIMENT_KEYS, COMMON_KEYS, RunConfig, run_experiment
from .parallel import ReplicaError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAPACITY = 2
EXIT_MISMATCH = 3

log = logging.getLogger("richardson")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="richardson", allow_abbrev=False,
                description="Richardson growth and competition experiments.")
    sub = p.add_subparsers(dest="command", metavar="<subcommand>", parser_class=_Parser)
    sub.required = True
    for name, fn in COMMANDS.items():
        keys = ", ".join(sorted({**COMMON_KEYS, **EXPERIMENT_KEYS[name]}))
        sp = sub.add_parser(name, allow_abbrev=False, help=(fn.__doc__ or "").strip().splitlines()[0]
                            if fn.__doc__ else name,
                            description=f"Keys: {keys}. Any key may be given as --key value.")
        sp.add_argument("--config", metavar="FILE", help="flat key = value file")
        sp.add_argument("--no-write", action="store_true", help="run without writing files")
    return p


def _overrides(extra: list) -> dict:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise InvalidInputError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise InvalidInputError(f"missing value for --{key}")
            value = extra[i + 1]
            i += 2
        out[key.replace("-", "_")] = value
    return out


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = RunConfig.load(args.command, args.config, _overrides(extra))
        rec = run_experiment(cfg, write=not args.no_write)
    except CapacityError as exc:
        log.error("capacity exceeded: %s", exc)
        return EXIT_CAPACITY
    except ReplicaError as exc:
        if isinstance(exc.__cause__, CapacityError):
            log.error("capacity exceeded: %s", exc)
            return EXIT_CAPACITY
        log.error("aborted: %s", exc)
        return EXIT_USAGE
    except (RichardsonError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    if not args.no_write:
        log.info("wrote %s.csv and %s.json in %s", cfg.stem, cfg.stem, cfg.output_dir)
    if rec.exit_code == EXIT_MISMATCH:
        log.error("oracle mismatch: at least one vertex deviates by more than %s SE",
                  cfg["threshold"])
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
