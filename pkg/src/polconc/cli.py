"""Command-line entry point.

Exit status: 0 success, 2 config error, 3 state error, 4 protocol error.
Failures print a JSON error document (and write ``error.json`` to the
output directory when one is given).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import SCHEMA_VERSION, ExperimentConfig, load_config
from .errors import ConfigInvalid, PolconcError, ProtocolFailed, StateInvalid
from .runner import SCALAR_COLUMNS, rows_to_csv, run, sweep, to_json

SUBCOMMAND_MODES = {
    "concentrate-pure": "pure",
    "concentrate-mixed": "mixed",
    "vbs-compare": "vbs-compare",
    "tomography": "tomography",
    "simulate": "circuit",
    "sweep": None,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="master seed; overrides the config")
    common.add_argument("--out-dir", type=Path, help="directory for result files")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format")
    common.add_argument("--timing", action="store_true", help="include wall time in the JSON result")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="polconc", description="Linear-optical entanglement concentration")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_MODES:
        p = sub.add_parser(name, parents=[common])
        if name == "concentrate-pure":
            p.add_argument("--alpha", type=float, help="Schmidt angle of the input (radians), no config needed")
            p.add_argument("--beta", type=float, help="target Schmidt angle (radians)")
    return parser


def _config_dict(args) -> dict:
    if args.config is not None:
        d = load_config(args.config)
    elif args.command == "concentrate-pure" and args.alpha is not None:
        d = {"input_state": {"family": "pure-schmidt", "alpha": args.alpha}}
    else:
        raise ConfigInvalid("--config is required")
    if not isinstance(d, dict):
        raise ConfigInvalid("config document must be a JSON object")
    mode = SUBCOMMAND_MODES[args.command]
    if mode is not None:
        if d.get("mode", mode) != mode:
            raise ConfigInvalid(f"config mode {d.get('mode')!r} does not match subcommand {args.command!r}")
        d.setdefault("mode", mode)
    if getattr(args, "beta", None) is not None:
        d["beta"] = args.beta
    if args.seed is not None:
        d["seed"] = args.seed
    return d


def _emit(text: str, out_dir: Path | None, filename: str) -> None:
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / filename).write_text(text, encoding="utf-8")


def _execute(args) -> None:
    cfg = ExperimentConfig.from_dict(_config_dict(args))
    if args.command == "sweep":
        header, rows = sweep(cfg)
        if args.out_dir is not None:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            (args.out_dir / "sweep.csv").write_text(rows_to_csv(header, rows), encoding="utf-8")
        if args.format == "csv":
            sys.stdout.write(rows_to_csv(header, rows))
        else:
            doc = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "columns": header, "rows": rows}
            _emit(to_json(doc), args.out_dir, "sweep.json")
        return
    record = run(cfg)
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / "result.json").write_text(to_json(record.to_dict(args.timing)), encoding="utf-8")
    if args.format == "csv":
        sys.stdout.write(rows_to_csv(list(SCALAR_COLUMNS), [record.scalars()]))
    else:
        sys.stdout.write(to_json(record.to_dict(args.timing)))


def _category(exc: PolconcError) -> str:
    for cls in (ConfigInvalid, StateInvalid, ProtocolFailed):
        if isinstance(exc, cls):
            return cls.code
    return exc.code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        _execute(args)
    except PolconcError as exc:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "error": {"code": exc.code, "category": _category(exc), "message": str(exc),
                      "exit_status": exc.exit_status},
        }
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out_dir, "error.json")
        return exc.exit_status
    return 0


if __name__ == "__main__":
    sys.exit(main())
