"""Command-line entry point: ``physiofuse {run,sweep,report,synth,inspect-edf}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import ConfigInvalid, PhysioFuseError, PhysioFuseWarning

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _common(p: argparse.ArgumentParser, config_required=True):
    p.add_argument("--config", required=config_required, help="YAML config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for independent combination/classifier cells")
    p.add_argument("--strict-labels", action="store_true", default=None,
                   help="fail on channel labels missing from the label map")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="physiofuse", description="Fatigue classification from pairwise physiological-signal descriptors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one modality combination, all configured classifiers")
    _common(p)
    p = sub.add_parser("sweep", help="every feasible combination x classifier")
    _common(p)

    p = sub.add_parser("report", help="summarize a run or sweep directory")
    p.add_argument("run_dir", nargs="?", help="directory holding manifest.json")
    p.add_argument("--out", default=None, help="run directory (alternative to the positional)")
    p.add_argument("--top", type=int, default=10)

    p = sub.add_parser("synth", help="write synthetic sessions as CSV + KSS sidecars")
    _common(p, config_required=False)

    p = sub.add_parser("inspect-edf", help="print an EDF header as JSON")
    p.add_argument("path")
    p.add_argument("--strict-labels", action="store_true",
                   help="fail on channel labels missing from the default label map")
    return parser


def _threads(n):
    if n is not None and n < 1:
        raise ConfigInvalid("--threads", "must be >= 1")
    return n


def _run(args) -> int:
    from .pipeline import cmd_run, cmd_sweep, load_config

    cfg = load_config(args.config, seed=args.seed, out=args.out, threads=_threads(args.threads),
                      strict_labels=args.strict_labels)
    manifest = (cmd_run if args.command == "run" else cmd_sweep)(cfg)
    print(f"wrote {len(manifest['files']) + 1} files to {cfg.output}")
    return EXIT_OK


def _report(args) -> int:
    from .pipeline import cmd_report

    run_dir = args.run_dir or args.out
    if run_dir is None:
        raise ConfigInvalid("run_dir", "give a run directory")
    sys.stdout.write(cmd_report(run_dir, top=args.top))
    return EXIT_OK


def _synth(args) -> int:
    import yaml

    from .pipeline import synth_to_disk

    doc = {}
    seed = 0
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        # accept either a bare synthetic config or a pipeline config embedding one
        if isinstance(doc.get("input"), dict) and "synthetic" in doc["input"]:
            seed = int(doc.get("seed", 0))
            inner = doc["input"]["synthetic"]
            if isinstance(inner, str):
                with open(Path(args.config).parent / inner, encoding="utf-8") as fh:
                    inner = yaml.safe_load(fh)
            doc = inner
    if args.seed is not None:
        seed = args.seed
    out = args.out or "synthetic"
    written = synth_to_disk(doc, seed, out)
    print(f"wrote {len(written)} files to {out}")
    return EXIT_OK


def _inspect(args) -> int:
    from .ingest import LabelMap, parse_header

    data = Path(args.path).read_bytes()
    header = parse_header(data)
    labels = LabelMap(strict=bool(args.strict_labels))
    signals = []
    for i, s in enumerate(header.signals):
        entry = {
            "label": s.label, "transducer": s.transducer,
            "physical_dimension": s.physical_dimension,
            "physical_min": s.physical_min, "physical_max": s.physical_max,
            "digital_min": s.digital_min, "digital_max": s.digital_max,
            "prefiltering": s.prefiltering, "samples_per_record": s.samples_per_record,
            "sampling_rate": header.sampling_rate(i),
        }
        if not s.is_annotation:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", PhysioFuseWarning)
                hit = labels.lookup(s.label)
            entry["modality"] = None if hit is None else hit[0].value
            entry["sub_label"] = None if hit is None else hit[1]
        signals.append(entry)
    doc = {
        "version": header.version, "patient_id": header.patient_id,
        "recording_id": header.recording_id, "start": header.start_datetime.isoformat(),
        "num_records": header.num_records, "record_duration": header.record_duration,
        "num_signals": header.num_signals, "header_bytes": header.header_bytes,
        "signals": signals,
    }
    print(json.dumps(doc, indent=1))
    return EXIT_OK


_HANDLERS = {"run": _run, "sweep": _run, "report": _report, "synth": _synth,
             "inspect-edf": _inspect}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _HANDLERS[args.command](args)
    except ConfigInvalid as exc:
        print(f"physiofuse: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PhysioFuseError, OSError) as exc:
        print(f"physiofuse: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
