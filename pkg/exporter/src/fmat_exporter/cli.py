"""Standalone export script: every ExportJob field is a flag."""

import argparse
import sys

from .export import REPRESENTATIONS, ExportJob, export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fmat-export",
        description="export pretrained-encoder text representations as FMAT")
    parser.add_argument("--input", required=True, help="dataset JSONL (id + text)")
    parser.add_argument("--model", required=True,
                        help="model identifier or local directory")
    parser.add_argument("--representation", required=True, choices=REPRESENTATIONS)
    parser.add_argument("--output", required=True, help="FMAT output path")
    parser.add_argument("--max-length", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0,
                        help="surprisal token-subsample seed")
    parser.add_argument("--batch-size", type=int, default=16)
    args = parser.parse_args(argv)

    job = ExportJob(input_jsonl=args.input, model=args.model,
                    representation=args.representation, output=args.output,
                    max_length=args.max_length, seed=args.seed,
                    batch_size=args.batch_size)
    try:
        summary = export(job)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}: {summary['rows']} rows x {summary['cols']} cols")
    return 0


if __name__ == "__main__":
    sys.exit(main())
