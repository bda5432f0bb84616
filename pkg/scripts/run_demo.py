"""Run the whole pipeline on the demo corpus: generate, stats, evaluate."""

from __future__ import annotations

import argparse
from pathlib import Path

from make_demo_inputs import write_demo_inputs
from taxoutlier.cli import main as cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.strip())
    parser.add_argument("--workdir", type=Path, default=Path("demo"))
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    paths = write_demo_inputs(args.workdir)
    dataset = args.workdir / "demo.dataset.jsonl"
    eval_report = args.workdir / "demo.eval.json"

    steps = [
        [
            "generate",
            "--dump", str(paths["dump"]),
            "--anchors", str(paths["anchors"]),
            "--output", str(dataset),
            "--seed", str(args.seed),
        ],
        ["stats", str(dataset)],
        ["evaluate", str(dataset), str(paths["vectors"]), "--output", str(eval_report)],
    ]
    for argv in steps:
        print(f"\n$ taxoutlier {' '.join(argv)}")
        code = cli(argv)
        if code != 0:
            print(f"step failed with exit code {code}")
            return code
    print(f"\ndemo artifacts in {args.workdir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
