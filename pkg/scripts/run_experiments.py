"""Run the experiment suite and write one CSV + JSON pair per experiment.

    python3 scripts/run_experiments.py --out results --seed 0 --verify
"""

import argparse
import json
import sys

from isingsample.experiments import EXPERIMENTS, run_suite, verify_suite


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", choices=EXPERIMENTS, default=list(EXPERIMENTS))
    ap.add_argument("--overrides", help="JSON object mapping experiment name to config overrides")
    ap.add_argument("--verify", action="store_true", help="rerun and check the CSV bytes match")
    args = ap.parse_args(argv)
    overrides = json.loads(args.overrides) if args.overrides else None
    ok = True
    for rep in run_suite(args.seed, args.out, overrides, tuple(args.only)):
        print(f"{rep.name}: {'pass' if rep.passed else 'FAIL'} ({len(rep.rows)} rows, {rep.wallclock:.1f}s)")
        print("  " + json.dumps(rep.summary, default=str)[:400])
        ok &= rep.passed
    if args.verify:
        for name, same in verify_suite(args.seed, overrides, tuple(args.only)).items():
            print(f"{name}: rerun {'identical' if same else 'DIFFERS'}")
            ok &= same
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
