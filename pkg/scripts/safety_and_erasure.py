"""Measure how often the analysis accepts generated programs and check that
accepted programs never raise and erase faithfully."""
import argparse
import time

from stackcalc.harness import GenConfig, check_erasure, check_safety


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--safe", type=int, default=2000, help="accepted programs to collect")
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t0 = time.perf_counter()
    rep = check_safety(GenConfig(seed=args.seed, max_depth=args.depth), cases=args.safe, min_safe=args.safe)
    print(f"safety:  {rep.summary()} acceptance={rep.analysis_successes / rep.cases_run:.2%} "
          f"({time.perf_counter() - t0:.1f}s)")
    t0 = time.perf_counter()
    cfg = GenConfig(seed=args.seed, max_depth=args.depth, test_free_only=True)
    erep, safe = check_erasure(cfg, cases=args.safe, min_safe=args.safe)
    print(f"erasure: safe={safe} {erep.summary()} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
