"""Differential fuzzing of the eager and stack semantics.

Writes shrunk mismatch records as JSON lines when any are found.
"""
import argparse
import time

from stackcalc.harness import GenConfig, consistency_fails, diff_consistency, shrink
from stackcalc.parser import parse_expr, parse_acl
from stackcalc.stack import Frame


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, default=10_000)
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fuel", type=int, default=10_000)
    ap.add_argument("--out", default=None, help="JSONL file for mismatches")
    args = ap.parse_args()

    cfg = GenConfig(max_depth=args.depth, seed=args.seed, fuel=args.fuel)
    t0 = time.perf_counter()
    rep = diff_consistency(cfg, cases=args.cases)
    print(f"{rep.summary()} in {time.perf_counter() - t0:.1f}s")
    for m in rep.mismatches[:5]:
        acl = parse_acl(m["acl"]) if isinstance(m["acl"], str) else m["acl"]
        small = shrink(parse_expr(m["program"]), consistency_fails((Frame(m["principal"]),), acl, args.fuel))
        print("mismatch:", m["program"], "shrunk:", small)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rep.to_jsonl())


if __name__ == "__main__":
    main()
