"""Check every rewrite rule on random instances and run the negative controls."""
import argparse

from stackcalc.harness import RULE_CHECKS, GenConfig, check_rule, control_results


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--depth", type=int, default=4)
    args = ap.parse_args()

    cfg = GenConfig(seed=args.seed, max_depth=args.depth)
    for name in RULE_CHECKS:
        rep = check_rule(name, cfg, instances=args.instances)
        print(f"{'ok  ' if rep.ok else 'FAIL'} {name:22s} {rep.summary()}")
    for name, rep in control_results().items():
        print(f"{'ok  ' if not rep.ok else 'FAIL'} control {name:22s} distinguished={not rep.ok}")


if __name__ == "__main__":
    main()
