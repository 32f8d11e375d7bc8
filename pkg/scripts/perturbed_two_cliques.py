"""Two disjoint cliques plus a sparse random layer of density C/n^(r-1).

With n/2 odd the two cliques have no perfect matching, and without crossing
edges there is never a Hamilton cycle. The sweep shows how few random edges it
takes to repair each property.
"""

import argparse

from hyperspan import loose_hamilton, perfect_matching
from hyperspan.lab.generators import GeneratorSpec, generate, two_cliques
from hyperspan.seeding import derive_seed


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--C", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 4.0])
    args = ap.parse_args(argv)
    base = two_cliques(args.r, args.n)
    print(f"{'C':>5}  {'pm':>5}  {'hamilton':>8}")
    for C in args.C:
        pm = ham = 0
        for i in range(args.trials):
            s = derive_seed(args.seed, C, i)
            g = generate(GeneratorSpec("perturbed", args.n, r=args.r, C=C, seed=s, base=base))
            pm += perfect_matching(g, seed=s).matching is not None
            if args.n % (args.r - 1) == 0:
                ham += loose_hamilton(g, seed=s).cycle is not None
        print(f"{C:5.1f}  {pm / args.trials:5.2f}  {ham / args.trials:8.2f}")


if __name__ == "__main__":
    main()
