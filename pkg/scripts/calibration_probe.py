"""How much of a generated network does the user equilibrium congest?

For a grid of generator settings, prints the mean UE path length in hops and
the share of arcs plus vertices whose flow exceeds capacity.  Congested
elements can only lie on the OD pairs' shortest paths, so with 25 OD pairs the
share is bounded by roughly 25 * 2 * hops / (|A| + |V|).

    python scripts/calibration_probe.py --seeds 0 1 2
"""

from __future__ import annotations

import argparse
import itertools

import numpy as np

from gapr.assignment import user_equilibrium
from gapr.netmodel import GeneratorConfig, generate_instance, scale50_config


def congestion_share(inst):
    ue = user_equilibrium(inst)
    congested = (sum(1 for v in ue.arc_excess.values() if v > 0)
                 + sum(1 for v in ue.vertex_excess.values() if v > 0))
    hops = np.mean([len(ps.paths[0].vertices) - 1 for ps in ue.path_sets])
    return float(hops), 100.0 * congested / (len(inst.arcs) + len(inst.vertices))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args(argv)

    settings = [("scale50 preset", lambda s: scale50_config(s))]
    for metric, demand, cap in itertools.product(("euclidean", "manhattan"), (0.02, 0.3, 1.0),
                                                 (0.05, 0.5)):
        settings.append((f"{metric:9s} demand={demand:<4g} node_cap={cap:<4g}",
                         lambda s, m=metric, d=demand, c=cap: GeneratorConfig(
                             50, n_od_pairs=25, seed=s, metric=m, demand_fraction=d,
                             node_cap_fraction=c, detour_range=(1.0, 1.05))))
    print(f"{'setting':40s} {'hops':>6s} {'congested %':>12s}")
    for label, make in settings:
        rows = [congestion_share(generate_instance(make(s))) for s in args.seeds]
        hops = np.mean([h for h, _ in rows])
        share = np.mean([c for _, c in rows])
        print(f"{label:40s} {hops:6.2f} {share:12.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
