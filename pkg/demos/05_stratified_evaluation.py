"""Chest-tube-stratified AUC: why the strata matter.

Simulates two scorers on the same labeled population where most positives
carry chest tubes: an honest scorer driven by the pneumothorax label, and a
shortcut scorer that keys on the tube instead. Overall AUC looks fine for
both; the no-tube stratum exposes the shortcut, which is exactly what the
percent-change column is for.

Run:  python3 demos/05_stratified_evaluation.py
"""

import numpy as np

from ptxtriage.evaluate import auc, pct_change, round_half_away

rng = np.random.default_rng(5)

n = 2000
ptx = rng.random(n) < 0.10
tube = np.where(ptx, rng.random(n) < 0.8, rng.random(n) < 0.02)  # most positives are treated

honest = np.clip(np.where(ptx, 0.75, 0.25) + rng.normal(0, 0.18, n), 0, 1)
shortcut = np.clip(np.where(tube, 0.75, 0.25) + rng.normal(0, 0.18, n), 0, 1)


def report(name, scores):
    overall = auc(scores, ptx)
    no_tubes = auc(scores[~tube], ptx[~tube])
    only_tubes = auc(scores[tube], ptx[tube])
    change = round_half_away(pct_change(overall, no_tubes))
    print(f"{name:<9} AUC all={overall:.3f}  no-tubes={no_tubes:.3f} "
          f"only-tubes={only_tubes:.3f}  change={change:+.1f}%")


print(f"{ptx.sum()} positives of {n} studies; {int((ptx & tube).sum())} positives have tubes\n")
report("honest", honest)
report("shortcut", shortcut)
print("\nThe shortcut model collapses once the tube confound is stripped away.")
