"""Walk through the contrastive scoring rule on a tiny binary instance.

One labeled reference point predicts (0.8, 0.2). Three nearby pool
candidates predict (0.7, 0.3), (0.6, 0.4), and (0.4, 0.6). The candidate
whose distribution diverges most from its labeled neighbor is the most
contrastive, so it is acquired first.
"""

import numpy as np

from alsim.acquisition import AcquisitionConfig, acquire_cal, kl_divergence
from alsim.dataset import FeatureMatrix

labeled_probs = np.array([[0.8, 0.2]])
labeled_enc = FeatureMatrix(np.array([[0.0, 0.0]]), ["ref"])

candidates = {
    "x2": ([1.0, 0.0], [0.7, 0.3]),
    "x3": ([0.0, 1.0], [0.6, 0.4]),
    "x4": ([-1.0, 0.0], [0.4, 0.6]),
}
pool_ids = list(candidates)
pool_enc = FeatureMatrix(np.array([candidates[i][0] for i in pool_ids]), pool_ids)
pool_probs = np.array([candidates[i][1] for i in pool_ids])

print("per-candidate divergence from the labeled neighbor (nats):")
for cid in pool_ids:
    score = kl_divergence(labeled_probs[0], candidates[cid][1])
    print(f"  {cid}: KL( (0.8,0.2) || {tuple(candidates[cid][1])} ) = {score:.6f}")

config = AcquisitionConfig(strategy="cal", b=2, k=1)
selection = acquire_cal(pool_probs, pool_enc, labeled_probs, labeled_enc, config)
print(f"\nacquired batch (b=2, most contrastive first): {selection.ids}")
print(f"scores: {[round(s, 6) for s in selection.scores]}")

opposite = acquire_cal(pool_probs, pool_enc, labeled_probs, labeled_enc,
                       AcquisitionConfig(strategy="cal", b=2, k=1,
                                         cal_direction="argmin"))
print(f"argmin ablation picks the least contrastive instead: {opposite.ids}")
