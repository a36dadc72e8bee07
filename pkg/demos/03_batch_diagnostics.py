"""Show what the four batch diagnostics measure on crafted geometries.

Three batches from the same pool: a dense-cluster batch, an outlier batch,
and a spread batch. Coverage (div_feature) rewards the spread batch,
representativeness rewards the dense one, vocabulary overlap (div_input)
drops for the outliers, and batch uncertainty tracks the reference model's
entropy on the chosen points.
"""

import numpy as np

from alsim.analysis import div_feature, div_input, representativeness, uncertainty_of_batch
from alsim.dataset import DatasetStore, Example, FeatureMatrix

rng = np.random.default_rng(3)

# a dense cluster at the origin, a ring of spread points, and far outliers
cluster = rng.normal(size=(30, 2)) * 0.3
angles = np.linspace(0, 2 * np.pi, 12, endpoint=False)
ring = np.stack([4 * np.cos(angles), 4 * np.sin(angles)], axis=1)
outliers = np.array([[40.0, 0.0], [0.0, 40.0], [40.0, 40.0]])
points = np.concatenate([cluster, ring, outliers])

ids = [f"p{i:02d}" for i in range(len(points))]
enc = FeatureMatrix(points, ids)
store = DatasetStore(2)
for i, ex_id in enumerate(ids):
    region = "cluster" if i < 30 else ("ring" if i < 42 else "edge")
    store.add_example(Example(id=ex_id, label=i % 2, split="pool",
                              tokens=(region, f"tok{i % 7}")))

batches = {
    "dense":   ids[:5],
    "outlier": ids[42:45],
    "spread":  [ids[30], ids[33], ids[36], ids[39], ids[0]],
}

# a mock reference model: uncertain inside the cluster, confident elsewhere
probs = np.full((len(ids), 2), 0.5)
probs[30:] = [0.95, 0.05]
print(f"{'batch':>8} {'div_input':>10} {'div_feature':>12} {'uncertainty':>12} {'repr':>8}")
for name, batch in batches.items():
    rest = [i for i in ids if i not in batch]
    q_tokens = set().union(*(store.examples[i].tokens for i in batch))
    r_tokens = set().union(*(store.examples[i].tokens for i in rest))
    row = (
        div_input(q_tokens, r_tokens),
        div_feature(batch, ids, enc),
        uncertainty_of_batch(batch, probs, ids),
        representativeness(batch, ids, enc, K=5),
    )
    print(f"{name:>8} {row[0]:>10.4f} {row[1]:>12.4f} {row[2]:>12.4f} {row[3]:>8.4f}")
