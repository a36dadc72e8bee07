"""Round-trip the two file formats and build a TF-IDF space from text.

Writes a small dataset JSONL and an FMAT matrix to a temp directory, reads
both back, registers the matrix as a feature space, and derives a TF-IDF
space from the token view.
"""

import tempfile
from pathlib import Path

import numpy as np

from alsim.dataset import (
    build_tfidf,
    load_feature_matrix,
    load_jsonl,
    save_jsonl,
    write_feature_matrix,
    DatasetStore,
    Example,
    FeatureMatrix,
    tokenize,
)

texts = [
    ("r0", 0, "The cat sat on the mat."),
    ("r1", 1, "A dog chased the cat!"),
    ("r2", 0, "Mats are for cats, not dogs."),
    ("r3", 1, "Dogs chase; cats nap."),
]

workdir = Path(tempfile.mkdtemp(prefix="alsim-demo-"))
store = DatasetStore(2)
for ex_id, label, text in texts:
    store.add_example(Example(id=ex_id, label=label, split="pool",
                              tokens=tokenize(text)))
save_jsonl(store, workdir / "data.jsonl")

rng = np.random.default_rng(0)
matrix = FeatureMatrix(rng.normal(size=(4, 3)), [t[0] for t in texts])
write_feature_matrix(matrix, workdir / "feats.fmat")

again = load_jsonl(workdir / "data.jsonl", C=2)
feats = load_feature_matrix(workdir / "feats.fmat")
again.register_feature_space("features", feats)
print(f"wrote and reloaded {len(again)} examples from {workdir}")
print(f"FMAT: {feats.rows} rows x {feats.cols} cols, ids {feats.row_ids}")
print(f"bit-identical payload: {np.array_equal(feats.values, matrix.values)}")

tfidf = build_tfidf(again, min_df=1)
print(f"tfidf space: {tfidf.rows} rows x {tfidf.cols} vocabulary columns")
print(f"row norms: {np.round(np.linalg.norm(tfidf.values, axis=1), 6)}")
print(f"tokens of r0: {again.examples['r0'].tokens}")
