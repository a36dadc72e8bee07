"""Batch export of text representations from a pretrained encoder.

Four representations are supported:

* ``cls``: the first-token (CLS) vector of the last hidden layer.
* ``mean_output``: mean of the last hidden layer over non-padding tokens.
* ``mean_embedding_layer``: mean of the embedding-layer output over
  non-padding tokens (no transformer layers applied).
* ``surprisal``: per-token masked-LM cross-entropy of the unmasked input
  against its own tokens, for a seeded random 15% subsample of non-special
  positions, packed into a fixed-width vector (zero-padded / truncated).

Rows follow input-line order. Each row's token subsample is seeded from
(job.seed, row_index), so output is identical for any batch size. Empty
texts produce a zero row and a warning.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np
import torch

from .fmatio import write_fmat

log = logging.getLogger(__name__)

REPRESENTATIONS = ("cls", "mean_output", "mean_embedding_layer", "surprisal")

SURPRISAL_WIDTH = 128   # interchange contract: fixed loss-vector width
SURPRISAL_RATE = 0.15   # fraction of token positions sampled per row


@dataclass
class ExportJob:
    """One export: where to read text, which model/representation, where to write."""

    input_jsonl: str
    model: str
    representation: str
    output: str
    max_length: int = 128
    seed: int = 0
    batch_size: int = 16

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(
                f"representation must be one of {REPRESENTATIONS}, "
                f"got {self.representation!r}"
            )
        if self.max_length < 2:
            raise ValueError(f"max_length must be >= 2, got {self.max_length}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def read_input(path):
    """Read (id, text) pairs from a dataset JSONL file, preserving order."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                ex_id = str(obj["id"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad input line ({exc})") from None
            rows.append((ex_id, obj.get("text") or ""))
    return rows


def _load_model(job: ExportJob):
    from transformers import AutoModel, AutoModelForMaskedLM, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(job.model)
        if job.representation == "surprisal":
            model = AutoModelForMaskedLM.from_pretrained(job.model)
        else:
            model = AutoModel.from_pretrained(job.model)
    except Exception as exc:
        raise RuntimeError(f"cannot load model {job.model!r}: {exc}") from exc
    model.eval()
    return tokenizer, model


def _embed_batch(model, enc, representation):
    out = model(**enc, output_hidden_states=True)
    mask = enc["attention_mask"].unsqueeze(-1).to(torch.float32)
    if representation == "cls":
        return out.hidden_states[-1][:, 0, :]
    layer = out.hidden_states[-1] if representation == "mean_output" else out.hidden_states[0]
    denom = mask.sum(dim=1).clamp(min=1.0)
    return (layer * mask).sum(dim=1) / denom


def _surprisal_batch(model, enc, special_mask, row_seeds):
    out = model(**enc)
    logits = out.logits  # (batch, seq, vocab)
    losses = torch.nn.functional.cross_entropy(
        logits.transpose(1, 2), enc["input_ids"], reduction="none")
    keep = (enc["attention_mask"] == 1) & (special_mask == 0)
    rows = np.zeros((logits.shape[0], SURPRISAL_WIDTH), dtype=np.float32)
    for i in range(logits.shape[0]):
        positions = torch.nonzero(keep[i], as_tuple=False).flatten().tolist()
        if not positions:
            continue
        n_sample = max(1, int(round(SURPRISAL_RATE * len(positions))))
        rng = np.random.default_rng(row_seeds[i])
        chosen = sorted(rng.choice(len(positions), size=min(n_sample, len(positions)),
                                   replace=False).tolist())
        values = [float(losses[i, positions[c]]) for c in chosen]
        values = values[:SURPRISAL_WIDTH]
        rows[i, :len(values)] = values
    return torch.from_numpy(rows)


def export(job: ExportJob) -> dict:
    """Run the job; writes the FMAT file and its row-id index.

    Returns a summary dict with ``rows`` and ``cols``.
    """
    rows = read_input(job.input_jsonl)
    tokenizer, model = _load_model(job)

    vectors = []
    with torch.no_grad():
        for start in range(0, len(rows), job.batch_size):
            batch = rows[start:start + job.batch_size]
            texts = [t for _, t in batch]
            for offset, text in enumerate(texts):
                if not text.strip():
                    log.warning("row %d (%s): empty text, emitting zeros",
                                start + offset, batch[offset][0])
            enc = tokenizer([t if t.strip() else tokenizer.pad_token or "" for t in texts],
                            padding=True, truncation=True, max_length=job.max_length,
                            return_special_tokens_mask=True, return_tensors="pt")
            special = enc.pop("special_tokens_mask")
            empty = torch.tensor([0.0 if t.strip() else 1.0 for t in texts])
            if job.representation == "surprisal":
                seeds = [hash_seed(job.seed, start + offset)
                         for offset in range(len(batch))]
                vec = _surprisal_batch(model, enc, special, seeds)
            else:
                vec = _embed_batch(model, enc, job.representation)
            vec = vec * (1.0 - empty).unsqueeze(-1)  # zero rows for empty text
            vectors.append(vec.to(torch.float32).numpy())

    matrix = np.concatenate(vectors, axis=0) if vectors else np.zeros((0, 0), np.float32)
    matrix = np.nan_to_num(matrix, nan=0.0, posinf=0.0, neginf=0.0)
    write_fmat(matrix, [rid for rid, _ in rows], job.output)
    return {"rows": int(matrix.shape[0]), "cols": int(matrix.shape[1])}


def hash_seed(seed: int, row: int) -> int:
    """Stable per-row RNG seed; independent of batch size."""
    import hashlib

    digest = hashlib.sha256(f"fmat-export|{seed}|{row}".encode()).digest()
    return int.from_bytes(digest[:8], "little")
