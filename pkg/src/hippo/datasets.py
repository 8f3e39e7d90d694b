"""Dataset ingestion and synthesis: sparse text format, partitioning, synthetic instances.

The text format is the usual sparse regression layout: one sample per line,
``label index:value index:value ...`` with 1-based, strictly increasing
indices.  Rows are stored with 0-based feature indices internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ParseError(Exception):
    """Malformed input data; carries the offending line number."""


@dataclass(frozen=True)
class Dataset:
    """Parsed samples: ``rows`` is a tuple of ``(label, {index: value})`` pairs."""

    rows: tuple
    d: int

    def __len__(self) -> int:
        return len(self.rows)

    def densify(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the dense ``(features, labels)`` pair."""
        X = np.zeros((len(self.rows), self.d))
        y = np.zeros(len(self.rows))
        for r, (label, feats) in enumerate(self.rows):
            y[r] = label
            for idx, val in feats.items():
                X[r, idx] = val
        return X, y


def parse_libsvm(text: str | bytes, declared_d: int | None = None) -> Dataset:
    """Parse sparse ``label index:value ...`` text into a :class:`Dataset`.

    Parameters
    ----------
    text : str or bytes
        File contents; blank lines are skipped.
    declared_d : int, optional
        Known feature dimension.  Indices above it are rejected; the stored
        dimension is the larger of ``declared_d`` and the largest index seen.

    Raises
    ------
    ParseError
        On malformed tokens, non-increasing indices, or out-of-range indices,
        with the 1-based line number.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows = []
    max_idx = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        try:
            label = float(parts[0])
        except ValueError:
            raise ParseError(f"line {lineno}: bad label {parts[0]!r}") from None
        feats = {}
        prev_idx = 0
        for tok in parts[1:]:
            idx_s, _, val_s = tok.partition(":")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"line {lineno}: bad feature token {tok!r}") from None
            if idx < 1:
                raise ParseError(f"line {lineno}: indices are 1-based, got {idx}")
            if idx <= prev_idx:
                raise ParseError(f"line {lineno}: indices must be strictly increasing (saw {idx} after {prev_idx})")
            if declared_d is not None and idx > declared_d:
                raise ParseError(f"line {lineno}: index {idx} exceeds declared dimension {declared_d}")
            prev_idx = idx
            feats[idx - 1] = val
            max_idx = max(max_idx, idx)
        rows.append((label, feats))
    return Dataset(rows=tuple(rows), d=max(declared_d or 0, max_idx))


def serialize_libsvm(ds: Dataset) -> str:
    """Inverse of :func:`parse_libsvm` (round-trips bit-exactly through repr)."""
    lines = []
    for label, feats in ds.rows:
        toks = [repr(label)] + [f"{idx + 1}:{val!r}" for idx, val in sorted(feats.items())]
        lines.append(" ".join(toks))
    return "\n".join(lines) + ("\n" if lines else "")


def normalize_features(X: np.ndarray) -> np.ndarray:
    """Scale each column to unit standard deviation (constant columns untouched)."""
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return X / sd


def partition_even(ds: Dataset, m: int, seed: int | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split the dataset across ``m`` agents with row counts differing by at most 1.

    The first ``len(ds) mod m`` agents receive one extra row.  With a seed the
    rows are shuffled before splitting; either way the union of the parts is
    the whole dataset.

    Returns
    -------
    list of (A_i, b_i)
        Dense per-agent feature matrices and label vectors.
    """
    if m < 1:
        raise ValueError(f"need at least one agent, got m={m}")
    X, y = ds.densify()
    order = np.arange(len(ds))
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(ds))
    base, extra = divmod(len(ds), m)
    parts = []
    start = 0
    for i in range(m):
        size = base + (1 if i < extra else 0)
        sel = order[start:start + size]
        parts.append((X[sel], y[sel]))
        start += size
    return parts


def synth_least_squares(m: int, d: int, n_i: int, noise_sigma: float, seed: int):
    """Generate a planted synthetic least-squares instance.

    Every agent gets ``A_i`` with standard normal entries and
    ``b_i = A_i x_true + noise``, where ``x_true`` is itself standard normal.
    Deterministic given the seed.

    Returns
    -------
    parts : list of (A_i, b_i)
    x_true : ndarray of shape (d,)
    """
    if min(m, d, n_i) < 1:
        raise ValueError("m, d and n_i must all be at least 1")
    rng = np.random.default_rng(seed)
    x_true = rng.standard_normal(d)
    parts = []
    for _ in range(m):
        A = rng.standard_normal((n_i, d))
        b = A @ x_true + noise_sigma * rng.standard_normal(n_i)
        parts.append((A, b))
    return parts, x_true
