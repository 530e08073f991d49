"""Synthetic planted-feature datasets with known ground truth.

Samples live on a low-rank latent structure.  The label is the sign of a
sum of independent score components; each informative column tracks one
component, with components shared by small groups of columns.  Within a
group the columns are noisy siblings, so low-rank completion of masked
cells has genuine signal to recover; across groups they carry complementary
label information, so none is redundant given the others.  Nuisance columns
load on separate side latents only.
"""

from __future__ import annotations

import csv

import numpy as np

from .dataio import Dataset


def make_planted(
    n_samples: int,
    n_features: int,
    informative,
    noise: float = 0.5,
    seed: int = 0,
    n_classes: int = 2,
    latent_rank: int = 4,
) -> tuple[Dataset, list[int]]:
    """Build a planted dataset; returns it with the informative column ids.

    `informative` is either an explicit list of column ids or a count, in
    which case the ids are drawn (seeded) without replacement.
    """
    if n_samples < 4 or n_features < 1:
        raise ValueError("need at least 4 samples and 1 feature")
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    if isinstance(informative, int):
        if not 0 < informative <= n_features:
            raise ValueError("informative count out of range")
        planted = sorted(rng.choice(n_features, size=informative, replace=False).tolist())
    else:
        planted = sorted(int(i) for i in informative)
        if len(set(planted)) != len(planted) or not all(0 <= i < n_features for i in planted):
            raise ValueError("informative ids must be distinct and in range")

    n_groups = max(1, round(len(planted) / 2))
    scores = rng.normal(size=(n_samples, n_groups))
    total = scores.sum(axis=1) / np.sqrt(n_groups)
    if n_classes == 2:
        labels = (total > 0).astype(np.int64)
    else:
        edges = np.quantile(total, np.linspace(0, 1, n_classes + 1)[1:-1])
        labels = np.searchsorted(edges, total).astype(np.int64)
    side_latents = rng.normal(size=(n_samples, max(latent_rank - 1, 1)))

    # contiguous blocks of sorted planted ids share a score component, which
    # keeps group siblings in the same stream window most of the time
    group_of = {j: min(rank * n_groups // len(planted), n_groups - 1)
                for rank, j in enumerate(planted)}
    values = np.empty((n_samples, n_features))
    for j in planted:
        a = rng.uniform(0.9, 1.1)
        values[:, j] = a * scores[:, group_of[j]] + noise * rng.normal(size=n_samples)
    planted_set = set(planted)
    for j in range(n_features):
        if j in planted_set:
            continue
        if latent_rank > 1:
            w = rng.normal(size=side_latents.shape[1])
            values[:, j] = side_latents @ w + noise * rng.normal(size=n_samples)
        else:
            values[:, j] = noise * rng.normal(size=n_samples)

    names = [f"f{j}" for j in range(n_features)]
    return Dataset(values, labels, names), planted


def save_csv(data: Dataset, path) -> None:
    """Write the dataset with a header row and the label as the last column."""
    names = data.feature_names or [f"f{j}" for j in range(data.n_features)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*names, "label"])
        for row, lab in zip(data.values, data.labels):
            writer.writerow([*(repr(float(v)) for v in row), int(lab)])
