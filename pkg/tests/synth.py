"""Synthetic multi-label data for tests.

``correlated_dataset`` draws labels from overlapping linear score functions
that share a common latent direction, which makes every label pair
positively correlated by construction.
"""

import numpy as np

from mullab.core import Attribute, LabelSet, MLDataset, Schema


def _schema(n_features, n_labels):
    return Schema(
        attributes=tuple(Attribute(f"f{j}") for j in range(n_features)),
        label_names=tuple(f"L{j}" for j in range(n_labels)),
    )


def correlated_dataset(seed, n_train=200, n_test=100, n_labels=6,
                       n_features=10, shared=1.0, distinct=0.5, noise=0.3):
    """Train/test pair with correlated binary labels.

    Each label j fires when (w_j . x + noise) > 0 with
    w_j ~ shared * u + distinct * v_j for a common unit vector u and
    per-label orthogonal unit vectors v_j.
    """
    rng = np.random.default_rng(seed)
    u = rng.normal(size=n_features)
    u /= np.linalg.norm(u)
    dirs = np.empty((n_labels, n_features))
    for j in range(n_labels):
        v = rng.normal(size=n_features)
        v -= (v @ u) * u
        v /= np.linalg.norm(v)
        w = shared * u + distinct * v
        dirs[j] = w / np.linalg.norm(w)
    n = n_train + n_test
    x = rng.normal(size=(n, n_features))
    margins = x @ dirs.T + noise * rng.normal(size=(n, n_labels))
    labels = margins > 0.0
    schema = _schema(n_features, n_labels)
    rows = [
        (
            tuple(float(v) for v in x[i]),
            LabelSet.from_indices(np.flatnonzero(labels[i]).tolist(), n_labels),
        )
        for i in range(n)
    ]
    full = MLDataset(schema, rows, validate=False)
    return full.subset(range(n_train)), full.subset(range(n_train, n))


def min_pairwise_label_correlation(dataset) -> float:
    """Smallest Pearson correlation over all label pairs."""
    y = np.array(
        [[1.0 if j in ls else 0.0 for j in range(dataset.n_labels)]
         for ls in dataset.labelsets]
    )
    corr = np.corrcoef(y.T)
    m = dataset.n_labels
    return min(corr[a, b] for a in range(m) for b in range(a + 1, m))


def to_arff_text(dataset, relation="synthetic"):
    """Serialize an MLDataset to dense ARFF with {0,1} label columns."""
    lines = [f"@relation {relation}"]
    for attr in dataset.schema.attributes:
        if attr.is_nominal:
            lines.append(f"@attribute {attr.name} {{{','.join(attr.values)}}}")
        else:
            lines.append(f"@attribute {attr.name} numeric")
    for name in dataset.schema.label_names:
        lines.append(f"@attribute {name} {{0,1}}")
    lines.append("@data")
    for fv, ls in dataset.rows:
        cells = []
        for attr, v in zip(dataset.schema.attributes, fv):
            if v is None:
                cells.append("?")
            elif attr.is_nominal:
                cells.append(attr.values[v])
            else:
                cells.append(repr(float(v)))
        for j in range(dataset.n_labels):
            cells.append("1" if j in ls else "0")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def random_dataset(seed, n=30, n_labels=3, n_num=2, n_nom=1, nom_arity=3,
                   missing_rate=0.0):
    """Unstructured random dataset for property tests."""
    rng = np.random.default_rng(seed)
    attrs = [Attribute(f"num{j}") for j in range(n_num)]
    attrs += [
        Attribute(f"nom{j}", tuple(f"v{i}" for i in range(nom_arity)))
        for j in range(n_nom)
    ]
    schema = Schema(tuple(attrs), tuple(f"L{j}" for j in range(n_labels)))
    rows = []
    for _ in range(n):
        vec = []
        for j in range(n_num + n_nom):
            if missing_rate and rng.random() < missing_rate:
                vec.append(None)
            elif j < n_num:
                vec.append(float(rng.normal()))
            else:
                vec.append(int(rng.integers(nom_arity)))
        bits = int(rng.integers(1 << n_labels))
        rows.append((tuple(vec), LabelSet(bits, n_labels)))
    return MLDataset(schema, rows)
