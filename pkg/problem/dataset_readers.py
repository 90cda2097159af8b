import io
import json
import logging
import os
from typing import NamedTuple

import numpy as np
from scipy import sparse

from problem.design_matrix import DesignMatrix

logger = logging.getLogger(__name__)

SYNTH_SPARSITY = 0.7
SYNTH_BLOCK_ROWS = 256


class LibsvmParseError(ValueError):
    def __init__(self, lineno, message):
        super().__init__("line {}: {}".format(lineno, message))
        self.lineno = lineno


class Dataset(NamedTuple):
    name: str
    X: DesignMatrix
    labels: np.ndarray
    b: np.ndarray
    standardized: bool
    zero_variance: np.ndarray


def canonicalize_labels(labels):
    """The smaller raw label maps to -1, the larger to +1."""
    labels = np.asarray(labels, dtype=np.float64)
    values = np.unique(labels)
    if values.shape[0] != 2:
        raise ValueError("expected exactly 2 distinct labels, found {}".format(values.shape[0]))
    return np.where(labels == values[1], 1.0, -1.0)


def parse_libsvm(stream, n_features=None, name="libsvm"):
    labels = []
    indptr = [0]
    indices = []
    values = []
    max_index = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise LibsvmParseError(lineno, "bad label {!r}".format(tokens[0]))
        last = 0
        for token in tokens[1:]:
            idx, sep, val = token.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, "malformed token {!r}".format(token))
            try:
                j = int(idx)
                x = float(val)
            except ValueError:
                raise LibsvmParseError(lineno, "malformed token {!r}".format(token))
            if j < 1:
                raise LibsvmParseError(lineno, "index {} < 1".format(j))
            if j <= last:
                raise LibsvmParseError(lineno, "indices not ascending at {}".format(j))
            if not np.isfinite(x):
                raise LibsvmParseError(lineno, "non-finite value {!r}".format(val))
            last = j
            indices.append(j - 1)
            values.append(x)
        max_index = max(max_index, last)
        indptr.append(len(indices))

    if not labels:
        raise ValueError("no samples")
    n = max_index if n_features is None else int(n_features)
    if n < max_index:
        raise ValueError("feature index {} exceeds n_features={}".format(max_index, n))

    X = sparse.csr_matrix(
        (np.array(values, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(labels), n),
    )
    labels = np.array(labels)
    logger.info("read %d samples, %d features, %d nonzeros", X.shape[0], n, X.nnz)
    return Dataset(name=name, X=DesignMatrix(X), labels=labels, b=canonicalize_labels(labels),
                   standardized=False, zero_variance=np.zeros(0, dtype=np.intp))


def _format_label(label):
    if float(label).is_integer():
        return "{:+d}".format(int(label))
    return repr(float(label))


def write_libsvm(dataset, stream):
    X = dataset.X.data
    X = X if sparse.issparse(X) else sparse.csr_matrix(X)
    for i in range(X.shape[0]):
        start, end = X.indptr[i], X.indptr[i + 1]
        fields = ["{}:{}".format(j + 1, repr(float(x))) for j, x in zip(X.indices[start:end], X.data[start:end])]
        stream.write(" ".join([_format_label(dataset.labels[i])] + fields) + "\n")


def standardize_columns(X):
    """
    Centers each column and scales it to unit population variance (divisor m).
    Returns the dense result and the indices of zero-variance columns, which
    are left at 0.
    """
    if X.m < 2:
        raise ValueError("standardization needs at least 2 samples, got {}".format(X.m))
    dense = X.toarray()
    dense -= dense.mean(axis=0)
    std = np.sqrt(np.mean(dense * dense, axis=0))
    flat = std <= 1e-12 * max(1.0, float(np.abs(dense).max(initial=0.0)))
    dense[:, flat] = 0.0
    dense[:, ~flat] /= std[~flat]
    zero_variance = np.flatnonzero(flat)
    if zero_variance.size:
        logger.warning("%d zero-variance columns left at 0", zero_variance.size)
    return DesignMatrix(dense), zero_variance


def standardize_dataset(dataset):
    X, zero_variance = standardize_columns(dataset.X)
    return dataset._replace(X=X, standardized=True, zero_variance=zero_variance)


def synth_gen(m, n, seed, sparsity=SYNTH_SPARSITY):
    """
    Random two-class data: ceil(m/2) positive rows with N(1, 1) features,
    floor(m/2) negative rows with N(-1, 1) features, each entry then zeroed
    with probability `sparsity`.
    """
    if m < 2 or n < 1:
        raise ValueError("need m >= 2 and n >= 1, got m={} n={}".format(m, n))
    rng = np.random.Generator(np.random.Philox(seed))
    m_pos = (m + 1) // 2
    labels = np.concatenate([np.ones(m_pos), -np.ones(m - m_pos)])

    blocks = []
    for start in range(0, m, SYNTH_BLOCK_ROWS):
        rows = labels[start:start + SYNTH_BLOCK_ROWS]
        block = rng.standard_normal((rows.shape[0], n)) + rows[:, None]
        block[rng.random((rows.shape[0], n)) < sparsity] = 0.0
        blocks.append(sparse.csr_matrix(block))
    X = sparse.vstack(blocks, format="csr")
    return Dataset(name="synthetic_{}x{}_s{}".format(m, n, seed), X=DesignMatrix(X), labels=labels,
                   b=labels.copy(), standardized=False, zero_variance=np.zeros(0, dtype=np.intp))


def dataset_metadata(dataset):
    return {
        "name": dataset.name,
        "m": dataset.X.m,
        "n": dataset.X.n,
        "nnz": dataset.X.nnz,
        "density": dataset.X.density,
        "m_pos": int(np.count_nonzero(dataset.b > 0)),
        "m_neg": int(np.count_nonzero(dataset.b < 0)),
        "standardized": bool(dataset.standardized),
        "variance_divisor": "m",
        "zero_variance_columns": [int(j) for j in dataset.zero_variance],
    }


def write_metadata(dataset, path):
    with open(path, "w") as f:
        json.dump(dataset_metadata(dataset), f, indent=2)


def read_metadata(path):
    with open(path) as f:
        return json.load(f)


def readLibsvmDataset(path, standardize=True, n_features=None):
    with open(path) as f:
        dataset = parse_libsvm(f, n_features=n_features, name=os.path.splitext(os.path.basename(path))[0])
    if standardize:
        dataset = standardize_dataset(dataset)
    return dataset


def readSyntheticDataset(m, n, seed, standardize=False):
    dataset = synth_gen(m, n, seed)
    if standardize:
        dataset = standardize_dataset(dataset)
    return dataset


def parse_libsvm_text(text, n_features=None):
    return parse_libsvm(io.StringIO(text), n_features=n_features)


datasetLoadTypeCallbacks = {
    "libsvm": readLibsvmDataset,
    "synthetic": readSyntheticDataset,
}
