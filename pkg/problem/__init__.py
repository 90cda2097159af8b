import numpy as np

from problem.design_matrix import DesignMatrix, as_design_matrix
from problem.dataset_readers import Dataset, datasetLoadTypeCallbacks


class ProblemInstance:
    """
    min_{w, v}  h(Aw + v 1) + lam * ||w||_1
    with h the averaged logistic loss over labels b in {-1, +1}.
    """

    def __init__(self, A, b, lam):
        self.A = as_design_matrix(A)
        self.b = np.asarray(b, dtype=np.float64)
        self.lam = float(lam)

        if self.b.ndim != 1 or self.b.shape[0] != self.A.m:
            raise ValueError("labels have shape {}, expected ({},)".format(self.b.shape, self.A.m))
        if not np.all(np.abs(self.b) == 1.0):
            raise ValueError("labels must be -1 or +1")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative, got {}".format(self.lam))

    @classmethod
    def from_dataset(cls, dataset: Dataset, lam):
        return cls(dataset.X, dataset.b, lam)

    @property
    def m(self):
        return self.A.m

    @property
    def n(self):
        return self.A.n

    @property
    def m_pos(self):
        return int(np.count_nonzero(self.b > 0))

    @property
    def m_neg(self):
        return self.m - self.m_pos

    def with_lambda(self, lam):
        return ProblemInstance(self.A, self.b, lam)

    def restrict(self, index):
        # column-restricted instance on the index set I
        return ProblemInstance(self.A.columns(index), self.b, self.lam)

    def __repr__(self):
        return "ProblemInstance(m={}, n={}, lam={:.3e})".format(self.m, self.n, self.lam)


def load_dataset(loader, **kwargs):
    if loader not in datasetLoadTypeCallbacks:
        raise ValueError("Could not recognize dataset type {!r}".format(loader))
    return datasetLoadTypeCallbacks[loader](**kwargs)


def load_from_params(params):
    # params: extracted DataParams
    if params.loader == "synthetic":
        return load_dataset("synthetic", m=params.m, n=params.n, seed=params.seed)
    if not params.data:
        raise ValueError("--data is required for the {!r} loader".format(params.loader))
    return load_dataset(params.loader, path=params.data, standardize=not params.no_standardize,
                        n_features=params.n_features or None)
