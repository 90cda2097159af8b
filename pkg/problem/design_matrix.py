import numpy as np
from scipy import sparse


class DesignMatrix:
    """
    m x n feature matrix, rows are samples. Held as a scipy CSR matrix, or as a
    dense row-major array once sparsity no longer pays (e.g. after centering).
    """

    def __init__(self, data):
        if sparse.issparse(data):
            data = sparse.csr_matrix(data, dtype=np.float64)
            data.sum_duplicates()
            data.sort_indices()
            if not np.all(np.isfinite(data.data)):
                raise ValueError("design matrix has non-finite entries")
        else:
            data = np.ascontiguousarray(data, dtype=np.float64)
            if data.ndim != 2:
                raise ValueError("design matrix must be 2-D, got shape {}".format(data.shape))
            if not np.all(np.isfinite(data)):
                raise ValueError("design matrix has non-finite entries")
        self._data = data
        self._col_norms = None
        self._csc = None

    @property
    def is_sparse(self):
        return sparse.issparse(self._data)

    @property
    def shape(self):
        return self._data.shape

    @property
    def m(self):
        return self._data.shape[0]

    @property
    def n(self):
        return self._data.shape[1]

    @property
    def nnz(self):
        if self.is_sparse:
            return int(self._data.count_nonzero())
        return int(np.count_nonzero(self._data))

    @property
    def density(self):
        return self.nnz / float(max(self.m * self.n, 1))

    @property
    def data(self):
        return self._data

    def matvec(self, w):
        # A w
        return np.asarray(self._data @ w).ravel()

    def rmatvec(self, u):
        # A^T u
        return np.asarray(self._data.T @ u).ravel()

    def columns(self, index):
        index = np.asarray(index, dtype=np.intp)
        if index.size and (index.min() < 0 or index.max() >= self.n):
            raise IndexError("column index out of range [0, {})".format(self.n))
        if self.is_sparse:
            # CSR column slicing scans every stored entry; the CSC copy is built once
            if self._csc is None:
                self._csc = self._data.tocsc()
            return DesignMatrix(self._csc[:, index])
        return DesignMatrix(self._data[:, index])

    def column_norms(self):
        if self._col_norms is None:
            if self.is_sparse:
                self._col_norms = np.sqrt(np.asarray(self._data.multiply(self._data).sum(axis=0)).ravel())
            else:
                self._col_norms = np.linalg.norm(self._data, axis=0)
        return self._col_norms

    def frobenius_sq(self):
        return float(np.square(self.column_norms()).sum())

    def toarray(self):
        if self.is_sparse:
            return self._data.toarray()
        return np.array(self._data)

    def __repr__(self):
        kind = "csr" if self.is_sparse else "dense"
        return "DesignMatrix({}x{}, {}, nnz={})".format(self.m, self.n, kind, self.nnz)


def as_design_matrix(A):
    if isinstance(A, DesignMatrix):
        return A
    return DesignMatrix(A)
