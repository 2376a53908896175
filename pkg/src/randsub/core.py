"""Data model, tuning configuration and small numerical kernels."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

__all__ = [
    "CriticalValue",
    "InferenceConfig",
    "NotPositiveDefinite",
    "Sample",
    "SymmetricMatrix",
    "default_block_size",
    "invert_spd",
    "normal_cdf",
    "normal_quantile",
]

#: scale-invariant pivot floor used by :func:`invert_spd`
DEFAULT_REL_TOL = 1e-10


class NotPositiveDefinite(ValueError):
    """Raised when a covariance matrix cannot be inverted reliably."""


class CriticalValue(enum.Enum):
    ASYMPTOTIC_NORMAL = "normal"
    PERMUTATION = "permutation"

    @classmethod
    def parse(cls, value: "CriticalValue | str") -> "CriticalValue":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"normal": cls.ASYMPTOTIC_NORMAL, "asymptotic": cls.ASYMPTOTIC_NORMAL,
                   "asymptoticnormal": cls.ASYMPTOTIC_NORMAL,
                   "permutation": cls.PERMUTATION, "perm": cls.PERMUTATION}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown critical value method {value!r}") from None


class Sample:
    """Immutable ``n x m`` data matrix, one row per cross-sectional unit.

    One-dimensional input is treated as a single variable (``m = 1``).
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"sample must be a 2-d matrix, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 1:
            raise ValueError(f"sample needs n >= 2 rows and m >= 1 columns, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.argwhere(~np.isfinite(arr))[0, 0])
            raise ValueError(f"sample contains a non-finite entry in row {bad}")
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def m(self) -> int:
        return self._data.shape[1]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Sample(n={self.n}, m={self.m})"


class SymmetricMatrix:
    """Symmetric matrix stored as its packed lower triangle.

    Symmetry is exact by construction: :attr:`array` rebuilds both triangles
    from the same stored values.
    """

    __slots__ = ("dim", "_packed")

    def __init__(self, dim: int, packed: np.ndarray):
        packed = np.asarray(packed, dtype=float)
        if dim < 1 or packed.shape != (dim * (dim + 1) // 2,):
            raise ValueError("packed storage does not match dimension")
        packed = packed.copy()
        packed.setflags(write=False)
        self.dim = int(dim)
        self._packed = packed

    @classmethod
    def from_dense(cls, a) -> "SymmetricMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        sym = 0.5 * (a + a.T)
        return cls(a.shape[0], sym[np.tril_indices(a.shape[0])])

    @property
    def array(self) -> np.ndarray:
        out = np.empty((self.dim, self.dim))
        rows, cols = np.tril_indices(self.dim)
        out[rows, cols] = self._packed
        out[cols, rows] = self._packed
        return out

    def __array__(self, dtype=None, copy=None):
        out = self.array
        return out if dtype is None else out.astype(dtype)

    def trace(self) -> float:
        return float(np.trace(self.array))

    def __repr__(self) -> str:
        return f"SymmetricMatrix(dim={self.dim})"


def _as_symmetric(m) -> SymmetricMatrix:
    return m if isinstance(m, SymmetricMatrix) else SymmetricMatrix.from_dense(m)


def cholesky_lower(m, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Lower Cholesky factor with a relative pivot check.

    Raises :class:`NotPositiveDefinite` when the smallest pivot ``L_kk**2``
    falls below ``rel_tol * trace / dim``.
    """
    sym = _as_symmetric(m)
    a = sym.array
    scale = np.trace(a) / sym.dim
    if not np.isfinite(scale) or scale <= 0:
        raise NotPositiveDefinite("matrix has non-positive trace; covariance is degenerate")
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    min_pivot = float(np.min(np.diag(chol)) ** 2)
    if min_pivot < rel_tol * scale:
        raise NotPositiveDefinite(
            f"minimum Cholesky pivot {min_pivot:.3e} below {rel_tol:g} x trace/dim; "
            "is a column constant?"
        )
    return chol


def invert_spd(m, rel_tol: float = DEFAULT_REL_TOL) -> SymmetricMatrix:
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    chol = cholesky_lower(m, rel_tol)
    eye = np.eye(chol.shape[0])
    linv = np.linalg.solve(chol, eye)
    return SymmetricMatrix.from_dense(linv.T @ linv)


def normal_cdf(x):
    """Standard normal CDF (scalar or array)."""
    out = special.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def normal_quantile(p):
    """Standard normal quantile; ``p`` must lie strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0) | ~(arr < 1)):
        raise ValueError(f"normal_quantile requires 0 < p < 1, got {p!r}")
    out = special.ndtri(arr)
    return float(out) if np.ndim(out) == 0 else out


def default_block_size(n: int) -> int:
    """Subsample size ``max(2, floor(n ** (1/3)))`` computed in integers."""
    if n < 2:
        raise ValueError("n must be at least 2")
    b = int(round(n ** (1.0 / 3.0)))
    while b ** 3 > n:
        b -= 1
    while (b + 1) ** 3 <= n:
        b += 1
    return max(2, b)


@dataclass(frozen=True)
class InferenceConfig:
    """Tuning parameters for the randomized subsampling procedures.

    ``R`` and ``b_n`` may be left as ``None``; :meth:`resolve` fills them with
    ``R = n`` and ``b_n = max(2, floor(n ** (1/3)))``.
    """

    R: int | None = None
    b_n: int | None = None
    L: int = 1000
    S: int = 1000
    alpha: float = 0.05
    beta: float = 0.005
    seed: int = 0
    critical_value: CriticalValue = CriticalValue.PERMUTATION
    rel_tol: float = field(default=DEFAULT_REL_TOL, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "critical_value", CriticalValue.parse(self.critical_value))
        if self.R is not None and (int(self.R) != self.R or self.R < 1):
            raise ValueError(f"R must be a positive integer, got {self.R!r}")
        if self.b_n is not None and (int(self.b_n) != self.b_n or self.b_n < 2):
            raise ValueError(f"b_n must be an integer >= 2, got {self.b_n!r}")
        if self.L < 1 or self.S < 1:
            raise ValueError("L and S must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 <= self.beta < self.alpha:
            raise ValueError(f"beta must lie in [0, alpha), got {self.beta}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def resolve(self, n: int) -> "InferenceConfig":
        """Return a copy with ``R`` and ``b_n`` bound to a sample of size ``n``."""
        R = n if self.R is None else self.R
        b = default_block_size(n) if self.b_n is None else self.b_n
        if b > n:
            raise ValueError(f"b_n={b} exceeds the sample size n={n}")
        return replace(self, R=int(R), b_n=int(b))

    def with_(self, **changes) -> "InferenceConfig":
        return replace(self, **changes)
