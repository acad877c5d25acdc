"""Observed count series with aligned covariates, plus CSV persistence.

File format: UTF-8 CSV with header ``y,x1,...,xd``, one row per time
index in ascending order.  Counts are strict nonnegative integers,
covariates finite decimals.  ``write_csv`` followed by ``read_csv`` is
the identity on valid datasets.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeCount, NonFiniteCovariate, ParseError


@dataclass
class Dataset:
    """Count series ``y`` of length n and covariate matrix ``x`` (n, d_x).

    Row t of ``x`` holds the covariate vector observed at time t; the
    mean recursion at time t reads row t-1.  ``lam`` optionally carries
    the true conditional-mean path when the data were simulated.
    """

    y: np.ndarray
    x: np.ndarray = None
    name: str = ""
    seed: object = None
    lam: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 1 or y.size < 2:
            raise ValueError("y must be a 1-d series of length >= 2")
        if np.any(y < 0) or not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError("counts must be nonnegative integers")
        self.y = y.astype(np.int64)
        x = self.x
        if x is None:
            x = np.zeros((self.y.size, 0))
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] != self.y.size:
            raise ValueError("covariate matrix must have one row per observation")
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates must be finite")
        self.x = x

    @property
    def n(self):
        return self.y.size

    @property
    def d_x(self):
        return self.x.shape[1]


def read_csv(path):
    """Parse a dataset file; raises ParseError subclasses with line numbers."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if not header or header[0] != "y":
            raise ParseError(f"header must start with 'y', got {header!r}", line=1)
        expected = ["y"] + [f"x{i}" for i in range(1, len(header))]
        if header != expected:
            raise ParseError(f"header must be y,x1,...,xd, got {header!r}", line=1)
        d_x = len(header) - 1
        ys, xs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != d_x + 1:
                raise ParseError(
                    f"expected {d_x + 1} fields, got {len(row)}", line=lineno
                )
            try:
                yv = int(row[0])
            except ValueError:
                raise ParseError(f"count {row[0]!r} is not an integer", line=lineno) from None
            if yv < 0:
                raise NegativeCount(f"count {yv} is negative", line=lineno)
            covs = []
            for j, fieldval in enumerate(row[1:], start=1):
                try:
                    xv = float(fieldval)
                except ValueError:
                    raise NonFiniteCovariate(
                        f"covariate x{j} value {fieldval!r} is not a number", line=lineno
                    ) from None
                if not np.isfinite(xv):
                    raise NonFiniteCovariate(
                        f"covariate x{j} value {fieldval!r} is not finite", line=lineno
                    )
                covs.append(xv)
            ys.append(yv)
            xs.append(covs)
    if len(ys) < 2:
        raise ParseError("dataset must contain at least 2 rows", line=2)
    return Dataset(y=np.array(ys), x=np.array(xs, dtype=float).reshape(len(ys), d_x), name=str(path))


def write_csv(data, path):
    """Write a dataset; floats use shortest round-trip representation."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x{i}" for i in range(1, data.d_x + 1)])
        for t in range(data.n):
            writer.writerow([int(data.y[t])] + [repr(float(v)) for v in data.x[t]])
