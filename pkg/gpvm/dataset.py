"""
JSON input files: observables, regions, partitions, generating chains and states.
Every loader raises InputError for malformed JSON or schema violations.
"""
import math
from typing import List, Optional, Union

import numpy as np
import ujson
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from gpvm.errors import InputError
from gpvm.fixtures import pauli_observable
from gpvm.measure import DensityMatrix
from gpvm.joint import BorelRegion, GridPartition, Interval, Rect, region_from_borel
from gpvm.observable import observable_from_matrix

FLAGS = {'[]': (True, True), '[)': (True, False), '(]': (False, True), '()': (False, False)}


class _Schema(BaseModel):
    model_config = ConfigDict(extra='forbid')


def _square(re, im, dim, what):
    if len(re) != dim or any(len(row) != dim for row in re):
        raise ValueError(f'{what}_re must be {dim}×{dim}')
    if im is not None and (len(im) != dim or any(len(row) != dim for row in im)):
        raise ValueError(f'{what}_im must be {dim}×{dim}')


class PauliSpec(_Schema):
    alpha: float = 0.0
    a: List[float]

    @field_validator('a')
    @classmethod
    def _three(cls, v):
        if len(v) != 3:
            raise ValueError('pauli vector a needs three components')
        return v


class ObservableFile(_Schema):
    """{"dim", "matrix_re", "matrix_im"} or {"pauli": {"alpha", "a"}}."""
    dim: Optional[int] = None
    matrix_re: Optional[List[List[float]]] = None
    matrix_im: Optional[List[List[float]]] = None
    pauli: Optional[PauliSpec] = None

    @model_validator(mode='after')
    def _one_form(self):
        if self.pauli is not None:
            if self.matrix_re is not None or self.matrix_im is not None:
                raise ValueError('give either a matrix or a pauli form, not both')
            if self.dim not in (None, 2):
                raise ValueError('the pauli form is two-dimensional')
            return self
        if self.dim is None or self.matrix_re is None:
            raise ValueError('matrix form needs dim and matrix_re')
        if self.dim < 1:
            raise ValueError('dim must be positive')
        _square(self.matrix_re, self.matrix_im, self.dim, 'matrix')
        return self

    def matrix(self):
        if self.pauli is not None:
            return pauli_observable(self.pauli.alpha, self.pauli.a).matrix
        im = self.matrix_im if self.matrix_im is not None else np.zeros((self.dim, self.dim))
        return np.array(self.matrix_re, dtype=float) + 1j * np.array(im, dtype=float)

    def observable(self):
        if self.pauli is not None:
            return pauli_observable(self.pauli.alpha, self.pauli.a)
        return observable_from_matrix(self.matrix())


def _interval(b):
    """[lo, hi] or [lo, hi, flags] with flags one of "[]", "[)", "(]", "()"; null or "inf" is infinite."""
    if len(b) not in (2, 3):
        raise ValueError('interval needs [lo, hi] or [lo, hi, flags]')
    flags = b[2] if len(b) == 3 else '[]'
    if flags not in FLAGS:
        raise ValueError(f'closed-flags must be one of {sorted(FLAGS)}, got {flags!r}')
    lo_closed, hi_closed = FLAGS[flags]
    return Interval(_bound(b[0]), _bound(b[1]), lo_closed, hi_closed)


def _bound(v):
    if v is None:
        return None
    if isinstance(v, str):
        if v not in ('inf', '-inf', '+inf'):
            raise ValueError(f'bad interval endpoint {v!r}')
        return None
    v = float(v)
    if math.isinf(v):
        return None
    return v


class RectSpec(_Schema):
    x: List[Union[float, str, None]]
    y: List[Union[float, str, None]]


class RegionFile(_Schema):
    """{"points": [[i, k], ...]} grid indices, {"rects": [{"x": [...], "y": [...]}]}, or both."""
    points: Optional[List[List[int]]] = None
    rects: Optional[List[RectSpec]] = None

    @model_validator(mode='after')
    def _something(self):
        if self.points is None and self.rects is None:
            raise ValueError('region needs points or rects')
        for p in self.points or []:
            if len(p) != 2:
                raise ValueError(f'grid point {p} must be [i, k]')
        return self

    def region(self, j):
        try:
            rects = tuple(Rect(_interval(r.x), _interval(r.y)) for r in self.rects or [])
            q = region_from_borel(j, BorelRegion(rects=rects))
            if self.points:
                q = q.union(j.from_cells([tuple(p) for p in self.points]))
        except ValueError as e:
            raise InputError(str(e)) from e
        return q


class PartitionFile(_Schema):
    regions: List[RegionFile]
    labels: Optional[List[str]] = None

    def partition(self, j):
        return GridPartition.from_regions([r.region(j) for r in self.regions], self.labels)


class ChainFile(_Schema):
    permutation: List[int]


class RhoFile(_Schema):
    """{"dim", "matrix_re", "matrix_im"} or a pure state {"psi_re", "psi_im"}."""
    dim: Optional[int] = None
    matrix_re: Optional[List[List[float]]] = None
    matrix_im: Optional[List[List[float]]] = None
    psi_re: Optional[List[float]] = None
    psi_im: Optional[List[float]] = None

    @model_validator(mode='after')
    def _one_form(self):
        if self.psi_re is not None:
            if self.psi_im is not None and len(self.psi_im) != len(self.psi_re):
                raise ValueError('psi_re and psi_im differ in length')
            return self
        if self.dim is None or self.matrix_re is None:
            raise ValueError('state needs dim and matrix_re, or psi_re')
        _square(self.matrix_re, self.matrix_im, self.dim, 'matrix')
        return self

    def density(self):
        if self.psi_re is not None:
            im = self.psi_im if self.psi_im is not None else [0.0] * len(self.psi_re)
            psi = np.array(self.psi_re, dtype=float) + 1j * np.array(im, dtype=float)
            return DensityMatrix.from_state(psi)
        im = self.matrix_im if self.matrix_im is not None else np.zeros((self.dim, self.dim))
        return DensityMatrix(np.array(self.matrix_re, dtype=float) + 1j * np.array(im, dtype=float))


def load_json(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return ujson.load(f)
    except OSError as e:
        raise InputError(f'cannot read {path}: {e}') from e
    except ValueError as e:
        raise InputError(f'{path} is not valid JSON: {e}') from e


def load_model(path, schema):
    """
    Args:
        path: JSON file
        schema: pydantic model class
    Returns:
        validated model instance
    """
    data = load_json(path)
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        raise InputError(f'{path}: {e}') from e


def load_observable(path):
    return load_model(path, ObservableFile).observable()


def load_region(path, j):
    return load_model(path, RegionFile).region(j)


def load_partition(spec, j):
    """
    Args:
        spec: "singletons", "rows", "cols", "full", or a partition JSON file
        j: JointObservable
    """
    named = {'singletons': GridPartition.singletons, 'rows': GridPartition.rows,
             'cols': GridPartition.cols, 'full': GridPartition.full}
    if spec in named:
        return named[spec](j)
    return load_model(spec, PartitionFile).partition(j)


def load_chain(path):
    return load_model(path, ChainFile).permutation


def load_density(path):
    return load_model(path, RhoFile).density()
