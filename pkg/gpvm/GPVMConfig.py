import os
import threading
from contextlib import contextmanager

import ujson
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from gpvm.errors import ConfigError


class GPVMConfig(BaseModel):
    """
    Every numeric tolerance used by the library. The active record is read through
    get_config(); nothing else hardcodes a threshold.
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    hermitian_tol: float = 1e-9  # ‖M − M†‖_max accepted as Hermitian input
    projector_tol: float = 1e-10  # Hermitian / idempotent check of a Projector
    rank_tol: float = 1e-8  # eigenvalue counted as 1 when computing a rank
    eig_residual_tol: float = 1e-9  # ‖MV − VΛ‖ relative to 1+‖M‖_max
    orthonormal_tol: float = 1e-10  # ‖V†V − I‖_max
    jacobi_offdiag_tol: float = 1e-13  # off-diagonal norm relative to ‖M‖_F
    jacobi_max_sweeps: int = 100
    meet_cutoff: float = 1e-9  # singular values below this span the intersection
    join_cutoff: float = 1e-10  # singular values above this span the sum
    basis_cutoff: float = 1e-10  # projector_from_basis rank cutoff
    cluster_abs: float = 1e-8  # eigenvalue clustering, absolute floor
    cluster_rel: float = 1e-10  # eigenvalue clustering, relative to spread
    value_merge_rel: float = 1e-8  # value-table merge, relative to 1+spread
    compare_tol: float = 1e-9  # lattice order, projector equality, channel checks
    outcome_tol: float = 1e-9  # amplitude treated as a possible outcome
    norm_tol: float = 1e-9  # |‖ψ‖ − 1| and |Tr ρ − 1|
    unitary_tol: float = 1e-9  # ‖U†U − I‖_max
    density_tol: float = 1e-10  # density-matrix Hermiticity, positivity and trace
    observable_tol: float = 1e-8  # equality of two observables
    biclique_subset_max_rows: int = 12  # above this the consensus enumeration is used
    ####################################################
    # Test-only knob. A positive value is subtracted from
    # every tolerance in within(), so all comparisons fail.
    ####################################################
    fault_skew: float = 0.0

    @field_validator('*')
    @classmethod
    def _positive(cls, v, info):
        if info.field_name == 'fault_skew':
            if v < 0:
                raise ValueError('fault_skew must be non-negative')
            return v
        if not v > 0:
            raise ValueError(f'{info.field_name} must be positive, got {v}')
        return v


def config_from_json(text, base=None):
    """
    Build a config from a JSON object of field overrides.
    Args:
        text: JSON text such as '{"compare_tol": 1e-8}'
        base: config the overrides apply to, the defaults when None
    Returns:
        GPVMConfig
    """
    try:
        overrides = ujson.loads(text)
    except ValueError as e:
        raise ConfigError(f'tolerance overrides are not valid JSON: {e}') from e
    if not isinstance(overrides, dict):
        raise ConfigError('tolerance overrides must be a JSON object')
    try:
        fields = base.model_dump() if base is not None else {}
        fields.update(overrides)
        return GPVMConfig(**fields)
    except ValidationError as e:
        raise ConfigError(f'invalid tolerance overrides: {e}') from e


def config_from_env(default=None):
    text = os.environ.get('GPVM_TOL')
    if not text:
        return default if default is not None else GPVMConfig()
    return config_from_json(text)


_lock = threading.Lock()
_active = GPVMConfig()


def get_config():
    return _active


def set_config(cfg):
    global _active
    assert isinstance(cfg, GPVMConfig)
    with _lock:
        _active = cfg


@contextmanager
def use_config(cfg=None, **overrides):
    """
    Temporarily replace the active config.
    Args:
        cfg: a full GPVMConfig, or None to start from the active one
        overrides: individual fields to change
    """
    previous = get_config()
    base = cfg if cfg is not None else previous
    try:
        new = GPVMConfig(**{**base.model_dump(), **overrides}) if overrides else base
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    set_config(new)
    try:
        yield new
    finally:
        set_config(previous)


def within(residual, tol):
    """residual <= tol, shifted by the fault-injection skew."""
    return float(residual) <= tol - _active.fault_skew


try:
    _active = config_from_env()
except ConfigError:
    # a bad GPVM_TOL is reported by the CLI, which re-reads it
    _active = GPVMConfig()
