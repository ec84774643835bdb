"""
Non-learned reference predictors.

Both take observed positions [... × T_obs × 2] and return
[... × t_pred × 2] in the same coordinate frame.
"""

import numpy as np

from src.core.errors import ContractError, DimensionError


def _check(obs: np.ndarray, t_pred: int) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim < 2 or obs.shape[-1] != 2:
        raise DimensionError(f"observations must be [..., T_obs, 2], got {obs.shape}")
    if obs.shape[-2] < 2:
        raise ContractError(f"baselines need at least 2 observed steps, got {obs.shape[-2]}")
    if t_pred < 1:
        raise ContractError(f"t_pred must be >= 1, got {t_pred}")
    return obs


def linear_baseline(obs: np.ndarray, t_pred: int) -> np.ndarray:
    """
    Ordinary least squares of each coordinate against time, extrapolated.

    Observed steps sit at t = 0 .. T_obs-1; predictions at T_obs .. T_obs+t_pred-1.
    """
    obs = _check(obs, t_pred)
    t_obs = obs.shape[-2]
    design = np.column_stack([np.ones(t_obs), np.arange(t_obs, dtype=np.float64)])
    # every (trajectory, coordinate) pair is one right-hand side
    targets = np.moveaxis(obs, -2, 0).reshape(t_obs, -1)
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    future = np.column_stack([np.ones(t_pred), np.arange(t_obs, t_obs + t_pred, dtype=np.float64)])
    pred = (future @ coef).reshape((t_pred,) + obs.shape[:-2] + (2,))
    return np.moveaxis(pred, 0, -2)


def constant_velocity_baseline(obs: np.ndarray, t_pred: int) -> np.ndarray:
    """Repeat the last observed displacement."""
    obs = _check(obs, t_pred)
    last = obs[..., -1, :]
    velocity = last - obs[..., -2, :]
    steps = np.arange(1, t_pred + 1, dtype=np.float64)[:, None]
    return last[..., None, :] + steps * velocity[..., None, :]
