"""Closed-form interpolation of partially observed abundance maps.

Moving observed compositions to ilr coordinates turns the problem into
independent scalar GP regressions (one per latent dimension, all sharing
the same spatial kernel and hence the same predictive variance); the
posterior mean field is mapped back to the simplex with the softmax.
Observation noise, when present, is a latent-space nugget added to the
diagonal of the observed-block covariance.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import geometry
from .errors import IllConditionedKernelError


@dataclass(frozen=True)
class PartialObservation:
    """Compositions observed at a subset of pixels.

    ``indices`` are row-major pixel indices into the grid, ``values`` is
    the (P, K) matrix of observed compositions (strictly interior) and
    ``nugget`` the latent observation-noise variance (0 for exact
    interpolation).
    """

    indices: np.ndarray
    values: np.ndarray
    nugget: float = 0.0

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("need at least one observed pixel")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("observed indices must be unique")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != idx.size:
            raise ValueError(
                f"values must have shape (P, {idx.size}), got {vals.shape}"
            )
        geometry.check_interior(vals, name="observed abundances")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)
        if self.nugget < 0:
            raise ValueError("nugget must be nonnegative")


def interpolate(obs, spec, grid):
    """Condition the pushforward GP prior on observed pixels.

    Parameters
    ----------
    obs : PartialObservation
    spec : PriorSpec
        Prior hyperparameters; `spec.kernel` supplies the spatial
        covariance, scaled by `spec.sigma_a2` in latent space.
    grid : ndarray, shape (N, 2)
        Coordinates of every pixel to predict (the observed pixels are
        indexed into this grid).

    Returns
    -------
    (ndarray, ndarray)
        The interpolated abundance image, shape (P, N), strictly interior;
        and the per-pixel latent predictive variance, shape (N,), shared by
        all P-1 latent dimensions.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    N = len(grid)
    if np.any(obs.indices < 0) or np.any(obs.indices >= N):
        raise ValueError("observed indices outside the grid")
    if obs.values.shape[0] != spec.P:
        raise ValueError(
            f"observed compositions have {obs.values.shape[0]} parts, prior has {spec.P}"
        )

    U_obs = grid[obs.indices]
    # latent covariance = sigma_a2 * spatial kernel (kernel carries sigma_k2)
    C_oo = spec.sigma_a2 * spec.kernel(U_obs, U_obs)
    C_oo = 0.5 * (C_oo + C_oo.T) + obs.nugget * np.eye(len(U_obs))
    C_so = spec.sigma_a2 * spec.kernel(grid, U_obs)
    c_ss = spec.sigma_a2 * spec.kernel.sigma_k2

    try:
        F = cho_factor(C_oo, lower=True)
    except np.linalg.LinAlgError:
        raise IllConditionedKernelError(
            "observed-block covariance is singular; add a nugget or drop "
            "near-duplicate observation pixels"
        ) from None

    mu = spec.latent_mean
    Z_obs = geometry.ilr(obs.values.T, spec.H) - mu  # (K, P-1), centered
    mean = mu + C_so @ cho_solve(F, Z_obs)  # (N, P-1)
    var = c_ss - np.sum(C_so * cho_solve(F, C_so.T).T, axis=1)
    var = np.maximum(var, 0.0)

    A = geometry.ilr_inv(mean, spec.H).T
    return A, var
