"""Pure-NumPy implementations of the solver's hot kernels.

These are the fallback for the compiled extension (`fsdiag._kernels`) and the
reference the compiled kernels are tested against. Both backends expose the
same three functions:

- ``project_columns_simplex``: Euclidean projection of every column of a
  matrix onto the probability simplex (sum 1, entries >= 0), via the
  sort-and-threshold rule of Duchi et al.
- ``prox_rows_maxnorm``: row-wise proximal operator of ``t_i * max_j |v_j|``.
  By Moreau decomposition this is ``v - P_{l1-ball(t_i)}(v)``, i.e. clipping
  the row to ``[-tau, tau]`` at the threshold found by the l1-ball projection.
- ``admm_step``: one full splitting iteration (projection block, proximal
  block, dual update) operating in place; returns the squared primal and dual
  residual norms.
"""

from __future__ import annotations

import numpy as np


def project_columns_simplex(a: np.ndarray) -> np.ndarray:
    """Project each column of ``a`` (I, J) onto the probability simplex."""
    i_dim = a.shape[0]
    if i_dim == 1:
        return np.ones_like(a)
    u = -np.sort(-a, axis=0)  # descending per column
    css = np.cumsum(u, axis=0) - 1.0
    ks = np.arange(1, i_dim + 1, dtype=np.float64)[:, None]
    cond = u > css / ks
    # cond[0] is always True; rho = index of the last True row per column
    rho = i_dim - 1 - np.argmax(cond[::-1], axis=0)
    theta = np.take_along_axis(css, rho[None, :], axis=0)[0] / (rho + 1.0)
    return np.maximum(a - theta[None, :], 0.0)


def _rows_l1ball_tau(av: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Per-row clipping threshold tau of the l1-ball projection.

    ``av`` holds row-wise absolute values, ``radius`` the per-row ball radii
    (> 0), and every row is assumed to lie strictly outside its ball.
    """
    j_dim = av.shape[1]
    u = -np.sort(-av, axis=1)
    css = np.cumsum(u, axis=1) - radius[:, None]
    ks = np.arange(1, j_dim + 1, dtype=np.float64)[None, :]
    cond = u > css / ks
    rho = j_dim - 1 - np.argmax(cond[:, ::-1], axis=1)
    return np.take_along_axis(css, rho[:, None], axis=1)[:, 0] / (rho + 1.0)


def prox_rows_maxnorm(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Proximal operator of ``t_i * max_j |v_ij|`` applied to each row."""
    t = np.asarray(t, dtype=np.float64)
    av = np.abs(v)
    mass = av.sum(axis=1)
    out = v.copy()
    inside = mass <= t  # whole row is absorbed by the penalty
    out[inside & (t > 0)] = 0.0
    active = (~inside) & (t > 0)
    if np.any(active):
        tau = _rows_l1ball_tau(av[active], t[active])
        out[active] = np.clip(v[active], -tau[:, None], tau[:, None])
    return out


def admm_step(
    d_scaled: np.ndarray,
    z: np.ndarray,
    c: np.ndarray,
    u: np.ndarray,
    t: np.ndarray,
    over_relax: float,
) -> tuple[float, float]:
    """One splitting iteration in place; returns squared residual norms.

    ``d_scaled`` is D / rho and ``t`` is weights / rho. ``z`` holds the
    simplex-feasible iterate afterwards.
    """
    z[:] = project_columns_simplex(c - u - d_scaled)
    zr = over_relax * z + (1.0 - over_relax) * c
    v = zr + u
    c_new = prox_rows_maxnorm(v, t)
    u[:] = v - c_new
    r2 = float(np.sum((z - c_new) ** 2))
    s2 = float(np.sum((c_new - c) ** 2))
    c[:] = c_new
    return r2, s2
