"""Least-angle regularization path for the lasso (homotopy form).

Follows the piecewise-linear solution path of

    min_beta  0.5 * ||y - X beta||^2 + lam * ||beta||_1

from lam = max|X'y| down, adding the feature whose correlation hits the
active level and dropping any active feature whose coefficient crosses zero
(the lasso modification).  The path stops as soon as the active set first
reaches the requested size, or when lam reaches zero.
"""
from __future__ import annotations

import numpy as np


def lasso_path_select(
    X: np.ndarray, y: np.ndarray, k: int, max_steps: int | None = None
) -> list[int]:
    """Feature ids active when the path first has k features (or exhausts).

    X is expected centered/scaled by the caller; returned ids are in order
    of activation (dropped features removed).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if max_steps is None:
        max_steps = 8 * d + 10
    beta = np.zeros(d)
    c = X.T @ y  # correlations with the residual (beta = 0)
    active: list[int] = []
    inactive = np.ones(d, dtype=bool)
    lam = float(np.max(np.abs(c))) if d else 0.0
    tiny = 1e-12
    if lam <= tiny:
        return []
    j0 = int(np.argmax(np.abs(c)))
    active.append(j0)
    inactive[j0] = False
    for _ in range(max_steps):
        if len(active) >= k:
            return active
        A = np.asarray(active, dtype=int)
        s = np.sign(c[A])
        G = X[:, A].T @ X[:, A]
        # direction of beta_A per unit decrease in lam
        dbeta, *_ = np.linalg.lstsq(G, s, rcond=None)
        v = X[:, A] @ dbeta
        a = X.T @ v  # d|c_j|/d(-lam) for inactive j; equals s_j on A
        # largest step gamma (lam decrease) before a constraint changes
        gamma = lam  # reaching lam = 0 ends the path
        event = ("end", -1)
        idx_in = np.flatnonzero(inactive)
        if idx_in.size:
            cj = c[idx_in]
            aj = a[idx_in]
            with np.errstate(divide="ignore", invalid="ignore"):
                g_plus = (lam - cj) / (1.0 - aj)
                g_minus = (lam + cj) / (1.0 + aj)
            for cand, jloc in (
                (g_plus, idx_in),
                (g_minus, idx_in),
            ):
                ok = np.isfinite(cand) & (cand > tiny)
                if np.any(ok):
                    loc = int(np.argmin(np.where(ok, cand, np.inf)))
                    if cand[loc] < gamma - tiny:
                        gamma = float(cand[loc])
                        event = ("add", int(jloc[loc]))
        # active coefficient crossing zero forces a drop
        with np.errstate(divide="ignore", invalid="ignore"):
            g_drop = -beta[A] / dbeta
        ok = np.isfinite(g_drop) & (g_drop > tiny)
        if np.any(ok):
            loc = int(np.argmin(np.where(ok, g_drop, np.inf)))
            if g_drop[loc] < gamma - tiny:
                gamma = float(g_drop[loc])
                event = ("drop", int(A[loc]))
        beta[A] += gamma * dbeta
        lam -= gamma
        c = X.T @ (y - X @ beta)
        if event[0] == "add":
            active.append(event[1])
            inactive[event[1]] = False
        elif event[0] == "drop":
            beta[event[1]] = 0.0
            active.remove(event[1])
            inactive[event[1]] = True
            if not active:
                # restart from the strongest remaining correlation
                if np.max(np.abs(c[inactive])) <= tiny:
                    return []
                j = int(np.argmax(np.abs(c) * inactive))
                active.append(j)
                inactive[j] = False
        else:
            return active
        if lam <= tiny:
            return active
    return active
