"""Small shared numeric helpers."""

import numpy as np


def pairwise_corr(values: np.ndarray) -> np.ndarray:
    """Pearson correlation matrix over pairwise-complete rows.

    Entries are NaN where either column has zero variance on the shared rows.
    The diagonal is NaN for constant columns and 1 otherwise.
    """
    values = np.asarray(values, dtype=float)
    obs = np.isfinite(values)
    with np.errstate(invalid="ignore", divide="ignore"):
        if obs.all():
            centered = values - values.mean(axis=0)
            ss = np.einsum("ij,ij->j", centered, centered)
            cov = centered.T @ centered
            denom = np.sqrt(np.outer(ss, ss))
            r = cov / denom
            r[denom <= 0] = np.nan
        else:
            o = obs.astype(float)
            y0 = np.where(obs, values, 0.0)
            n = o.T @ o
            sx = y0.T @ o  # sx[i, j] = sum of item i over rows where j observed
            sxx = (y0 * y0).T @ o
            sxy = y0.T @ y0
            cov = sxy - sx * sx.T / n
            vx = sxx - sx * sx / n
            vy = vx.T
            denom = np.sqrt(vx * vy)
            r = cov / denom
            bad = (denom <= 1e-12 * np.maximum(np.abs(sxx), 1.0)) | (n < 2)
            r[bad] = np.nan
    return np.clip(r, -1.0, 1.0)


def entropy_bits(counts) -> float:
    """Shannon entropy (bits) of a count vector; 0 for a degenerate vector."""
    c = np.asarray(counts, dtype=float).ravel()
    tot = c.sum()
    if tot <= 0:
        return 0.0
    pr = c[c > 0] / tot
    return float(-(pr * np.log2(pr)).sum())


def mutual_information_bits(x, y) -> float:
    """Plug-in mutual information (bits) between two discrete vectors."""
    _, xi = np.unique(np.asarray(x), return_inverse=True)
    _, yi = np.unique(np.asarray(y), return_inverse=True)
    table = np.zeros((xi.max() + 1, yi.max() + 1))
    np.add.at(table, (xi, yi), 1.0)
    return entropy_bits(table.sum(1)) + entropy_bits(table.sum(0)) - entropy_bits(table)
