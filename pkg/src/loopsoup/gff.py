"""Gaussian free field on a domain: centered Gaussian with covariance G_D."""

from __future__ import annotations

import numpy as np

from .graph import Domain, GraphError, green_function


def sample_gff(domain: Domain, rng, size: int | None = None) -> np.ndarray:
    """Centered Gaussian vector(s) with covariance G_D, via Cholesky.

    Requires a symmetric positive definite Green's matrix (reversible walk);
    returns shape (|D|,) or (size, |D|).
    """
    G = green_function(domain).values
    if not np.allclose(G, G.T, rtol=1e-9, atol=1e-12):
        raise GraphError("Green's matrix is not symmetric; GFF needs a reversible walk")
    try:
        L = np.linalg.cholesky(0.5 * (G + G.T))
    except np.linalg.LinAlgError as exc:
        raise GraphError("Green's matrix is not positive definite") from exc
    shape = (domain.size,) if size is None else (size, domain.size)
    xi = rng.standard_normal(shape)
    return xi @ L.T
