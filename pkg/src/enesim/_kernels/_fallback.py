"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Same signatures and results (up to floating-point reassociation). The
incomplete-Cholesky sweeps are sequential in natural order; here they are
vectorized along anti-diagonals (i + j = const), which respects every
dependency of the recurrence.
"""

from functools import lru_cache

import numpy as np


def stencil_apply(aP, aE, aN, x, out):
    out[...] = aP * x
    out[:-1, :] -= aE[:-1, :] * x[1:, :]
    out[1:, :] -= aE[:-1, :] * x[:-1, :]
    out[:, :-1] -= aN[:, :-1] * x[:, 1:]
    out[:, 1:] -= aN[:, :-1] * x[:, :-1]


@lru_cache(maxsize=8)
def _wavefronts(nx, ny):
    """Flat indices into the (nx+1, ny+1) padded array, one array per i+j."""
    fronts = []
    w = ny + 1
    for s in range(nx + ny - 1):
        i = np.arange(max(0, s - ny + 1), min(s, nx - 1) + 1)
        j = s - i
        fronts.append(((i + 1) * w + (j + 1)))
    return fronts, w


def _pad(a, fill):
    out = np.full((a.shape[0] + 1, a.shape[1] + 1), fill, dtype=float)
    out[1:, 1:] = a
    return out.ravel()


def dic_factor(aP, aE, aN):
    nx, ny = aP.shape
    fronts, w = _wavefronts(nx, ny)
    p = _pad(aP, 1.0)
    e = _pad(aE, 0.0)
    n = _pad(aN, 0.0)
    d = np.ones_like(p)
    for k in fronts:
        south = k - 1
        west = k - w
        d[k] = p[k] - n[south] ** 2 / d[south] - e[west] ** 2 / d[west]
    return d.reshape(nx + 1, ny + 1)[1:, 1:].copy()


def dic_solve(d, aE, aN, r, z):
    nx, ny = d.shape
    fronts, w = _wavefronts(nx, ny)
    dp = _pad(d, 1.0)
    e = _pad(aE, 0.0)
    n = _pad(aN, 0.0)
    zz = np.zeros_like(dp)
    rr = _pad(r, 0.0)
    for k in fronts:
        zz[k] = (rr[k] + n[k - 1] * zz[k - 1] + e[k - w] * zz[k - w]) / dp[k]
    # the padded slot past the last column/row stays zero
    zz = np.concatenate([zz, np.zeros(w + 1)])
    for k in reversed(fronts):
        zz[k] += (n[k] * zz[k + 1] + e[k] * zz[k + w]) / dp[k]
    z[...] = zz[: (nx + 1) * w].reshape(nx + 1, ny + 1)[1:, 1:]


def sor_redblack(aP, aE, aN, b, phi, omega, sweeps):
    nx, ny = aP.shape
    ii, jj = np.indices((nx, ny))
    colors = [(ii + jj) % 2 == c for c in (0, 1)]
    nb = np.empty_like(phi)
    for _ in range(sweeps):
        for red in colors:
            nb[...] = b
            nb[:-1, :] += aE[:-1, :] * phi[1:, :]
            nb[1:, :] += aE[:-1, :] * phi[:-1, :]
            nb[:, :-1] += aN[:, :-1] * phi[:, 1:]
            nb[:, 1:] += aN[:, :-1] * phi[:, :-1]
            phi[red] += omega * (nb[red] / aP[red] - phi[red])
