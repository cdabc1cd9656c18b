"""Accuracy and rate metrics."""

import numpy as np

from .errors import ConfigError, FitError


def mle(x, x_true, n_players=None):
    """Mean localisation error ``(1/N) sqrt(sum_i ||x_i - x_i*||^2)``.

    ``x`` is either an ``(N, n)`` array or a flat profile with
    ``n_players`` given.
    """
    x = np.asarray(x, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x.size != x_true.size:
        raise ConfigError(f"mle: profiles have lengths {x.size} and {x_true.size}")
    if x.ndim == 2:
        n_players = x.shape[0]
    elif n_players is None:
        raise ConfigError("mle: pass n_players for flat profiles")
    return float(np.sqrt(np.sum((x.ravel() - x_true.ravel()) ** 2)) / n_players)


def loglog_slope(k, values, window=1.0):
    """Least-squares slope of ``log(value)`` against ``log(k)``.

    ``window`` is either a trailing fraction of the series or a pair
    ``(k_min, k_max)`` of inclusive bounds on ``k``.
    """
    k = np.asarray(k, dtype=float)
    v = np.asarray(values, dtype=float)
    if k.shape != v.shape:
        raise ConfigError("loglog_slope: k and values must have the same length")
    if isinstance(window, (tuple, list)):
        mask = (k >= window[0]) & (k <= window[1])
    else:
        frac = float(window)
        if not 0 < frac <= 1:
            raise ConfigError("loglog_slope: window fraction must be in (0, 1]")
        start = int(np.floor((1.0 - frac) * k.size))
        mask = np.zeros(k.size, dtype=bool)
        mask[start:] = True
    kw, vw = k[mask], v[mask]
    if kw.size < 2:
        raise FitError("loglog_slope: fewer than two points in the window")
    if np.any(~np.isfinite(vw)) or np.any(vw <= 0) or np.any(kw <= 0):
        raise FitError("loglog_slope: values must be positive on the window")
    return float(np.polyfit(np.log(kw), np.log(vw), 1)[0])
