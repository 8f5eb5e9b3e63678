"""Complex baseband signal primitives.

Signals and filter taps are one-dimensional ``complex128`` numpy arrays. The
functions suffixed with ``_th`` are torch twins of the pieces that have to be
differentiated through (attack crafting); they accept batched inputs and keep
the autograd graph.
"""
import logging

import numpy as np
import scipy.signal
import torch as th

import advfilt.common.types as t

logger = logging.getLogger(__name__)

ABERTH_MAX_ITER = 200
ABERTH_TOL = 1e-12


def as_signal(data: t.TData, name: str = "signal") -> np.ndarray:
    if isinstance(data, th.Tensor):
        data = data.detach().cpu().numpy()
    array = np.asarray(data, dtype=np.complex128)
    if array.ndim != 1:
        raise ValueError("{} must be one-dimensional, got shape {}".format(name, array.shape))
    if array.size == 0:
        raise ValueError("{} is empty".format(name))
    if not np.all(np.isfinite(array)):
        raise ValueError("{} contains NaN or Inf".format(name))
    return array


def same_offset(m: int) -> int:
    """Leading entries of the full convolution dropped by ``conv_same``."""
    return (m - 1) // 2


def centered_unit_tap(m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("filter length must be positive, got {}".format(m))
    taps = np.zeros(m, dtype=np.complex128)
    taps[same_offset(m)] = 1.0
    return taps


def conv_full(s: t.TData, f: t.TData) -> np.ndarray:
    s = as_signal(s)
    f = as_signal(f, "taps")
    return np.convolve(s, f, mode="full")


def conv_same(s: t.TData, f: t.TData) -> np.ndarray:
    s = as_signal(s)
    f = as_signal(f, "taps")
    d, m = s.size, f.size
    if m > d:
        raise ValueError("filter length {} exceeds signal length {}".format(m, d))
    offset = same_offset(m)
    return np.convolve(s, f, mode="full")[offset:offset + d]


def toeplitz_same(s: t.TData, m: int) -> np.ndarray:
    """Matrix J of shape [d, m] such that ``conv_same(s, f) == J @ f``.

    J[n, j] = s[n + (m - 1) // 2 - j], zero outside the signal.
    """
    s = as_signal(s)
    d = s.size
    if m > d:
        raise ValueError("filter length {} exceeds signal length {}".format(m, d))
    offset = same_offset(m)
    padded = np.concatenate(
        (np.zeros(m - 1 - offset, np.complex128), s, np.zeros(offset, np.complex128))
    )
    windows = np.lib.stride_tricks.sliding_window_view(padded, m)
    return windows[:, ::-1].copy()


def iir_inverse_apply(y: t.TData, f: t.TData) -> np.ndarray:
    """Run y through 1 / D(z) with zero initial conditions.

    out[n] = (y[n] - sum_{i>=1} f[i] out[n - i]) / f[0]
    """
    y = as_signal(y)
    f = as_signal(f, "taps")
    if f[0] == 0:
        raise ZeroDivisionError("leading filter tap is zero, the inverse does not exist")
    return scipy.signal.lfilter(np.array([1.0 + 0.0j]), f, y)


def inverse_noise_gain(f: t.TData, n: int, average: bool = False) -> float:
    """Energy of the first ``n`` samples of the inverse filter's impulse response.

    White noise through the inverse has a variance that grows with this
    energy sample by sample. ``average=True`` returns the mean of the
    cumulative energy over the first ``n`` outputs, the block-level
    noise enhancement.
    """
    impulse = np.zeros(n, dtype=np.complex128)
    impulse[0] = 1.0
    response = iir_inverse_apply(impulse, f)
    energy = np.cumsum(np.abs(response) ** 2)
    if average:
        return float(np.mean(energy))
    return float(energy[-1])


def power_normalize(f: t.TData) -> np.ndarray:
    f = as_signal(f, "taps")
    norm = np.linalg.norm(f)
    if norm == 0.0:
        raise ValueError("cannot power-normalize an all-zero filter")
    return f / norm


def mean_sample_power(s: t.TData) -> float:
    s = as_signal(s)
    return float(np.mean(np.abs(s) ** 2))


def roots_to_coeffs(a: t.TData) -> np.ndarray:
    """Taps of prod_i (z^-1 + a_i); out[k] multiplies z^-k."""
    a = as_signal(a, "roots")
    return np.poly(-a).astype(np.complex128)[::-1].copy()


def aberth_roots(coeffs: np.ndarray, max_iter: int = ABERTH_MAX_ITER, tol: float = ABERTH_TOL):
    """Aberth-Ehrlich iteration on a polynomial given highest power first.

    Returns ``(roots, converged)``.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    degree = coeffs.size - 1
    deriv = np.polyder(coeffs)
    radius = 1.0 + np.max(np.abs(coeffs[1:] / coeffs[0]))
    angles = 2.0 * np.pi * np.arange(degree) / degree + 0.4
    x = radius * np.exp(1j * angles)
    converged = False
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            ratio = np.polyval(coeffs, x) / np.polyval(deriv, x)
            diff = x[:, None] - x[None, :]
            np.fill_diagonal(diff, np.inf)
            repulsion = np.sum(1.0 / diff, axis=1)
            step = ratio / (1.0 - ratio * repulsion)
            if not np.all(np.isfinite(step)):
                break
            x = x - step
            if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(x))):
                converged = True
                break
    return x, converged


def coeffs_to_roots(f: t.TData) -> np.ndarray:
    """Zeros of D(z) = sum_i f[i] z^-i.

    A zero leading tap lowers the polynomial degree; the shorter root list is
    returned and the deficit logged.
    """
    f = as_signal(f, "taps")
    if f.size < 2:
        raise ValueError("need at least two taps to have zeros")
    nonzero = np.flatnonzero(f)
    if nonzero.size < 2:
        logger.warning("degenerate polynomial %s has %d nonzero taps", f, nonzero.size)
    # z^(m-1) D(z) has the taps as coefficients, highest power first
    coeffs = np.trim_zeros(f, "f")
    expected = f.size - 1
    if coeffs.size - 1 < expected:
        logger.warning(
            "leading taps vanish: found %d of %d zeros", max(coeffs.size - 1, 0), expected
        )
    if coeffs.size <= 1:
        return np.zeros(0, dtype=np.complex128)
    if coeffs.size == 2:
        return np.array([-coeffs[1] / coeffs[0]], dtype=np.complex128)
    roots, converged = aberth_roots(coeffs)
    if not converged:
        logger.debug("Aberth iteration did not converge, using companion eigenvalues")
        roots = np.roots(coeffs).astype(np.complex128)
    return roots


def is_minimum_phase(f: t.TData) -> bool:
    f = as_signal(f, "taps")
    if f[0] == 0:
        return False
    roots = coeffs_to_roots(f)
    return bool(np.all(np.abs(roots) < 1.0))


def conv_same_th(s: th.Tensor, f: th.Tensor) -> th.Tensor:
    """Batched ``conv_same`` over the last axis of ``s`` keeping the graph."""
    return toeplitz_same_th(s, f.shape[-1]) @ f


def toeplitz_same_th(s: th.Tensor, m: int) -> th.Tensor:
    d = s.shape[-1]
    if m > d:
        raise ValueError("filter length {} exceeds signal length {}".format(m, d))
    offset = same_offset(m)
    lead = th.zeros(s.shape[:-1] + (m - 1 - offset,), dtype=s.dtype, device=s.device)
    tail = th.zeros(s.shape[:-1] + (offset,), dtype=s.dtype, device=s.device)
    padded = th.cat((lead, s, tail), dim=-1)
    index = (
        th.arange(d, device=s.device)[:, None]
        + th.arange(m - 1, -1, -1, device=s.device)[None, :]
    )
    return padded[..., index]


def power_normalize_th(f: th.Tensor) -> th.Tensor:
    return f / th.sqrt(th.sum(f.abs() ** 2))


def roots_to_coeffs_th(a: th.Tensor) -> th.Tensor:
    coeffs = th.ones(1, dtype=a.dtype, device=a.device)
    for root in a:
        zero = th.zeros(1, dtype=a.dtype, device=a.device)
        coeffs = th.cat((coeffs * root, zero)) + th.cat((zero, coeffs))
    return coeffs
