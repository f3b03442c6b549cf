"""
Quadrature building blocks - Gauss rules, the cutoff profile, ordered reductions
and Richardson extrapolation
"""

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_laguerre


T = TypeVar("T")
R = TypeVar("R")

LOG4 = math.log(4.0)

# Decay, in units of the inverse rate, that graded_tail covers with Legendre panels
TAIL_REACH = 8.0


@lru_cache(maxsize=64)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _laguerre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = roots_laguerre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    n-point Gauss–Legendre rule mapped to [a, b]

    Returns:
        (nodes, weights)
    """
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def gauss_laguerre(n: int, start: float, rate: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    n-point rule for ∫_start^∞ g(u) e^{−rate·u} du

    The exponential is folded into the weights, so the caller only evaluates g.
    """
    if rate <= 0:
        raise ValueError(f"decay rate must be positive, got {rate}")
    x, w = _laguerre(n)
    return start + x / rate, w * math.exp(-rate * start) / rate


def graded_tail(
    n: int, start: float, rate: float, distance: float, reach: float = TAIL_REACH
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rule for ∫_start^∞ g(u) e^{−rate·u} du where g may be singular at start − distance

    A slow rate puts Laguerre nodes far out where g has not flattened, so geometric
    Legendre panels (ratio ≤ 2 from the singular point) cover the stretch up to
    rate · (u − start + distance) = reach and Laguerre takes the rest.

    Args:
        n: Nodes per panel
        start: Lower limit
        rate: Decay rate, positive
        distance: Distance from start to the nearest singularity of g (inf for none)
        reach: Decay, in units of 1/rate, covered by panels

    Returns:
        (nodes, weights), the exponential folded into the weights
    """
    if rate <= 0:
        raise ValueError(f"decay rate must be positive, got {rate}")
    if rate * distance >= reach:
        return gauss_laguerre(n, start, rate)

    pole = start - distance
    panels = math.ceil(math.log2(reach / (rate * distance)))
    edges = [start] + [pole + distance * 2.0**i for i in range(1, panels)]
    edges.append(pole + reach / rate)

    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(n, a, b)
        nodes.append(x)
        weights.append(w * np.exp(-rate * x))
    x, w = gauss_laguerre(n, edges[-1], rate)
    nodes.append(x)
    weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def cutoff_axis_rule(
    n: int, radius: float, rate: float, distance: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rule for ∫ χ²(u) e^{−rate·u} g(u) du over u ≥ −log radius², in u = −log r²

    Legendre on the transition band of the bump, ``graded_tail`` beyond it.

    Args:
        n: Nodes per piece
        radius: Bump radius
        rate: Decay rate (the integrability defect), positive
        distance: Distance from the band start to the nearest singularity of g

    Returns:
        (nodes, weights)
    """
    u0 = support_start(radius)
    xc, wc = gauss_legendre(n, u0, u0 + LOG4)
    wc = wc * bump_sq_of_u(xc, radius) * np.exp(-rate * xc)
    xt, wt = graded_tail(n, u0 + LOG4, rate, distance + LOG4)
    return np.concatenate([xc, xt]), np.concatenate([wc, wt])


# ----------------------------------------------------------------------------
# Cutoff profile
# ----------------------------------------------------------------------------


def smoothstep(x):
    """Quintic smoothstep 6x⁵ − 15x⁴ + 10x³ clamped to [0, 1]"""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def smoothstep_prime(x):
    x = np.clip(x, 0.0, 1.0)
    return 30.0 * x * x * (x - 1.0) ** 2


def smoothstep_second(x):
    x = np.clip(x, 0.0, 1.0)
    return 60.0 * x * (2.0 * x - 1.0) * (x - 1.0)


def bump(r, radius: float):
    """Radial bump: 1 for r ≤ radius/2, 0 for r ≥ radius"""
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - 0.5 * radius) / (0.5 * radius))


def bump_sq_of_u(u, radius: float):
    """χ² as a function of u = −log r²"""
    return bump(np.exp(-0.5 * np.asarray(u, dtype=float)), radius) ** 2


def bump_sq_du(u, radius: float):
    """d/du of χ²(e^{−u/2}); non-negative and supported on [U, U + log 4]"""
    r = np.exp(-0.5 * np.asarray(u, dtype=float))
    x = (r - 0.5 * radius) / (0.5 * radius)
    chi = 1.0 - smoothstep(x)
    return 2.0 * chi * smoothstep_prime(x) * r / radius


def support_start(radius: float) -> float:
    """u-value of the outer edge of a bump: −log radius²"""
    return -2.0 * math.log(radius)


# ----------------------------------------------------------------------------
# Ordered reductions
# ----------------------------------------------------------------------------


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """
    Map ``fn`` over ``items`` returning results in input order

    The order of results (and thus of any later reduction) does not depend on ``threads``.
    """
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def ordered_sum(values: Sequence[float]) -> float:
    """Correctly rounded sum, independent of evaluation order upstream"""
    return math.fsum(float(v) for v in values)


def tensor_sum(
    rules: Sequence[Tuple[np.ndarray, np.ndarray]],
    coeffs: Sequence[float],
    base: float,
    g: Callable[[np.ndarray], np.ndarray],
    threads: int = 1,
) -> float:
    """
    Σ over the tensor grid of ∏ w_k · g(base + Σ coeffs_k · u_k)

    The first axis is split into one cell per node; each cell is reduced by numpy
    and the cells are combined with ``ordered_sum``.

    Args:
        rules: (nodes, weights) per axis
        coeffs: Linear coefficient per axis
        base: Constant term of the linear form
        g: Vectorized scalar function of the linear form
        threads: Worker count

    Returns:
        Quadrature value
    """
    if not rules:
        return float(g(np.asarray(base)))

    rest_lin = np.zeros(())
    rest_w = np.ones(())
    for (nodes, weights), c in zip(rules[1:], coeffs[1:]):
        rest_lin = np.add.outer(rest_lin, c * nodes)
        rest_w = np.multiply.outer(rest_w, weights)

    first_nodes, first_weights = rules[0]
    c0 = coeffs[0]

    def cell(k: int) -> float:
        lin = base + c0 * first_nodes[k] + rest_lin
        return float(first_weights[k] * np.sum(rest_w * g(lin)))

    return ordered_sum(ordered_map(cell, list(range(len(first_nodes))), threads))


# ----------------------------------------------------------------------------
# Extrapolation
# ----------------------------------------------------------------------------


def richardson(
    steps: Sequence[float], values: Sequence[float]
) -> Tuple[float, float, np.ndarray]:
    """
    Polynomial (Neville) extrapolation of values(step) to step → 0

    For a halving schedule the update factor is 1/(2^j − 1), the Romberg table.

    Args:
        steps: Strictly decreasing positive steps
        values: Values at those steps

    Returns:
        (extrapolated value, |last diagonal − previous diagonal|, full table)
    """
    h = np.asarray(steps, dtype=float)
    count = len(h)
    if count == 0 or count != len(values):
        raise ValueError("steps and values must be non-empty and of equal length")

    r = np.zeros((count, count))
    r[:, 0] = values
    for i in range(1, count):
        for j in range(1, i + 1):
            r[i, j] = r[i, j - 1] + (r[i, j - 1] - r[i - 1, j - 1]) * h[i] / (h[i - j] - h[i])

    value = r[count - 1, count - 1]
    if count == 1:
        return float(value), math.inf, r
    residual = abs(value - r[count - 1, count - 2])
    return float(value), float(residual), r
