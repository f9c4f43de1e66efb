"""Random streams, samplers and the small SPD linear algebra used everywhere.

Streams
-------
An :class:`RngStream` is addressed by ``(master_seed, path)`` where ``path``
is a tuple of non-negative integers. The generator is PCG64 seeded from
``numpy.random.SeedSequence(entropy=master_seed, spawn_key=path)``, which is
the same derivation ``SeedSequence.spawn`` uses. Child streams append to the
path, so replicate ``r``/bootstrap ``b`` always gets the same draws no matter
which worker runs it or in what order.

Weibull convention: ``S(t) = exp(-(t / scale) ** shape)``; ``scale`` is the
characteristic life, not a rate.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-10

_MASK64 = (1 << 64) - 1


class RngStream:
    """Deterministic random stream keyed by ``(master_seed, *path)``."""

    __slots__ = ("master_seed", "path", "generator")

    def __init__(self, master_seed: int, *path: int):
        master_seed = int(master_seed) & _MASK64
        path = tuple(int(i) for i in path)
        if any(i < 0 for i in path):
            raise ValueError("stream path entries must be non-negative")
        self.master_seed = master_seed
        self.path = path
        seq = np.random.SeedSequence(entropy=master_seed, spawn_key=path)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    @property
    def origin(self) -> tuple[int, tuple[int, ...]]:
        return self.master_seed, self.path

    def child(self, *index: int) -> "RngStream":
        return RngStream(self.master_seed, *self.path, *index)

    def __repr__(self) -> str:
        return f"RngStream({self.master_seed}, path={self.path})"


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def cholesky(a) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == a``.

    Raises :class:`NotPositiveDefinite` when a pivot falls to ``PIVOT_TOL``
    or below.
    """
    a = _as_square(a)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if not np.allclose(a, a.T, rtol=0.0, atol=SYMMETRY_TOL * scale):
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if not pivot > PIVOT_TOL:
            raise NotPositiveDefinite(f"pivot {j} is {pivot:.3g}")
        low[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low


def _forward(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = np.empty_like(b)
    for i in range(low.shape[0]):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    return y


def _backward(low: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = low.shape[0]
    x = np.empty_like(y)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - low[i + 1:, i] @ x[i + 1:]) / low[i, i]
    return x


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``."""
    low = cholesky(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != low.shape[0]:
        raise DimensionMismatch(f"rhs length {b.shape[0]} != {low.shape[0]}")
    return _backward(low, _forward(low, b))


def sample_mvn(mean, cov, n: int, rng: RngStream) -> np.ndarray:
    """``n`` rows of ``mean + L z`` with ``z`` standard normal."""
    mean = np.asarray(mean, dtype=float)
    low = cholesky(cov)
    if low.shape[0] != mean.shape[0]:
        raise DimensionMismatch("mean and covariance disagree in dimension")
    z = rng.generator.standard_normal((int(n), mean.shape[0]))
    return mean + z @ low.T


def sample_weibull(shape: float, scale: float, n: int, rng: RngStream) -> np.ndarray:
    if not (shape > 0 and scale > 0):
        raise ValueError("Weibull shape and scale must be positive")
    return scale * rng.generator.weibull(shape, int(n))


def sample_uniform(n: int, rng: RngStream) -> np.ndarray:
    """Draws on the open interval (0, 1)."""
    u = rng.generator.random(int(n))
    # random() is [0, 1); zero would break -log(u)
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


def sample_bernoulli(p, rng: RngStream) -> np.ndarray:
    """One Bernoulli draw per entry of ``p``, returned as int8."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return (rng.generator.random(p.shape) < p).astype(np.int8)
