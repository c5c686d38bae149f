"""
Scalar kernels ``f_eps`` applied to shortest-path distances.

Every kernel knows how to split ``f_eps(x + y)`` into a sum of separable
terms ``sum_t phi_t(x) * psi_t(y)``. That factorisation is what makes the
pairwise sums ``r[i] = sum_j f_eps(x_i + y_j) * payload[j]`` cost
O(rank * (p + q)) instead of O(p * q):

* exponential ``exp(-x / eps)`` -- exact, rank 1
* polynomial ``sum_t c_t (-x / eps)^t`` -- exact, rank ``degree + 1``
* random Fourier features -- unbiased Monte Carlo, rank ``2 m`` per stream
* cost-weighted exponential ``x exp(-x / eps)`` -- exact, rank 2
"""

import math

import numpy as np


class KernelConfigError(ValueError):
    """Kernel parameters are inconsistent or a sampler failed."""


def _check_eps(epsilon):
    epsilon = float(epsilon)
    if not epsilon > 0 or not np.isfinite(epsilon):
        raise KernelConfigError(f"epsilon must be positive, got {epsilon}")
    return epsilon


def _as_distances(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(x)):
        raise ValueError("NaN distance")
    return x


class Kernel:
    """Base class. Subclasses implement ``__call__`` and ``factors``."""

    name = "kernel"
    #: kernel value vanishes at infinite distance
    decays = True
    exact = True

    def __init__(self, epsilon):
        self.epsilon = _check_eps(epsilon)

    def eval(self, x):
        return self(x)

    def factors(self, x, side):
        """Separable features of ``x``, shape (len(x), rank).

        ``side`` is ``"left"`` for phi (row points) and ``"right"`` for psi
        (column points); ``f(x_i + y_j) = factors(x, 'left')[i] @ factors(y, 'right')[j]``.
        """
        raise NotImplementedError

    def pair_sum(self, xs, ys, payload):
        """``r[i] = sum_j f_eps(xs[i] + ys[j]) * payload[j]``."""
        xs, ys = _as_distances(xs), _as_distances(ys)
        payload = np.asarray(payload, dtype=np.float64)
        if payload.shape != ys.shape:
            raise ValueError("payload must match ys")
        return self.factors(xs, "left") @ (self.factors(ys, "right").T @ payload)

    def config(self):
        return {"kind": self.name, "epsilon": self.epsilon}

    def __repr__(self):
        return f"{type(self).__name__}(epsilon={self.epsilon:g})"


class ExponentialKernel(Kernel):
    """``f_eps(x) = exp(-x / eps)``; the regular Sinkhorn kernel."""

    name = "exponential"

    def __call__(self, x):
        x = _as_distances(x)
        with np.errstate(over="ignore"):
            return np.exp(-x / self.epsilon)

    def factors(self, x, side):
        return self(x)[:, None]


class CostWeightedExponential(Kernel):
    """``g_eps(x) = x exp(-x / eps)``, the entrywise product ``D o K``.

    Splits as ``(a + b) e^{-a/eps} e^{-b/eps} = [a e^{-a/eps}, e^{-a/eps}] . [e^{-b/eps}, b e^{-b/eps}]``.
    """

    name = "cost_weighted_exponential"

    def __call__(self, x):
        x = _as_distances(x)
        out = np.zeros_like(x)
        finite = np.isfinite(x)
        out[finite] = x[finite] * np.exp(-x[finite] / self.epsilon)
        return out

    def factors(self, x, side):
        x = _as_distances(x)
        e = np.exp(-x / self.epsilon)
        xe = np.where(np.isfinite(x), x, 0.0) * e
        if side == "left":
            return np.column_stack([xe, e])
        return np.column_stack([e, xe])


class PolynomialKernel(Kernel):
    """``f_eps(x) = sum_t coeffs[t] * (-x / eps)^t``.

    The pair sum expands ``(x + y)^t`` binomially into ``degree + 1``
    separable terms. Infinite distances are rejected.
    """

    name = "polynomial"
    decays = False

    def __init__(self, coeffs, epsilon=1.0):
        super().__init__(epsilon)
        self.coeffs = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
        if self.coeffs.ndim != 1 or len(self.coeffs) == 0:
            raise KernelConfigError("need at least one coefficient")
        self.degree = len(self.coeffs) - 1

    def __call__(self, x):
        x = _as_distances(x)
        if np.any(np.isinf(x)):
            raise ValueError("polynomial kernels are undefined at infinite distance")
        return np.polynomial.polynomial.polyval(-x / self.epsilon, self.coeffs)

    def factors(self, x, side):
        x = _as_distances(x)
        if np.any(np.isinf(x)):
            raise ValueError("polynomial kernels are undefined at infinite distance")
        t = -x / self.epsilon
        d = self.degree
        powers = t[:, None] ** np.arange(d + 1)[None, :]
        if side == "right":
            return powers
        # phi_l(x) = sum_{k>=l} c_k binom(k, l) t^{k-l}, paired with psi_l(y) = s^l
        mix = np.zeros((d + 1, d + 1))
        for k in range(d + 1):
            for l in range(k + 1):
                mix[k - l, l] += self.coeffs[k] * math.comb(k, l)
        return powers @ mix

    def config(self):
        return {"kind": self.name, "epsilon": self.epsilon, "coeffs": self.coeffs.tolist()}

    def __repr__(self):
        return f"PolynomialKernel(coeffs={self.coeffs.tolist()}, epsilon={self.epsilon:g})"


class RFFKernel(Kernel):
    """Random Fourier feature estimate of a kernel with known spectral density.

    With ``f_eps(z) = integral cos(2 pi w z) tau(w) dw`` and ``tau`` split
    into positive and negative parts of mass ``mass`` and ``negative_mass``,
    ``f_eps(z)`` is estimated by

        mass / m * sum_t cos(2 pi w_t z) - negative_mass / m * sum_t cos(2 pi w'_t z)

    with ``w_t`` drawn by ``sampler`` and ``w'_t`` by ``negative_sampler``.
    Frequencies are drawn once, at construction, from ``seed``.

    Parameters
    ----------
    epsilon : float
        Regularisation scale, kept for bookkeeping; the samplers must already
        describe ``f_eps``.
    sampler : callable
        ``sampler(rng, m) -> ndarray of m frequencies``.
    mass : float
        ``C``, the total mass of the positive part of ``tau``.
    n_features : int
        ``m``, features per stream.
    """

    name = "rff"
    exact = False

    def __init__(self, epsilon, sampler, mass, n_features, seed=0,
                 negative_sampler=None, negative_mass=0.0):
        super().__init__(epsilon)
        if n_features < 1:
            raise KernelConfigError("n_features must be >= 1")
        self.n_features = int(n_features)
        self.mass = float(mass)
        self.negative_mass = float(negative_mass)
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.omegas = self._draw(sampler, rng)
        self.negative_omegas = None
        if negative_sampler is not None:
            self.negative_omegas = self._draw(negative_sampler, rng)

    def _draw(self, sampler, rng):
        try:
            w = np.asarray(sampler(rng, self.n_features), dtype=np.float64).ravel()
        except Exception as exc:
            raise KernelConfigError(f"frequency sampler failed: {exc}") from exc
        if w.shape != (self.n_features,) or not np.all(np.isfinite(w)):
            raise KernelConfigError("sampler must return n_features finite frequencies")
        return w

    def _streams(self):
        yield self.omegas, self.mass
        if self.negative_omegas is not None:
            yield self.negative_omegas, -self.negative_mass

    def __call__(self, x):
        x = _as_distances(x)
        out = np.zeros(x.shape)
        finite = np.isfinite(x)
        xf = x[finite]
        for w, c in self._streams():
            out[finite] += c / self.n_features * np.cos(2 * np.pi * np.multiply.outer(xf, w)).sum(axis=-1)
        return out

    def factors(self, x, side):
        x = _as_distances(x)
        if np.any(np.isinf(x)):
            raise ValueError("RFF kernels need finite distances")
        blocks = []
        for w, c in self._streams():
            ang = 2 * np.pi * np.multiply.outer(x, w)
            scale = np.sqrt(abs(c) / self.n_features)
            sign = np.sign(c) if side == "left" else 1.0
            # cos(a + b) = cos a cos b - sin a sin b
            sin_sign = -1.0 if side == "right" else 1.0
            blocks.append(sign * scale * np.cos(ang))
            blocks.append(sign * sin_sign * scale * np.sin(ang))
        return np.hstack(blocks)

    def config(self):
        return {"kind": self.name, "epsilon": self.epsilon, "n_features": self.n_features,
                "mass": self.mass, "seed": self.seed}


def gaussian_rff(epsilon, n_features, seed=0):
    """RFF kernel for ``f(t) = exp(-t^2)``, i.e. ``f_eps(x) = exp(-x^2 / eps^2)``.

    Its spectral density is Gaussian with variance ``1 / (2 pi^2 eps^2)`` and
    unit mass.
    """
    eps = _check_eps(epsilon)
    sd = 1.0 / (np.sqrt(2.0) * np.pi * eps)
    return RFFKernel(eps, lambda rng, m: rng.normal(0.0, sd, m), 1.0, n_features, seed)


def kernel_from_config(cfg):
    """Build a kernel from a JSON-style dict such as ``{"kind": "exponential", "epsilon": 1}``."""
    kind = cfg.get("kind", "exponential")
    eps = cfg.get("epsilon", 1.0)
    if kind == "exponential":
        return ExponentialKernel(eps)
    if kind == "polynomial":
        return PolynomialKernel(cfg["coeffs"], eps)
    if kind in ("rff", "gaussian_rff"):
        return gaussian_rff(eps, cfg.get("n_features", 256), cfg.get("seed", 0))
    raise KernelConfigError(f"unknown kernel kind {kind!r}")


# functional aliases

def eval_kernel(kernel, x):
    return kernel(x)


def pair_sum_exp(xs, ys, payload, epsilon):
    """Rank-1 exponential pair sum: ``exp(-xs/eps) * sum_j exp(-ys[j]/eps) payload[j]``."""
    xs, ys = _as_distances(xs), _as_distances(ys)
    payload = np.asarray(payload, dtype=np.float64)
    if payload.shape != ys.shape:
        raise ValueError("payload must match ys")
    s = np.exp(-ys / epsilon) @ payload
    return np.exp(-xs / epsilon) * s


def pair_sum_poly(xs, ys, payload, kernel):
    if not isinstance(kernel, PolynomialKernel):
        raise KernelConfigError("pair_sum_poly needs a PolynomialKernel")
    return kernel.pair_sum(xs, ys, payload)


def pair_sum_rff(xs, ys, payload, kernel):
    if not isinstance(kernel, RFFKernel):
        raise KernelConfigError("pair_sum_rff needs an RFFKernel")
    return kernel.pair_sum(xs, ys, payload)
