"""Token fields and the metric geometry they induce.

A token field is a weighted set of Gaussian kernels in R^D. Its density
defines a conformal metric g(x) = I / (rho(x) + eps), so dense regions are
metrically short and geodesics gravitate toward them. Analytic metrics
(flat scaling, 2-sphere chart) are provided as test oracles, and a generic
finite-difference path computes Christoffel symbols and curvature for any
metric source.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ChartDomainError, SingularMetricError

# Relative step for central differences of the metric; the same step is
# reused for the Christoffel derivatives inside the curvature tensor.
FD_STEP = 1e-4


def _as_vector(x, dim: int, name: str = "point") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"{name} must have dimension {dim}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class TokenEmbedding:
    """One embedded token: mean position, covariance and density weight."""

    id: int
    mean: np.ndarray
    covariance: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        d = mean.shape[0]
        if mean.ndim != 1:
            raise ValueError(f"token {self.id}: mean must be a vector")
        if cov.ndim == 1:
            # diagonal storage, expanded to the full matrix
            if cov.shape != (d,):
                raise ValueError(f"token {self.id}: diagonal covariance length != {d}")
            cov = np.diag(cov)
        if cov.shape != (d, d):
            raise ValueError(f"token {self.id}: covariance must be {d}x{d}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError(f"token {self.id}: covariance must be symmetric")
        eigmin = float(np.min(np.linalg.eigvalsh(cov))) if d else 0.0
        if eigmin < -1e-10 * max(1.0, float(np.max(np.abs(cov), initial=0.0))):
            raise ValueError(f"token {self.id}: covariance must be positive semidefinite")
        if self.weight < 0:
            raise ValueError(f"token {self.id}: weight must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class TokenField:
    """A set of token embeddings plus the kernel parameters of the density.

    bandwidth is the shared Gaussian length scale h; epsilon regularises the
    conformal factor 1/(rho + eps) so the metric stays finite away from data.
    """

    tokens: tuple[TokenEmbedding, ...]
    dimension: int
    bandwidth: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        tokens = tuple(self.tokens)
        ids = [t.id for t in tokens]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate token id(s): {dup}")
        for t in tokens:
            if t.dim != self.dimension:
                raise ValueError(f"token {t.id}: mean dimension {t.dim} != field dimension {self.dimension}")
        object.__setattr__(self, "tokens", tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def token_by_id(self, token_id: int) -> TokenEmbedding:
        for t in self.tokens:
            if t.id == token_id:
                return t
        raise ValueError(f"unknown token id {token_id}")

    def means(self) -> np.ndarray:
        """Token means stacked as an (n, D) array (empty -> (0, D))."""
        if not self.tokens:
            return np.zeros((0, self.dimension))
        return np.stack([t.mean for t in self.tokens])

    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.tokens], dtype=float)

    def nearest(self, x) -> TokenEmbedding:
        """Token whose mean is Euclidean-nearest to x; ties go to the lowest id."""
        if not self.tokens:
            raise ValueError("nearest() on an empty field")
        x = _as_vector(x, self.dimension)
        best = None
        best_key = None
        for t in self.tokens:
            key = (float(np.linalg.norm(t.mean - x)), t.id)
            if best_key is None or key < best_key:
                best, best_key = t, key
        return best

    def with_tokens(self, tokens: Sequence[TokenEmbedding]) -> "TokenField":
        return TokenField(tuple(tokens), self.dimension, self.bandwidth, self.epsilon)


def density_at(field: TokenField, x) -> float:
    """Weighted Gaussian kernel density rho(x) = sum_i w_i exp(-|x-v_i|^2 / 2h^2)."""
    x = _as_vector(x, field.dimension)
    if not field.tokens:
        return 0.0
    diffs = field.means() - x
    sq = np.einsum("nd,nd->n", diffs, diffs)
    return float(np.dot(field.weights(), np.exp(-sq / (2.0 * field.bandwidth**2))))


def density_gradient(field: TokenField, x) -> np.ndarray:
    """Closed-form gradient of density_at with respect to x."""
    x = _as_vector(x, field.dimension)
    if not field.tokens:
        return np.zeros(field.dimension)
    diffs = field.means() - x
    sq = np.einsum("nd,nd->n", diffs, diffs)
    kern = field.weights() * np.exp(-sq / (2.0 * field.bandwidth**2))
    return np.einsum("n,nd->d", kern, diffs) / field.bandwidth**2


@dataclass(frozen=True)
class CurvatureReport:
    """Riemann tensor R^rho_{sigma mu nu} and the scalar curvature at a point."""

    riemann: np.ndarray
    scalar: float


class MetricSource:
    """A Riemannian metric on a single global chart.

    Subclasses implement metric(); christoffel() defaults to central finite
    differences of the metric and may be overridden with a closed form.
    """

    dim: int

    def check_domain(self, x: np.ndarray) -> None:
        """Raise ChartDomainError if x is outside the chart. Default: all of R^D."""

    def in_domain(self, x) -> bool:
        try:
            self.check_domain(_as_vector(x, self.dim))
        except ChartDomainError:
            return False
        return True

    def metric(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def has_closed_form_christoffel(self) -> bool:
        return type(self).christoffel is not MetricSource.christoffel

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        return christoffel_fd(self, x)


def fd_step_at(x: np.ndarray) -> float:
    return FD_STEP * max(1.0, float(np.linalg.norm(x)))


def _inverse_metric(g: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(g)) or abs(np.linalg.det(g)) < 1e-300:
        raise SingularMetricError("metric is not invertible at this point")
    return np.linalg.inv(g)


def christoffel_fd(source: MetricSource, x: np.ndarray) -> np.ndarray:
    """Gamma^m_{nl} = 1/2 g^{mr} (d_l g_{rn} + d_n g_{rl} - d_r g_{nl}), with
    the metric derivatives taken by central differences."""
    d = source.dim
    delta = fd_step_at(x)
    dg = np.empty((d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = delta
        dg[k] = (source.metric(x + e) - source.metric(x - e)) / (2.0 * delta)
    ginv = _inverse_metric(source.metric(x))
    term1 = np.einsum("mr,lrn->mnl", ginv, dg)
    term2 = np.einsum("mr,nrl->mnl", ginv, dg)
    term3 = np.einsum("mr,rnl->mnl", ginv, dg)
    return 0.5 * (term1 + term2 - term3)


class FlatMetric(MetricSource):
    """Constant scaled-identity metric g = scale * I on R^D."""

    def __init__(self, dim: int, scale: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be positive")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.dim = dim
        self.scale = float(scale)

    def metric(self, x: np.ndarray) -> np.ndarray:
        _as_vector(x, self.dim)
        return self.scale * np.eye(self.dim)

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        _as_vector(x, self.dim)
        return np.zeros((self.dim, self.dim, self.dim))


class SphereMetric(MetricSource):
    """Round 2-sphere of radius r in the (theta, phi) chart, 0 < theta < pi."""

    dim = 2

    def __init__(self, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def check_domain(self, x: np.ndarray) -> None:
        theta = x[0]
        if not (0.0 < theta < np.pi) or abs(np.sin(theta)) < 1e-12:
            raise ChartDomainError(f"sphere chart is singular at theta={theta}")

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = _as_vector(x, 2)
        self.check_domain(x)
        r2 = self.radius**2
        return np.diag([r2, r2 * np.sin(x[0]) ** 2])

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        x = _as_vector(x, 2)
        self.check_domain(x)
        theta = x[0]
        gamma = np.zeros((2, 2, 2))
        gamma[0, 1, 1] = -np.sin(theta) * np.cos(theta)
        cot = np.cos(theta) / np.sin(theta)
        gamma[1, 0, 1] = cot
        gamma[1, 1, 0] = cot
        return gamma


class ConformalFieldMetric(MetricSource):
    """Data-driven conformal metric g(x) = lambda(x) * I, lambda = 1/(rho + eps)."""

    def __init__(self, field: TokenField):
        self.field = field
        self.dim = field.dimension

    def conformal_factor(self, x) -> float:
        return 1.0 / (density_at(self.field, x) + self.field.epsilon)

    def conformal_gradient(self, x) -> np.ndarray:
        lam = self.conformal_factor(x)
        return -(lam**2) * density_gradient(self.field, x)

    def metric(self, x: np.ndarray) -> np.ndarray:
        return self.conformal_factor(x) * np.eye(self.dim)

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        # closed form for a conformally flat metric lambda * I:
        # Gamma^m_{nl} = (delta^m_n d_l lam + delta^m_l d_n lam - delta_nl d_m lam) / (2 lam)
        x = _as_vector(x, self.dim)
        lam = self.conformal_factor(x)
        grad = self.conformal_gradient(x)
        d = self.dim
        eye = np.eye(d)
        gamma = (
            np.einsum("mn,l->mnl", eye, grad)
            + np.einsum("ml,n->mnl", eye, grad)
            - np.einsum("nl,m->mnl", eye, grad)
        )
        return gamma / (2.0 * lam)


class CallableMetric(MetricSource):
    """Metric defined by an arbitrary g(x) callable; Christoffels via finite
    differences. Mainly useful for tests and experiments."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], dim: int,
                 domain: Optional[Callable[[np.ndarray], bool]] = None):
        self.fn = fn
        self.dim = dim
        self.domain = domain

    def check_domain(self, x: np.ndarray) -> None:
        if self.domain is not None and not self.domain(x):
            raise ChartDomainError(f"point {x} outside chart domain")

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = _as_vector(x, self.dim)
        self.check_domain(x)
        return np.asarray(self.fn(x), dtype=float)


def metric_at(source: MetricSource, x) -> np.ndarray:
    """Metric tensor g_{mu nu} at x as a (D, D) array."""
    return source.metric(_as_vector(x, source.dim))


def christoffel_at(source: MetricSource, x, method: str = "auto") -> np.ndarray:
    """Christoffel symbols Gamma^mu_{nu lambda} at x as a (D, D, D) array.

    method "auto" prefers a closed form when the source has one, "exact"
    requires it, and "fd" forces the finite-difference path.
    """
    x = _as_vector(x, source.dim)
    if method == "fd":
        return christoffel_fd(source, x)
    if method == "exact":
        if not source.has_closed_form_christoffel:
            raise ValueError(f"{type(source).__name__} has no closed-form Christoffel symbols")
        return source.christoffel(x)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    return source.christoffel(x)


def curvature_at(source: MetricSource, x) -> CurvatureReport:
    """Riemann tensor and scalar curvature at x.

    R^rho_{sigma mu nu} = d_mu Gamma^rho_{nu sigma} - d_nu Gamma^rho_{mu sigma}
    + Gamma^rho_{mu l} Gamma^l_{nu sigma} - Gamma^rho_{nu l} Gamma^l_{mu sigma},
    with the Gamma derivatives taken by central differences. The scalar is the
    double contraction of the Ricci tensor with the inverse metric.
    """
    x = _as_vector(x, source.dim)
    d = source.dim
    delta = fd_step_at(x)
    dgamma = np.empty((d, d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = delta
        dgamma[k] = (source.christoffel(x + e) - source.christoffel(x - e)) / (2.0 * delta)
    gamma = source.christoffel(x)
    riemann = (
        np.einsum("mrns->rsmn", dgamma)
        - np.einsum("nrms->rsmn", dgamma)
        + np.einsum("rml,lns->rsmn", gamma, gamma)
        - np.einsum("rnl,lms->rsmn", gamma, gamma)
    )
    ricci = np.einsum("rsrn->sn", riemann)
    ginv = _inverse_metric(source.metric(x))
    scalar = float(np.einsum("sn,sn->", ginv, ricci))
    return CurvatureReport(riemann=riemann, scalar=scalar)
