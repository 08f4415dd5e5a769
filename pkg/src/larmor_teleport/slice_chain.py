"""Discretized propagation of the pulse through the ensemble, slice by slice.

Independent check on :func:`interaction_map`: the pulse is cut into ``N``
slices of length ``dt = T/N``, each a canonical mode ``(x_k, p_k)``. Slice
``k`` passes at ``t_k = (k + 1/2) dt`` and applies

    X   += a cos(W t_k) p_k
    P   += a sin(W t_k) p_k
    x_k += a [cos(W t_k) P_mid - sin(W t_k) X_mid]

with ``a = kappa sqrt(dt/T)``. ``X_mid, P_mid`` include half of the slice's
own kick. That half-kick drops out exactly since ``cos*sin - sin*cos = 0``, so
every step is an exact shear and the whole chain is exactly symplectic.
The output slices are then projected on the discretized mode functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .gaussian_core import symplectic_form
from .scattering_model import MODE_KINDS, TemporalMode, interaction_map, layout_for_order

ILL_CONDITIONED = 0.5


@dataclass(frozen=True)
class SliceChainConfig:
    n_slices: int
    n0: float
    kappa: float
    include_second_order_projections: bool = True

    def __post_init__(self):
        if self.n_slices < 1:
            raise ValueError("n_slices must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1 for the slice-chain oracle")

    @property
    def kinds(self) -> tuple[str, ...]:
        return MODE_KINDS if self.include_second_order_projections else MODE_KINDS[:4]

    @property
    def order(self) -> int:
        return 2 if self.include_second_order_projections else 1


def _phases(cfg: SliceChainConfig):
    t = (np.arange(cfg.n_slices) + 0.5) / cfg.n_slices
    return np.cos(cfg.n0 * t), np.sin(cfg.n0 * t), cfg.kappa / math.sqrt(cfg.n_slices)


def slice_chain_map(cfg: SliceChainConfig) -> np.ndarray:
    """Dense symplectic matrix on ``(X, P, x_0, p_0, ..., x_{N-1}, p_{N-1})``.

    Built by multiplying the per-slice shears; meant for small ``N``.
    """
    c, s, a = _phases(cfg)
    n = cfg.n_slices
    M = np.eye(2 * (n + 1))
    for k in range(n):
        step = np.eye(2 * (n + 1))
        xk, pk = 2 + 2 * k, 3 + 2 * k
        step[0, pk] = a * c[k]
        step[1, pk] = a * s[k]
        # midpoint atomic values; the a^2 self terms cancel
        step[xk, 1] = a * c[k]
        step[xk, 0] = -a * s[k]
        step[xk, pk] = a * c[k] * (0.5 * a * s[k]) - a * s[k] * (0.5 * a * c[k])
        M = step @ M
    return M


def _output_rows(cfg: SliceChainConfig, W: np.ndarray) -> np.ndarray:
    """Heisenberg rows of atoms and projected modes in terms of all inputs.

    Equivalent to ``P @ slice_chain_map(cfg)`` with ``P`` the projection, but O(N).
    """
    c, s, a = _phases(cfg)
    n = cfg.n_slices
    n_modes = W.shape[0]
    R = np.zeros((2 + 2 * n_modes, 2 * (n + 1)))
    xs = slice(2, None, 2)
    ps = slice(3, None, 2)
    R[0, 0] = 1.0
    R[0, ps] = a * c
    R[1, 1] = 1.0
    R[1, ps] = a * s
    for m, w in enumerate(W):
        rx, rp = 2 + 2 * m, 3 + 2 * m
        R[rx, xs] = w
        R[rx, 0] = -a * np.dot(w, s)
        R[rx, 1] = a * np.dot(w, c)
        # sums over later slices k > j of w_k c_k and w_k s_k
        wc = np.concatenate([np.cumsum((w * c)[::-1])[::-1][1:], [0.0]])
        ws = np.concatenate([np.cumsum((w * s)[::-1])[::-1][1:], [0.0]])
        R[rx, ps] = a * a * (s * wc - c * ws)
        R[rp, ps] = w
    return R


@dataclass(frozen=True)
class SliceChainResult:
    """Oracle output on the layout ``(A, c, s, c1, s1[, c2, s2])``.

    ``residual`` holds, per output quadrature, the norm of the part of its
    Heisenberg row outside the span of the input atoms and projected modes,
    i.e. what higher-order scattering modes contribute.
    """

    cov: np.ndarray
    residual: np.ndarray
    gram: np.ndarray
    labels: tuple[str, ...]


def slice_chain_covariance(cfg: SliceChainConfig, strict: bool = True) -> SliceChainResult:
    """Covariance of atoms and projected modes after the chain, ``vacuum = I``.

    With ``strict=False`` an ill-conditioned mode basis is tolerated, which
    lets under-resolved runs report how far off they are.
    """
    if cfg.n_slices < 16 * cfg.n0:
        warnings.warn(
            f"{cfg.n_slices} slices for n0={cfg.n0} is below the recommended 16 * n0",
            stacklevel=2,
        )
    W = np.array([TemporalMode(k, cfg.n0).discretize(cfg.n_slices) for k in cfg.kinds])
    gram = W @ W.T
    if strict and np.linalg.eigvalsh(gram).min() < ILL_CONDITIONED:
        raise ValueError(
            f"discretized mode functions are ill-conditioned at N={cfg.n_slices}; increase n_slices"
        )
    R = _output_rows(cfg, W)
    cov = R @ R.T

    # input-side span: atoms plus the same mode functions on x and p slices
    n = cfg.n_slices
    basis = np.zeros((2 + 2 * len(W), 2 * (n + 1)))
    basis[0, 0] = basis[1, 1] = 1.0
    basis[2::2, 2::2] = W
    basis[3::2, 3::2] = W
    q, _ = np.linalg.qr(basis.T)
    resid = np.linalg.norm(R.T - q @ (q.T @ R.T), axis=0)
    return SliceChainResult(cov, resid, gram, layout_for_order(cfg.order).labels)


def commutator_defect(n0: float, n_slices: int, kinds=MODE_KINDS) -> float:
    """Max deviation of the projected-mode commutator matrix from the canonical form."""
    W = np.array([TemporalMode(k, n0).discretize(n_slices) for k in kinds])
    m = len(W)
    # [x_a, p_b] = i <w_a, w_b>, [x_a, x_b] = [p_a, p_b] = 0
    comm = np.zeros((2 * m, 2 * m))
    g = W @ W.T
    comm[0::2, 1::2] = g
    comm[1::2, 0::2] = -g
    return float(np.abs(comm - symplectic_form(m)).max())


def oracle_deviation(cfg: SliceChainConfig, strict: bool = True) -> float:
    """Max entrywise gap between the chain and the analytic ``S S^T + noise``."""
    lm = interaction_map(cfg.kappa, order=cfg.order)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if not strict else "default")
        res = slice_chain_covariance(cfg, strict=strict)
    return float(np.abs(res.cov - (lm.S @ lm.S.T + lm.noise)).max())
