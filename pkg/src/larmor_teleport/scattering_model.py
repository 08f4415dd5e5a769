"""Light scattering off a Larmor-precessing spin ensemble as a Gaussian map.

Temporal light modes are Legendre envelopes times ``cos(Omega t)`` or
``sin(Omega t)``. Order 0 is the plain cosine/sine mode, orders 1 and 2 are
the back-action modes. Mode names in layouts are ``c``, ``s`` for order 0
and ``c<n>``, ``s<n>`` above.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .gaussian_core import CANONICAL_LAYOUT, LinearMap, QuadratureLayout

MODE_KINDS = ("cos", "sin", "cos_back1", "sin_back1", "cos_back2", "sin_back2")


@dataclass(frozen=True)
class InteractionParams:
    kappa: float
    n0: float = 350.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.n0 <= 0:
            raise ValueError(f"n0 must be positive, got {self.n0}")


def mode_name(trig: str, order: int) -> str:
    return trig[0] + (str(order) if order else "")


def layout_for_order(order: int) -> QuadratureLayout:
    modes = ["A"]
    for n in range(order + 1):
        modes += [mode_name("cos", n), mode_name("sin", n)]
    return QuadratureLayout(tuple(modes))


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not kappa >= 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    return kappa


def interaction_map(kappa: float, order: int = 1) -> LinearMap:
    """Input-output map for atoms plus scattering modes up to back-action ``order``.

    ``order=1`` gives the 10-quadrature map on ``CANONICAL_LAYOUT``. Coupling
    to modes of order ``order + 1`` is not tracked and enters as added noise
    on the highest-order ``x`` quadratures, ``(kappa/2)**4 / ((2K+1)(2K+3))``.

    Atoms only couple to the order-0 modes; mode ``n`` receives back action
    from the neighbouring orders ``n - 1`` and ``n + 1`` of the other trig kind.
    """
    if isinstance(kappa, InteractionParams):
        kappa = kappa.kappa
    kappa = _check_kappa(kappa)
    if order < 0:
        raise ValueError("order must be >= 0")
    lay = layout_for_order(order)
    ix = lay.index
    S = np.eye(lay.dim)
    r = kappa / math.sqrt(2)
    h = (kappa / 2) ** 2

    S[ix("x_A"), ix("p_c")] = r
    S[ix("p_A"), ix("p_s")] = r
    S[ix("x_c"), ix("p_A")] = r
    S[ix("x_s"), ix("x_A")] = -r

    def coupling(n: int, m: int) -> float:
        # coefficient of p_s^(m) in x_c^(n); x_s^(n) gets minus this on p_c^(m)
        if n == 0:
            return {0: h, 1: h / math.sqrt(3)}.get(m, 0.0)
        if m == n - 1:
            return -h / math.sqrt((2 * n + 1) * (2 * n - 1))
        if m == n + 1:
            return h / math.sqrt((2 * n + 1) * (2 * n + 3))
        return 0.0

    noise = np.zeros((lay.dim, lay.dim))
    for n in range(order + 1):
        xc, xs = ix(f"x_{mode_name('cos', n)}"), ix(f"x_{mode_name('sin', n)}")
        for m in range(max(0, n - 1), n + 2):
            g = coupling(n, m)
            if g == 0.0:
                continue
            if m <= order:
                S[xc, ix(f"p_{mode_name('sin', m)}")] += g
                S[xs, ix(f"p_{mode_name('cos', m)}")] -= g
            else:
                noise[xc, xc] += g * g
                noise[xs, xs] += g * g
    return LinearMap(S, noise)


def qnd_map(kappa: float) -> LinearMap:
    """Zero-field QND coupling on layout ``(A, L)``."""
    kappa = _check_kappa(kappa)
    S = np.eye(4)
    S[0, 3] = kappa
    S[2, 1] = kappa
    return LinearMap(S)


QND_LAYOUT = QuadratureLayout(("A", "L"))


def _parse_kind(kind: str) -> tuple[str, int]:
    if kind not in MODE_KINDS:
        raise ValueError(f"unknown mode kind {kind!r}; expected one of {MODE_KINDS}")
    trig, _, rest = kind.partition("_")
    return trig, int(rest[-1]) if rest else 0


@dataclass(frozen=True)
class TemporalMode:
    """Normalized mode function on ``u = tau / T`` in units of ``T**-1/2``.

    The envelope of order ``n`` is ``sqrt(2 (2n+1)) P_n(1 - 2u)``, which gives
    ``sqrt(6)(1 - 2u)`` and ``sqrt(10)(6u^2 - 6u + 1)`` for the two back-action orders.
    """

    kind: str
    n0: float

    def __post_init__(self):
        _parse_kind(self.kind)
        if self.n0 <= 0:
            raise ValueError("n0 must be positive")

    @property
    def trig(self) -> str:
        return _parse_kind(self.kind)[0]

    @property
    def order(self) -> int:
        return _parse_kind(self.kind)[1]

    def envelope(self, u):
        c = np.zeros(self.order + 1)
        c[-1] = 1.0
        return math.sqrt(2 * (2 * self.order + 1)) * legendre.legval(1 - 2 * np.asarray(u), c)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        osc = np.cos(self.n0 * u) if self.trig == "cos" else np.sin(self.n0 * u)
        return self.envelope(u) * osc

    def discretize(self, n_slices: int) -> np.ndarray:
        """Slice weights ``f(t_k) sqrt(dt)`` at midpoints ``t_k = (k + 1/2) / N``."""
        u = (np.arange(n_slices) + 0.5) / n_slices
        return self(u) / math.sqrt(n_slices)


def mode_function(kind: str, n0: float) -> TemporalMode:
    return TemporalMode(kind, n0)


class QuadratureError(RuntimeError):
    pass


def _gauss_legendre_panels(fn, n0: float, panels_per_period: int, nodes: int) -> float:
    periods = max(1, math.ceil(n0 / (2 * math.pi)))
    n_panels = panels_per_period * periods
    x, w = legendre.leggauss(nodes)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    return float(np.dot(ww, fn(u)))


def mode_overlap(f: TemporalMode, g: TemporalMode, atol: float = 1e-10) -> float:
    """``int_0^T f g dtau`` by composite Gauss-Legendre (>= 32 panels per period)."""
    if f.n0 != g.n0:
        raise ValueError("modes must share n0")
    prod = lambda u: f(u) * g(u)  # noqa: E731
    coarse = _gauss_legendre_panels(prod, f.n0, 32, 8)
    fine = _gauss_legendre_panels(prod, f.n0, 64, 8)
    if abs(fine - coarse) > atol:
        raise QuadratureError(f"overlap did not converge: {coarse!r} vs {fine!r}")
    return fine


def gram_matrix(n0: float, n_slices: int | None = None, kinds=MODE_KINDS) -> np.ndarray:
    """Overlap matrix of mode functions; discretized on slices if ``n_slices`` given."""
    modes = [TemporalMode(k, n0) for k in kinds]
    if n_slices is None:
        return np.array([[mode_overlap(a, b) for b in modes] for a in modes])
    W = np.array([m.discretize(n_slices) for m in modes])
    return W @ W.T


@dataclass(frozen=True)
class PhysicalParams:
    """Ensemble and probe parameters in SI units (rates in s^-1, areas in m^2)."""

    N_at: float
    N_ph: float
    F_spin: float
    a0: float
    a1: float
    sigma: float
    Gamma: float
    Delta: float
    A_beam: float
    T_pulse: float
    Omega: float

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if self.Delta / self.Gamma < 10:
            warnings.warn(
                f"Delta/Gamma = {self.Delta / self.Gamma:.3g} < 10; off-resonant model is questionable",
                stacklevel=2,
            )

    @property
    def n0(self) -> float:
        return self.Omega * self.T_pulse

    @property
    def J(self) -> float:
        return self.N_at * self.F_spin


def coupling_from_physical(p: PhysicalParams) -> tuple[float, float]:
    """Return ``(kappa, eta)``: coupling strength and depumping probability."""
    kappa = math.sqrt(p.N_ph * p.J) * p.a1 * p.sigma * p.Gamma / (2 * p.A_beam * p.Delta)
    eta = p.N_ph * p.a0 * p.sigma * p.Gamma**2 / (4 * p.A_beam * p.Delta**2)
    return kappa, eta


__all__ = [
    "CANONICAL_LAYOUT",
    "MODE_KINDS",
    "InteractionParams",
    "PhysicalParams",
    "QND_LAYOUT",
    "QuadratureError",
    "TemporalMode",
    "cesium_d2_example",
    "coupling_from_physical",
    "gram_matrix",
    "interaction_map",
    "layout_for_order",
    "mode_function",
    "mode_name",
    "mode_overlap",
    "qnd_map",
]


_CS_D2_WAVELENGTH = 852.35e-9


def cesium_d2_example(**overrides) -> PhysicalParams:
    """Cs D2 probe of a 10^12 atom vapour cell with user-chosen constants.

    Cross section ``3 lambda^2 / 2 pi``, linewidth ``2 pi x 5.234 MHz``, and
    polarizability weights ``a0 = 2/3``, ``a1 = a0 / 8`` for the F=4 manifold.
    ``Omega`` is taken so that ``Omega * T = 350``.
    """
    base = dict(
        N_at=1e12,
        N_ph=2.5e13,
        F_spin=4.0,
        a0=2 / 3,
        a1=1 / 12,
        sigma=3 * _CS_D2_WAVELENGTH**2 / (2 * math.pi),
        Gamma=2 * math.pi * 5.234e6,
        Delta=2 * math.pi * 1e9,
        A_beam=6e-4,
        T_pulse=1e-3,
        Omega=3.5e5,
    )
    base.update(overrides)
    return PhysicalParams(**base)
