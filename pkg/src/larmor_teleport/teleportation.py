"""Teleportation of a coherent light pulse onto the atomic spin.

Results are reported in the physical convention (vacuum variance 1/2);
internally all covariances use the ``vacuum = I`` convention of
:mod:`larmor_teleport.gaussian_core`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .gaussian_core import (
    CANONICAL_LAYOUT,
    GaussianState,
    HomodyneSpec,
    LinearMap,
    QuadratureLayout,
    apply_map,
    conditioning_terms,
    entropy_vn,
    reduce,
    tensor,
    vacuum_state,
)
from .scattering_model import interaction_map

INPUT_LAYOUT = QuadratureLayout(("in_c", "in_s"))
PROTOCOL_LAYOUT = CANONICAL_LAYOUT + INPUT_LAYOUT
#: Bell outcomes in the order (x~_c, x~_s, q~_c, q~_s).
BELL_LABELS = ("x_c", "x_s", "p_in_c", "p_in_s")

_SQ2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CoherentInput:
    mean_y: float = 0.0
    mean_q: float = 0.0

    @property
    def photon_number(self) -> float:
        return (self.mean_y**2 + self.mean_q**2) / 2

    @property
    def amplitude(self) -> np.ndarray:
        return np.array([self.mean_y, self.mean_q])


@dataclass(frozen=True)
class NoiseParams:
    beta: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class Gains:
    g_x: float = 1.0
    g_q: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.g_x) and math.isfinite(self.g_q)):
            raise ValueError("gains must be finite")

    def matrix(self) -> np.ndarray:
        """Feedback weights on the Bell outcomes for (X, P)."""
        gx, gq = self.g_x, self.g_q
        return np.array([[0.0, gx, -gq, 0.0], [-gx, 0.0, 0.0, -gq]])


UNIT_GAINS = Gains(1.0, 1.0)


@dataclass(frozen=True)
class TeleportationResult:
    final_mean: np.ndarray
    final_var: np.ndarray
    fidelity: float
    final_cov: np.ndarray | None = None


def encode_input(inp: CoherentInput) -> GaussianState:
    """Upper-sideband coherent input on the cosine/sine modulation modes.

    ``y = (y_s + q_c)/sqrt2`` and ``q = -(y_c - q_s)/sqrt2``; the lower
    sideband partner stays in vacuum.
    """
    y, q = inp.mean_y, inp.mean_q
    mean = np.array([-q, y, y, q]) / _SQ2  # (y_c, q_c, y_s, q_s)
    return GaussianState(INPUT_LAYOUT, mean, np.eye(4))


def bell_measure_map() -> tuple[LinearMap, HomodyneSpec]:
    """Balanced splitters mixing ``c`` with ``in_c`` and ``s`` with ``in_s``.

    Afterwards ``x_c`` holds ``(x_c + y_c)/sqrt2`` and ``p_in_c`` holds
    ``(p_c - q_c)/sqrt2``, likewise for the sine pair.
    """
    lay = PROTOCOL_LAYOUT
    S = np.eye(lay.dim)
    for light, inp in (("c", "in_c"), ("s", "in_s")):
        for q in ("x", "p"):
            i, j = lay.index(f"{q}_{light}"), lay.index(f"{q}_{inp}")
            S[i, i] = S[i, j] = S[j, i] = 1 / _SQ2
            S[j, j] = -1 / _SQ2
    return LinearMap(S), HomodyneSpec(BELL_LABELS, traced=("c1", "s1"))


def protocol_state(kappa: float, inp: CoherentInput) -> GaussianState:
    """Atoms, scattered light and input after interaction and the Bell splitters."""
    state = tensor(vacuum_state(CANONICAL_LAYOUT), encode_input(inp))
    state = apply_map(state, interaction_map(kappa).direct_sum(LinearMap.identity(4)))
    bell, _ = bell_measure_map()
    return apply_map(state, bell)


def fidelity_coherent(result_mean, result_var, inp: CoherentInput) -> float:
    """Overlap of the coherent input with a Gaussian of given mean and physical variances."""
    vx, vp = result_var
    if vx <= 0 or vp <= 0:
        raise ValueError("variances must be positive")
    a, b = 1 + 2 * vx, 1 + 2 * vp
    dy = inp.mean_y - result_mean[0]
    dq = inp.mean_q - result_mean[1]
    return float(2 / math.sqrt(a * b) * math.exp(-(dy**2) / a - dq**2 / b))


def closed_form_variance(kappa: float) -> float:
    """Physical variance of either final atomic quadrature in the ideal protocol."""
    u = 1 - kappa / 2
    h = (kappa / 2) ** 2
    return 0.5 * (u**2 + 0.5 * u**4 + 0.5 + h**2 / 6 + 1)


def ideal_fidelity(kappa):
    """Ideal-protocol fidelity; accepts arrays."""
    k = np.asarray(kappa, dtype=float)
    u = 1 - k / 2
    var = 0.5 * (u**2 + 0.5 * u**4 + 0.5 + (k / 2) ** 4 / 6 + 1)
    return 2 / (1 + 2 * var)


def teleport_closed_form(kappa: float, inp: CoherentInput) -> TeleportationResult:
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    v = closed_form_variance(kappa)
    mean = inp.amplitude
    var = np.array([v, v])
    return TeleportationResult(mean, var, fidelity_coherent(mean, var, inp), np.diag(var))


def _feedback_average(state: GaussianState, gains: Gains):
    """Ensemble-averaged atoms after homodyne + feedback, in ``vacuum = I`` units."""
    _, spec = bell_measure_map()
    t = conditioning_terms(state, spec)
    G = gains.matrix()
    # averaging the conditional state over outcomes: A' + (K + G) B (K + G)^T
    KG = t.gain + G
    cov = t.cond_cov + KG @ t.meas_cov @ KG.T
    mean = state.mean[t.kept_idx] + G @ t.meas_mean
    return mean, cov


def teleport_pipeline(
    kappa: float, inp: CoherentInput, gains: Gains = UNIT_GAINS
) -> TeleportationResult:
    """Same protocol as :func:`teleport_closed_form`, run through the Gaussian machinery."""
    state = protocol_state(kappa, inp)
    mean, cov = _feedback_average(state, gains)
    var = np.diag(cov) / 2
    return TeleportationResult(mean, var, fidelity_coherent(mean, var, inp), cov / 2)


# -- noisy protocol ---------------------------------------------------------

_LANGEVIN = ("f_X", "f_P", "f_X2", "f_P2", "f_xs", "f_xc", "f_qs", "f_qc")


@dataclass(frozen=True)
class _NoisyModel:
    """Final (X, P) as ``base + g_x * gx_rows + g_q * gq_rows`` over extended inputs."""

    base: np.ndarray
    gx_rows: np.ndarray
    gq_rows: np.ndarray
    cov_in: np.ndarray
    # mean of the extended input for a unit amplitude in y and in q
    mean_y: np.ndarray
    mean_q: np.ndarray

    def rows(self, g_x, g_q):
        return self.base + g_x * self.gx_rows + g_q * self.gq_rows

    def quad_forms(self):
        """Gram matrices of ``(1, g_x, g_q)`` for the X and P rows."""
        out = []
        for k in range(2):
            V = np.stack([self.base[k], self.gx_rows[k], self.gq_rows[k]])
            out.append(V @ self.cov_in @ V.T)
        return out


def _noisy_model(kappa: float, noise: NoiseParams, second_stage: bool = True) -> _NoisyModel:
    lay = PROTOCOL_LAYOUT
    d = lay.dim
    n_ext = d + len(_LANGEVIN)
    sb, sl = math.sqrt(1 - noise.beta), math.sqrt(noise.beta)
    se, sn = math.sqrt(1 - noise.epsilon), math.sqrt(noise.epsilon)
    lang = {name: d + i for i, name in enumerate(_LANGEVIN)}

    # rows are over the state right after the interaction (plus Langevin sources)
    bell, _ = bell_measure_map()
    meas = np.zeros((4, n_ext))
    meas[:, :d] = bell.S[[lay.index(lab) for lab in BELL_LABELS]]
    txc, txs, tqc, tqs = meas

    def unit(i):
        v = np.zeros(n_ext)
        v[i] = 1.0
        return v

    atom_rows = []
    for q, f1, f2 in (("x_A", "f_X", "f_X2"), ("p_A", "f_P", "f_P2")):
        # each decay step: sqrt(1-b) X + sqrt(b) f with a fresh vacuum source
        damped = sb * unit(lay.index(q)) + sl * unit(lang[f1])
        if second_stage:
            damped = sb * damped + sl * unit(lang[f2])
        atom_rows.append(damped)
    X0, P0 = atom_rows

    base = np.stack([X0, P0])
    gx_rows = np.stack([se * txs + sn * unit(lang["f_xs"]), -(se * txc + sn * unit(lang["f_xc"]))])
    gq_rows = np.stack([-(se * tqc + sn * unit(lang["f_qc"])), -(se * tqs + sn * unit(lang["f_qs"]))])

    post = apply_map(
        tensor(vacuum_state(CANONICAL_LAYOUT), vacuum_state(INPUT_LAYOUT)),
        interaction_map(kappa).direct_sum(LinearMap.identity(4)),
    )
    cov_in = np.eye(n_ext)
    cov_in[:d, :d] = post.cov

    def ext_mean(inp):
        m = np.zeros(n_ext)
        m[lay.mode_indices(("in_c", "in_s"))] = encode_input(inp).mean
        return m

    return _NoisyModel(
        base, gx_rows, gq_rows, cov_in, ext_mean(CoherentInput(1.0, 0.0)), ext_mean(CoherentInput(0.0, 1.0))
    )


def _noisy_moments(model: _NoisyModel, gains: Gains):
    R = model.rows(gains.g_x, gains.g_q)
    cov = R @ model.cov_in @ R.T / 2
    transfer = np.column_stack([R @ model.mean_y, R @ model.mean_q])
    return transfer, cov


def teleport_noisy(
    kappa: float,
    noise: NoiseParams,
    gains: Gains,
    inp: CoherentInput,
    second_stage: bool = True,
) -> TeleportationResult:
    """Protocol with atomic decay ``beta``, photon loss ``epsilon`` and finite gains.

    Decay is applied twice: once during the interaction and once more before
    feedback, each time with a fresh unit-variance Langevin source. Pass
    ``second_stage=False`` to drop the second decay step.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    transfer, cov = _noisy_moments(_noisy_model(kappa, noise, second_stage), gains)
    mean = transfer @ inp.amplitude
    var = np.diag(cov).copy()
    return TeleportationResult(mean, var, fidelity_coherent(mean, var, inp), cov)


def effective_gain(kappa: float, noise: NoiseParams, gains: Gains, second_stage: bool = True) -> np.ndarray:
    """2x2 matrix taking input amplitudes ``(<y>, <q>)`` to final ``(<X>, <P>)``."""
    transfer, _ = _noisy_moments(_noisy_model(kappa, noise, second_stage), gains)
    return transfer


def _average_from_moments(transfer, var_x, var_p, n_bar):
    a, b = 1 + 2 * var_x, 1 + 2 * var_p
    D = np.eye(2) - transfer
    Q = D.T @ np.diag([1 / a, 1 / b]) @ D
    det = np.linalg.det(np.eye(2) + 2 * n_bar * Q)
    if det <= 0:
        raise ArithmeticError("Gaussian average diverges: exponent is not negative definite")
    return 2 / math.sqrt(a * b) / math.sqrt(det)


def average_fidelity_gaussian(
    kappa: float,
    noise: NoiseParams,
    gains: Gains,
    n_bar: float,
    second_stage: bool = True,
) -> float:
    """Fidelity averaged over coherent inputs drawn with mean photon number ``n_bar``.

    Inputs follow ``exp(-(y^2 + q^2) / 2 n_bar) / (2 pi n_bar)``; the Gaussian
    integral is done in closed form.
    """
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    transfer, cov = _noisy_moments(_noisy_model(kappa, noise, second_stage), gains)
    return _average_from_moments(transfer, cov[0, 0], cov[1, 1], n_bar)


def average_fidelity_quadrature(
    kappa: float,
    noise: NoiseParams,
    gains: Gains,
    n_bar: float,
    n_nodes: int = 60,
    second_stage: bool = True,
) -> float:
    """Tensor-product Gauss-Hermite evaluation of the same average, point by point."""
    if n_bar == 0:
        return teleport_noisy(kappa, noise, gains, CoherentInput(), second_stage).fidelity
    t, w = np.polynomial.hermite.hermgauss(n_nodes)
    amp = math.sqrt(2 * n_bar) * t
    total = 0.0
    model = _noisy_model(kappa, noise, second_stage)
    transfer, cov = _noisy_moments(model, gains)
    var = (cov[0, 0], cov[1, 1])
    for yi, wy in zip(amp, w):
        for qi, wq in zip(amp, w):
            inp = CoherentInput(yi, qi)
            total += wy * wq * fidelity_coherent(transfer @ inp.amplitude, var, inp)
    return total / math.pi


def _grid_average(model: _NoisyModel, gx, gq, n_bar):
    """Vectorized closed-form average fidelity over arrays of gains."""
    (Kx, Kp) = model.quad_forms()
    ones = np.ones_like(gx)
    v = np.stack([ones, gx, gq])
    var_x = np.einsum("i...,ij,j...->...", v, Kx, v) / 2
    var_p = np.einsum("i...,ij,j...->...", v, Kp, v) / 2
    a, b = 1 + 2 * var_x, 1 + 2 * var_p
    my = (model.base + gx[..., None, None] * model.gx_rows + gq[..., None, None] * model.gq_rows)
    t_y = my @ model.mean_y
    t_q = my @ model.mean_q
    d11, d21 = 1 - t_y[..., 0], -t_y[..., 1]
    d12, d22 = -t_q[..., 0], 1 - t_q[..., 1]
    q11 = d11**2 / a + d21**2 / b
    q22 = d12**2 / a + d22**2 / b
    q12 = d11 * d12 / a + d21 * d22 / b
    det = (1 + 2 * n_bar * q11) * (1 + 2 * n_bar * q22) - (2 * n_bar * q12) ** 2
    return 2 / np.sqrt(a * b) / np.sqrt(det)


def optimize_gains(
    kappa: float, noise: NoiseParams, n_bar: float, second_stage: bool = True
) -> tuple[Gains, float]:
    """Gains maximizing the average fidelity, and that maximum.

    A 41 x 41 grid on ``[0, 2]^2`` picks the start point for a Nelder-Mead
    refinement; both stages are deterministic.
    """
    model = _noisy_model(kappa, noise, second_stage)
    g = np.linspace(0.0, 2.0, 41)
    GX, GQ = np.meshgrid(g, g, indexing="ij")
    F = _grid_average(model, GX, GQ, n_bar)
    i, j = np.unravel_index(np.argmax(F), F.shape)

    def neg(v):
        return -float(_grid_average(model, np.asarray(v[0]), np.asarray(v[1]), n_bar))

    res = optimize.minimize(
        neg, [g[i], g[j]], method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000},
    )
    best = Gains(float(res.x[0]), float(res.x[1]))
    return best, -float(res.fun)


def classical_benchmark(n_bar: float) -> float:
    """Best measure-and-prepare average fidelity for Gaussian-distributed coherent inputs."""
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    return (1 + n_bar) / (1 + 2 * n_bar)


def tms_entropy(r: float) -> float:
    """Entanglement entropy (bits) of a two-mode squeezed vacuum with squeezing ``r``."""
    c2, s2 = math.cosh(r) ** 2, math.sinh(r) ** 2
    return c2 * math.log2(c2) - (s2 * math.log2(s2) if s2 > 0 else 0.0)


def tms_benchmark_fidelity(entropy_bits: float) -> float:
    """Teleportation fidelity of a two-mode squeezed resource with the given entropy."""
    if entropy_bits < 0:
        raise ValueError("entropy must be >= 0")
    if entropy_bits == 0:
        return 0.5
    hi = 1.0
    while tms_entropy(hi) < entropy_bits:
        hi *= 2
        if hi > 350:
            return 1.0
    r = optimize.bisect(lambda x: tms_entropy(x) - entropy_bits, 0.0, hi, xtol=1e-10)
    return 1 / (1 + math.exp(-2 * r))


def atomic_entropy(kappa: float) -> float:
    """Entropy of the reduced atomic state after the interaction."""
    out = apply_map(vacuum_state(CANONICAL_LAYOUT), interaction_map(kappa))
    return entropy_vn(reduce(out, ["A"]))


@dataclass(frozen=True)
class MonteCarloResult:
    mean: np.ndarray
    cov: np.ndarray
    n_samples: int

    @property
    def mean_stderr(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov) / self.n_samples)

    @property
    def var_stderr(self) -> np.ndarray:
        return np.diag(self.cov) * math.sqrt(2 / (self.n_samples - 1))


def monte_carlo_feedback(
    kappa: float,
    inp: CoherentInput,
    n_samples: int,
    seed: int | np.random.Generator,
    gains: Gains = UNIT_GAINS,
) -> MonteCarloResult:
    """Shot-by-shot Bell measurement, conditioning and displacement.

    Each shot draws Bell outcomes from their marginal law, samples the atoms
    from the conditional state, then applies the outcome-dependent kick.
    """
    if n_samples < 1000:
        raise ValueError("use at least 1000 samples")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    state = protocol_state(kappa, inp)
    _, spec = bell_measure_map()
    t = conditioning_terms(state, spec)
    # physical covariances are half the vacuum=I ones
    r = rng.multivariate_normal(t.meas_mean, t.meas_cov / 2, size=n_samples, method="cholesky")
    prior = state.mean[t.kept_idx]
    cond_mean = prior + (r - t.meas_mean) @ t.gain.T
    atoms = cond_mean + rng.multivariate_normal(np.zeros(2), t.cond_cov / 2, size=n_samples, method="cholesky")
    final = atoms + r @ gains.matrix().T
    return MonteCarloResult(final.mean(axis=0), np.cov(final, rowvar=False), n_samples)
