"""Spin squeezing and mean-spin readout by homodyning scattered light.

Measuring ``{x_s, p_c, p_c1}`` reads out ``X``: ``x_s`` carries the spin
signal, while ``p_c`` and ``p_c1`` (unchanged by the interaction) remove the
back-action terms it picked up. ``{x_c, p_s, p_s1}`` does the same for ``P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian_core import (
    CANONICAL_LAYOUT,
    HomodyneSpec,
    apply_map,
    homodyne_condition,
    vacuum_state,
)
from .scattering_model import QND_LAYOUT, interaction_map, qnd_map

#: Measured sets that squeeze and read out each spin quadrature.
READOUT_SETS = {"X": ("x_s", "p_c", "p_c1"), "P": ("x_c", "p_s", "p_s1")}
#: The opposite pairing; conditioning on it squeezes the other quadrature.
SWAPPED_SETS = {"X": READOUT_SETS["P"], "P": READOUT_SETS["X"]}

_LIGHT_MODES = tuple(m for m in CANONICAL_LAYOUT.modes if m != "A")


@dataclass(frozen=True)
class ReadoutSpec:
    target: str
    measured_set: tuple[str, ...] | None = None
    outcomes: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.target not in ("X", "P"):
            raise ValueError(f"target must be 'X' or 'P', got {self.target!r}")
        if self.measured_set is None:
            object.__setattr__(self, "measured_set", READOUT_SETS[self.target])
        ms = tuple(self.measured_set)
        object.__setattr__(self, "measured_set", ms)
        if len(ms) != 3:
            raise ValueError("measured_set must hold three quadrature labels")
        for lab in ms:
            CANONICAL_LAYOUT.index(lab)
            if lab.partition("_")[2] not in _LIGHT_MODES:
                raise ValueError(f"{lab!r} is not a light quadrature")
        if self.outcomes is not None:
            if len(self.outcomes) != 3:
                raise ValueError("outcomes must be a triple")
            object.__setattr__(self, "outcomes", tuple(float(v) for v in self.outcomes))
        # also rejects x and p of one mode
        self.homodyne_spec()

    def homodyne_spec(self) -> HomodyneSpec:
        measured_modes = {lab.partition("_")[2] for lab in self.measured_set}
        traced = tuple(m for m in _LIGHT_MODES if m not in measured_modes)
        return HomodyneSpec(self.measured_set, traced=traced)


@dataclass(frozen=True)
class ReadoutResult:
    """Atomic conditional variances in physical units (vacuum 1/2)."""

    conditional_var_X: float
    conditional_var_P: float
    estimated_mean: float | None = None

    @property
    def purity_product(self) -> float:
        return self.conditional_var_X * self.conditional_var_P


def _post_interaction(kappa: float, atom_mean=(0.0, 0.0)):
    state = vacuum_state(CANONICAL_LAYOUT)
    if any(atom_mean):
        mean = np.zeros(CANONICAL_LAYOUT.dim)
        mean[:2] = atom_mean
        state = type(state)(state.layout, mean, state.cov)
    return apply_map(state, interaction_map(kappa))


def readout_condition(kappa: float, spec: ReadoutSpec, trace_var: float | None = None) -> ReadoutResult:
    """Atomic state after homodyning ``spec.measured_set`` on the scattered light.

    Light modes with no measured quadrature are discarded. ``trace_var``
    instead conditions them on a dummy heterodyne-like record with that
    added variance; the result does not depend on it.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    state = _post_interaction(kappa)
    hspec = spec.homodyne_spec()
    cond = homodyne_condition(state, hspec, trace_var=trace_var)
    atoms = cond.cov[:2, :2] / 2
    est = None
    if spec.outcomes is not None:
        est = blue_estimate(kappa, spec.target, spec.measured_set, spec.outcomes)
    return ReadoutResult(float(atoms[0, 0]), float(atoms[1, 1]), est)


def squeezing_factor_closed_form(kappa: float, target: str = "squeezed") -> float:
    """``2/(2+kappa^2)`` for the squeezed quadrature, its inverse for the other."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    f = 2 / (2 + kappa**2)
    if target == "squeezed":
        return f
    if target == "anti":
        return 1 / f
    raise ValueError("target must be 'squeezed' or 'anti'")


def qnd_squeezing_factor(kappa: float) -> float:
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    return 1 / (1 + kappa**2)


def qnd_conditional_factor(kappa: float) -> float:
    """Same factor from homodyning ``x_L`` after the zero-field coupling."""
    state = apply_map(vacuum_state(QND_LAYOUT), qnd_map(kappa))
    cond = homodyne_condition(state, HomodyneSpec(("x_L",)))
    return float(cond.cov[1, 1])


def estimate_spin_mean(kappa: float, outcomes, target: str = "X") -> float:
    """Unbiased estimate of ``<X>`` (or ``<P>``) from the readout-set outcomes.

    Outcomes are ordered as in ``READOUT_SETS[target]``.
    """
    if not kappa > 0:
        raise ValueError("kappa must be > 0 to carry any spin signal")
    a, b, c = (float(v) for v in outcomes)
    h = (kappa / 2) ** 2
    scale = math.sqrt(2) / kappa
    if target == "X":
        return -scale * (a + h * b + h / math.sqrt(3) * c)
    if target == "P":
        return scale * (a - h * b - h / math.sqrt(3) * c)
    raise ValueError("target must be 'X' or 'P'")


def blue_weights(kappa: float, target: str, measured_set) -> np.ndarray:
    """Best linear unbiased estimator weights for the target from any measured set.

    With outcome means ``a <target>`` and outcome covariance ``Sigma``
    excluding the target's own spread, the weights are
    ``Sigma^-1 a / (a^T Sigma^-1 a)``.
    """
    if not kappa > 0:
        raise ValueError("kappa must be > 0 to carry any spin signal")
    lay = CANONICAL_LAYOUT
    S = interaction_map(kappa)
    rows = [lay.index(lab) for lab in measured_set]
    t = lay.index("x_A" if target == "X" else "p_A")
    M = S.S[rows]
    a = M[:, t].copy()
    M[:, t] = 0.0
    sigma = M @ M.T + S.noise[np.ix_(rows, rows)]
    if np.abs(a).max() < 1e-14:
        raise ValueError(f"measured set carries no signal on {target}")
    w = np.linalg.solve(sigma, a)
    return w / (a @ w)


def blue_estimate(kappa: float, target: str, measured_set, outcomes) -> float:
    return float(blue_weights(kappa, target, measured_set) @ np.asarray(outcomes, dtype=float))


def regression_gain(kappa: float, target: str = "X", measured_set=None) -> np.ndarray:
    """Posterior-mean coefficients of the pre-interaction target on the outcomes.

    Vacuum atoms as prior. These are the BLUE weights shrunk by the
    prior-to-posterior information ratio.
    """
    measured_set = READOUT_SETS[target] if measured_set is None else measured_set
    lay = CANONICAL_LAYOUT
    S = interaction_map(kappa)
    rows = [lay.index(lab) for lab in measured_set]
    t = lay.index("x_A" if target == "X" else "p_A")
    M = S.S[rows]
    cross = M[:, t]
    B = M @ M.T + S.noise[np.ix_(rows, rows)]
    return np.linalg.solve(B, cross)


def sample_readout(kappa: float, atom_mean, n_samples: int, seed, target: str = "X") -> np.ndarray:
    """Draw readout-set outcomes for atoms displaced to ``atom_mean``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    state = _post_interaction(kappa, atom_mean)
    idx = [state.layout.index(lab) for lab in READOUT_SETS[target]]
    mean = state.mean[idx]
    cov = state.cov[np.ix_(idx, idx)] / 2
    return rng.multivariate_normal(mean, cov, size=n_samples, method="cholesky")
