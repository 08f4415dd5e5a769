"""Gaussian states over labeled quadratures.

Covariances follow the convention ``cov_ij = <R_i R_j + R_j R_i> - 2 <R_i><R_j>``,
so the vacuum has ``cov = I`` and a physical variance is ``cov_ii / 2``.
Quadratures are ordered mode by mode as adjacent ``(x, p)`` pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SYMPLECTIC_TOL = 1e-10
PSD_TOL = 1e-9
PINV_RCOND = 1e-12
NU_TOL = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for ``n_modes`` modes in (x, p) ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class QuadratureLayout:
    """Ordered mode names; quadrature labels are derived as ``x_<mode>``, ``p_<mode>``."""

    modes: tuple[str, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValueError("layout needs at least one mode")
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate mode names in {modes}")
        object.__setattr__(self, "modes", modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dim(self) -> int:
        return 2 * len(self.modes)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"{q}_{m}" for m in self.modes for q in ("x", "p"))

    def index(self, label: str) -> int:
        kind, _, mode = label.partition("_")
        if kind not in ("x", "p") or mode not in self.modes:
            raise KeyError(f"unknown quadrature label {label!r}")
        return 2 * self.modes.index(mode) + (kind == "p")

    def mode_indices(self, modes: Iterable[str]) -> list[int]:
        idx = []
        for m in modes:
            if m not in self.modes:
                raise KeyError(f"unknown mode {m!r}")
            k = self.modes.index(m)
            idx += [2 * k, 2 * k + 1]
        return idx

    def sub(self, modes: Iterable[str]) -> "QuadratureLayout":
        return QuadratureLayout(tuple(modes))

    def __add__(self, other: "QuadratureLayout") -> "QuadratureLayout":
        return QuadratureLayout(self.modes + other.modes)


#: Atoms followed by the cosine, sine and first back-action light modes.
CANONICAL_LAYOUT = QuadratureLayout(("A", "c", "s", "c1", "s1"))


@dataclass(frozen=True)
class GaussianState:
    layout: QuadratureLayout
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        d = self.layout.dim
        if mean.shape != (d,) or cov.shape != (d, d):
            raise ValueError(
                f"layout has {d} quadratures, got mean {mean.shape} and cov {cov.shape}"
            )
        if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ValueError("covariance matrix is not symmetric")
        mean.setflags(write=False)
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def is_physical(self, tol: float = PSD_TOL) -> bool:
        """Check ``cov + i Omega >= 0`` up to a relative tolerance."""
        herm = self.cov + 1j * symplectic_form(self.layout.n_modes)
        ev = np.linalg.eigvalsh(herm)
        return ev.min() >= -tol * max(1.0, np.abs(ev).max())


@dataclass(frozen=True)
class LinearMap:
    """Affine Gaussian channel ``r -> S r + d`` with additive noise ``N`` on the covariance."""

    S: np.ndarray
    noise: np.ndarray | None = None
    displacement: np.ndarray | None = None

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise ValueError(f"S must be square with even size, got {S.shape}")
        d = S.shape[0]
        noise = np.zeros((d, d)) if self.noise is None else np.asarray(self.noise, dtype=float)
        disp = np.zeros(d) if self.displacement is None else np.asarray(self.displacement, dtype=float)
        if noise.shape != (d, d) or disp.shape != (d,):
            raise ValueError("noise/displacement shape does not match S")
        if not np.allclose(noise, noise.T):
            raise ValueError("noise matrix must be symmetric")
        if np.linalg.eigvalsh(noise).min() < -PSD_TOL * max(1.0, np.abs(noise).max()):
            raise ValueError("noise matrix must be positive semidefinite")
        if not np.any(noise) and symplectic_defect(S) > SYMPLECTIC_TOL:
            raise ValueError("noiseless map must be symplectic")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "displacement", disp)

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        """Composition: ``(self @ other)`` applies ``other`` first."""
        return LinearMap(
            self.S @ other.S,
            self.S @ other.noise @ self.S.T + self.noise,
            self.S @ other.displacement + self.displacement,
        )

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(np.eye(dim))

    def direct_sum(self, other: "LinearMap") -> "LinearMap":
        def blk(a, b):
            out = np.zeros((a.shape[0] + b.shape[0],) * 2)
            out[: a.shape[0], : a.shape[0]] = a
            out[a.shape[0]:, a.shape[0]:] = b
            return out

        return LinearMap(
            blk(self.S, other.S),
            blk(self.noise, other.noise),
            np.concatenate([self.displacement, other.displacement]),
        )


def symplectic_defect(S: np.ndarray) -> float:
    """Max-norm of ``S Omega S^T - Omega``."""
    S = np.asarray(S)
    om = symplectic_form(S.shape[0] // 2)
    return float(np.abs(S @ om @ S.T - om).max())


@dataclass(frozen=True)
class HomodyneSpec:
    """Which quadratures are homodyned and which modes are discarded unobserved.

    Modes that appear in ``measured`` are consumed by the measurement, so their
    unmeasured quadrature is discarded too. Everything else is kept.
    """

    measured: tuple[str, ...]
    traced: tuple[str, ...] = ()

    def __post_init__(self):
        measured = tuple(self.measured)
        traced = tuple(self.traced)
        modes = [lab.partition("_")[2] for lab in measured]
        if len(set(modes)) != len(modes):
            raise ValueError(
                f"measured set {measured} contains both quadratures of one mode; "
                "observables do not commute"
            )
        if set(modes) & set(traced):
            raise ValueError("a mode cannot be both measured and traced")
        object.__setattr__(self, "measured", measured)
        object.__setattr__(self, "traced", traced)

    @property
    def measured_modes(self) -> tuple[str, ...]:
        return tuple(lab.partition("_")[2] for lab in self.measured)

    def kept_modes(self, layout: QuadratureLayout) -> tuple[str, ...]:
        for lab in self.measured:
            layout.index(lab)
        for m in self.traced:
            if m not in layout.modes:
                raise KeyError(f"unknown mode {m!r}")
        gone = set(self.measured_modes) | set(self.traced)
        return tuple(m for m in layout.modes if m not in gone)


def vacuum_state(layout: QuadratureLayout) -> GaussianState:
    return GaussianState(layout, np.zeros(layout.dim), np.eye(layout.dim))


def apply_map(state: GaussianState, lmap: LinearMap) -> GaussianState:
    if lmap.dim != state.layout.dim:
        raise ValueError(f"map acts on {lmap.dim} quadratures, state has {state.layout.dim}")
    return GaussianState(
        state.layout,
        lmap.S @ state.mean + lmap.displacement,
        lmap.S @ state.cov @ lmap.S.T + lmap.noise,
    )


def displace(state: GaussianState, deltas: Sequence[float]) -> GaussianState:
    deltas = np.asarray(deltas, dtype=float)
    if deltas.shape != (state.layout.dim,):
        raise ValueError(f"expected {state.layout.dim} displacements, got {deltas.shape}")
    return GaussianState(state.layout, state.mean + deltas, state.cov)


def reduce(state: GaussianState, kept_modes: Iterable[str]) -> GaussianState:
    """Partial trace: keep the listed modes, in the order given."""
    kept_modes = tuple(kept_modes)
    idx = state.layout.mode_indices(kept_modes)
    return GaussianState(
        state.layout.sub(kept_modes), state.mean[idx], state.cov[np.ix_(idx, idx)]
    )


def _check_psd(mat: np.ndarray, what: str) -> None:
    ev = np.linalg.eigvalsh(mat)
    if ev.size and ev.min() < -PSD_TOL * max(1.0, np.abs(ev).max()):
        raise ValueError(f"{what} is not positive semidefinite (min eigenvalue {ev.min():.3g})")


@dataclass(frozen=True)
class ConditioningTerms:
    """Blocks of a homodyne update, all in the ``vacuum = I`` convention.

    ``cond_cov`` is the post-measurement covariance of the kept modes and
    ``gain`` the regression matrix mapping measured-quadrature deviations onto
    kept-mode mean shifts.
    """

    kept: tuple[str, ...]
    kept_idx: list[int]
    meas_idx: list[int]
    cond_cov: np.ndarray
    gain: np.ndarray
    meas_mean: np.ndarray
    meas_cov: np.ndarray
    cross_cov: np.ndarray = field(repr=False)


def conditioning_terms(state: GaussianState, spec: HomodyneSpec) -> ConditioningTerms:
    lay = state.layout
    kept = spec.kept_modes(lay)
    kept_idx = lay.mode_indices(kept)
    meas_idx = [lay.index(lab) for lab in spec.measured]
    A = state.cov[np.ix_(kept_idx, kept_idx)]
    B = state.cov[np.ix_(meas_idx, meas_idx)]
    C = state.cov[np.ix_(kept_idx, meas_idx)]
    _check_psd(B, "measured-quadrature covariance")
    if B.size:
        gain = C @ np.linalg.pinv(B, rcond=PINV_RCOND, hermitian=True)
    else:
        gain = np.zeros((len(kept_idx), 0))
    cond = A - gain @ C.T
    cond = 0.5 * (cond + cond.T)
    _check_psd(cond, "conditional covariance")
    return ConditioningTerms(
        kept, kept_idx, meas_idx, cond, gain, state.mean[meas_idx], B, C
    )


def homodyne_condition(
    state: GaussianState,
    spec: HomodyneSpec,
    outcomes: Sequence[float] | None = None,
    trace_var: float | None = None,
) -> GaussianState:
    """State of the kept modes after homodyning ``spec.measured``.

    Without ``outcomes`` the mean is left at its prior value (the covariance
    does not depend on the results). ``trace_var`` replaces the plain partial
    trace of ``spec.traced`` by a projection onto a thermal state of that
    variance, which is the finite-``n`` version of the limit taken when the
    unobserved modes are projected onto the identity.
    """
    t = conditioning_terms(state, spec)
    mean = state.mean[t.kept_idx].copy()
    if outcomes is not None:
        r = np.asarray(outcomes, dtype=float)
        if r.shape != (len(spec.measured),):
            raise ValueError(f"expected {len(spec.measured)} outcomes, got {r.shape}")
        mean = mean + t.gain @ (r - t.meas_mean)
    out = GaussianState(state.layout.sub(t.kept), mean, t.cond_cov)
    if trace_var is None or not spec.traced:
        return out

    # condition the kept + traced block first, then let the traced modes see noise trace_var
    joint_spec = HomodyneSpec(spec.measured)
    joint = homodyne_condition(state, joint_spec, outcomes)
    tr_idx = joint.layout.mode_indices(spec.traced)
    k_idx = joint.layout.mode_indices(t.kept)
    A = joint.cov[np.ix_(k_idx, k_idx)]
    B = joint.cov[np.ix_(tr_idx, tr_idx)] + trace_var * np.eye(len(tr_idx))
    C = joint.cov[np.ix_(k_idx, tr_idx)]
    return GaussianState(out.layout, joint.mean[k_idx], A - C @ np.linalg.solve(B, C.T))


def gamma_limit_condition(
    state: GaussianState, spec: HomodyneSpec, squeeze: float, trace_var: float
) -> GaussianState:
    """Literal ``A - C (Gamma + B)^-1 C^T`` at finite ``squeeze`` and ``trace_var``.

    ``Gamma`` is ``diag(1/x, x)`` on a mode whose x quadrature is measured,
    ``diag(x, 1/x)`` when p is measured, and ``n * I`` on traced modes.
    Cross-check for :func:`homodyne_condition`; it converges as ``x, n -> inf``.
    """
    lay = state.layout
    kept = spec.kept_modes(lay)
    gone = [m for m in lay.modes if m not in kept]
    kept_idx = lay.mode_indices(kept)
    gone_idx = lay.mode_indices(gone)
    diag = []
    meas = dict(zip(spec.measured_modes, spec.measured))
    for m in gone:
        if m in meas:
            diag += [1 / squeeze, squeeze] if meas[m].startswith("x_") else [squeeze, 1 / squeeze]
        else:
            diag += [trace_var, trace_var]
    A = state.cov[np.ix_(kept_idx, kept_idx)]
    B = state.cov[np.ix_(gone_idx, gone_idx)]
    C = state.cov[np.ix_(kept_idx, gone_idx)]
    cond = A - C @ np.linalg.solve(np.diag(diag) + B, C.T)
    return GaussianState(lay.sub(kept), state.mean[kept_idx], cond)


def symplectic_eigenvalues(state_or_cov) -> np.ndarray:
    """Sorted symplectic spectrum (one value per mode) of a covariance matrix."""
    cov = state_or_cov.cov if isinstance(state_or_cov, GaussianState) else np.asarray(state_or_cov)
    _check_psd(cov, "covariance")
    n = cov.shape[0] // 2
    # i Omega cov is similar to the Hermitian cov^1/2 (i Omega) cov^1/2
    w, v = np.linalg.eigh(cov)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    ev = np.linalg.eigvalsh(root @ (1j * symplectic_form(n)) @ root)
    nu = np.sort(np.abs(ev))
    pairs = nu.reshape(n, 2)
    if np.any(np.abs(pairs[:, 0] - pairs[:, 1]) > NU_TOL * max(1.0, nu.max())):
        raise ValueError("symplectic spectrum is not paired; covariance is likely invalid")
    return pairs.mean(axis=1)


def _g(nu: float) -> float:
    if nu - 1 <= NU_TOL:
        return 0.0
    a, b = (nu + 1) / 2, (nu - 1) / 2
    return float(a * np.log2(a) - b * np.log2(b))


def entropy_vn(state_or_cov) -> float:
    """Von Neumann entropy in bits."""
    nus = symplectic_eigenvalues(state_or_cov)
    if nus.min() < 1 - NU_TOL:
        raise ValueError(f"symplectic eigenvalue {nus.min():.12g} < 1 violates uncertainty")
    return sum(_g(nu) for nu in nus)


def partial_transpose(state: GaussianState, partition: Iterable[str]) -> GaussianState:
    """Flip the sign of ``p`` for every mode in ``partition``."""
    partition = set(partition)
    flip = np.ones(state.layout.dim)
    for m in partition:
        flip[state.layout.index(f"p_{m}")] = -1.0
    return GaussianState(state.layout, flip * state.mean, flip[:, None] * state.cov * flip[None, :])


def ppt_inseparable(state: GaussianState, partition: Iterable[str]) -> tuple[bool, float]:
    """PPT test across ``partition | rest``; returns (inseparable, min PT symplectic eigenvalue)."""
    partition = set(partition)
    modes = set(state.layout.modes)
    if not partition or not partition < modes:
        raise ValueError(f"partition {sorted(partition)} must be a nonempty proper subset of {sorted(modes)}")
    nu_min = float(symplectic_eigenvalues(partial_transpose(state, partition)).min())
    return nu_min < 1 - NU_TOL, nu_min


def tensor(*states: GaussianState) -> GaussianState:
    """Product state; layouts are concatenated in argument order."""
    layout = states[0].layout
    for st in states[1:]:
        layout = layout + st.layout
    cov = np.zeros((layout.dim, layout.dim))
    i = 0
    for st in states:
        d = st.layout.dim
        cov[i:i + d, i:i + d] = st.cov
        i += d
    return GaussianState(layout, np.concatenate([st.mean for st in states]), cov)
