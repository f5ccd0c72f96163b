"""Gauge-continuous instantaneous eigenframes over a time grid.

``build_frame`` diagonalizes h(tau) on every grid sample, tracks levels by
maximum overlap, fixes each eigenvector's phase by discrete parallel
transport (successive overlaps real and positive, anchored at tau = 0), and
assembles the non-adiabatic coupling matrix gamma_nm = i<phi_n|phi_m_dot>.

gamma comes from one of three routes, recorded in ``gamma_mode``:

* ``analytic_frame``      - the model supplies energies, vectors and gamma in
  closed form (its own smooth gauge);
* ``analytic_derivative`` - off-diagonals from i<phi_n|dh|phi_m>/(e_m - e_n),
  diagonals from finite differences of the gauge-fixed vectors;
* ``finite_difference``   - 4th-order differences of the vectors throughout.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import numerics
from .errors import (
    GapClosureError,
    OutOfRangeError,
    TrackingAmbiguityError,
    UndefinedArgError,
)
from .linalg import dagger, eigh_batch
from .models import HamiltonianModel, SmoothScalar

log = logging.getLogger(__name__)

#: couplings below this magnitude have no well-defined phase
COUPLING_FLOOR = 1e-12

DEFAULT_GRID_SAMPLES = 4096
DEFAULT_GAP_FLOOR = 1e-8


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing tau samples (uniform unless stated otherwise)."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("grid needs at least two samples")
        if np.any(np.diff(samples) <= 0):
            raise ValueError("grid samples must be strictly increasing")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def uniform(cls, tau_start: float, tau_end: float, n: int) -> "TimeGrid":
        if n < 2:
            raise ValueError("need at least two samples")
        if not tau_end > tau_start:
            raise ValueError("tau_end must exceed tau_start")
        return cls(np.linspace(tau_start, tau_end, n))

    @property
    def tau_start(self) -> float:
        return float(self.samples[0])

    @property
    def tau_end(self) -> float:
        return float(self.samples[-1])

    @property
    def n(self) -> int:
        return int(self.samples.size)

    @property
    def step(self) -> float:
        """Leading step; equals every step for uniform grids."""
        return float(self.samples[1] - self.samples[0])

    @property
    def is_uniform(self) -> bool:
        steps = np.diff(self.samples)
        return bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))


@dataclass(frozen=True, eq=False)
class SpectralFrame:
    """Tracked eigenvalues, gauge-fixed eigenvectors and gamma on a grid.

    ``energies[k, n]`` follows level n by continuity (not re-sorted);
    ``vectors[k, :, n]`` is its eigenvector; ``gamma[k, n, m]`` is
    i<phi_n|phi_m_dot> at sample k.  ``delta_analytic``, when the model
    provides it, holds the closed-form QGP matrix on the same ordering.
    """

    grid: TimeGrid
    energies: np.ndarray
    vectors: np.ndarray
    gamma: np.ndarray
    min_gap: float
    gamma_mode: str
    model: HamiltonianModel | None = None
    delta_analytic: np.ndarray | None = None
    min_overlap: float = 1.0

    @property
    def dim(self) -> int:
        return self.energies.shape[1]

    @property
    def n_samples(self) -> int:
        return self.energies.shape[0]

    def completeness_defect(self) -> float:
        """Max deviation of sum_n |phi_n><phi_n| from the identity."""
        gram = np.einsum("kin,kjn->kij", self.vectors, self.vectors.conj())
        eye = np.eye(self.dim)
        return float(np.max(np.abs(gram - eye)))


def _resolve_gamma_mode(model: HamiltonianModel, gamma_mode: str) -> str:
    if gamma_mode == "auto":
        if model.analytic_frame is not None:
            return "analytic_frame"
        if model.derivative is not None:
            return "analytic_derivative"
        return "finite_difference"
    if gamma_mode not in ("analytic_frame", "analytic_derivative", "finite_difference"):
        raise ValueError(f"unknown gamma_mode {gamma_mode!r}")
    if gamma_mode == "analytic_frame" and model.analytic_frame is None:
        raise ValueError(f"model {model.label!r} has no analytic frame")
    if gamma_mode == "analytic_derivative" and model.derivative is None:
        raise ValueError(f"model {model.label!r} has no analytic derivative")
    return gamma_mode


def _pairwise_min_gap(energies: np.ndarray) -> float:
    sorted_e = np.sort(energies, axis=1)
    return float(np.min(np.diff(sorted_e, axis=1)))


def build_frame(
    model: HamiltonianModel,
    grid: TimeGrid,
    gap_floor: float = DEFAULT_GAP_FLOOR,
    gamma_mode: str = "auto",
) -> SpectralFrame:
    """Construct the gauge-continuous eigenframe of ``model`` on ``grid``."""
    mode = _resolve_gamma_mode(model, gamma_mode)
    taus = grid.samples

    if mode == "analytic_frame":
        energies, vectors, gamma = model.analytic_frame.frame_at(taus)
        delta = (
            model.analytic_frame.delta_at(taus)
            if model.analytic_frame.delta_at is not None
            else None
        )
        min_gap = _pairwise_min_gap(energies)
        if min_gap < gap_floor:
            raise GapClosureError(
                f"min gap {min_gap:.3e} below floor {gap_floor:.3e}"
            )
        return SpectralFrame(
            grid=grid,
            energies=energies,
            vectors=vectors,
            gamma=gamma,
            min_gap=min_gap,
            gamma_mode=mode,
            model=model,
            delta_analytic=delta,
        )

    hs = model.sample(taus)
    energies, vectors = eigh_batch(hs)
    energies = energies.copy()
    vectors = vectors.copy()
    dim = model.dim
    k_samples = taus.size

    min_overlap = 1.0
    for k in range(1, k_samples):
        overlap = vectors[k - 1].conj().T @ vectors[k]
        weight = np.abs(overlap)
        rows, cols = linear_sum_assignment(-weight)
        perm = np.empty(dim, dtype=int)
        perm[rows] = cols
        matched = weight[rows, perm[rows]]
        if np.min(matched) < 0.5:
            raise TrackingAmbiguityError(
                f"maximum overlap {np.min(matched):.3f} < 0.5 between samples "
                f"{k - 1} and {k}; grid too coarse"
            )
        vectors[k] = vectors[k][:, perm]
        energies[k] = energies[k][perm]
        # parallel transport: make successive overlaps real and positive
        diag = overlap[np.arange(dim), perm]
        vectors[k] *= np.exp(-1j * np.angle(diag))[None, :]
        min_overlap = min(min_overlap, float(np.min(np.abs(diag))))

    if min_overlap < 0.99:
        warnings.warn(
            f"level-tracking overlap dropped to {min_overlap:.4f} (< 0.99); "
            "consider a finer grid",
            RuntimeWarning,
            stacklevel=2,
        )

    min_gap = _pairwise_min_gap(energies)
    if min_gap < gap_floor:
        raise GapClosureError(f"min gap {min_gap:.3e} below floor {gap_floor:.3e}")

    if mode == "analytic_derivative":
        hdots = model.sample_derivative(taus)
        cross = np.einsum("kin,kij,kjm->knm", vectors.conj(), hdots, vectors)
        denom = energies[:, None, :] - energies[:, :, None]  # e_m - e_n at [k, n, m]
        with np.errstate(divide="ignore", invalid="ignore"):
            gamma = 1j * cross / denom
        dvec = numerics.derivative_series(vectors, taus)
        diag = 1j * np.einsum("kin,kin->kn", vectors.conj(), dvec)
        idx = np.arange(dim)
        gamma[:, idx, idx] = diag
    else:
        dvec = numerics.derivative_series(vectors, taus)
        gamma = 1j * np.einsum("kin,kim->knm", vectors.conj(), dvec)

    return SpectralFrame(
        grid=grid,
        energies=energies,
        vectors=vectors,
        gamma=gamma,
        min_gap=min_gap,
        gamma_mode=mode,
        model=model,
        min_overlap=min_overlap,
    )


def build_frame_refined(
    model: HamiltonianModel,
    tau_start: float,
    tau_end: float,
    base_samples: int = DEFAULT_GRID_SAMPLES,
    refine_tol: float = 1e-6,
    max_doublings: int = 5,
    gap_floor: float = DEFAULT_GAP_FLOOR,
    gamma_mode: str = "auto",
) -> SpectralFrame:
    """Build on a uniform grid, doubling density until |gamma| stabilizes.

    Grids are chosen so every refinement contains the previous samples, and
    convergence is judged on max change of |gamma| at the shared samples.
    """
    n = base_samples
    frame = build_frame(model, TimeGrid.uniform(tau_start, tau_end, n), gap_floor, gamma_mode)
    for _ in range(max_doublings):
        finer = build_frame(
            model, TimeGrid.uniform(tau_start, tau_end, 2 * n - 1), gap_floor, gamma_mode
        )
        shared = np.abs(finer.gamma[::2]) - np.abs(frame.gamma)
        if float(np.max(np.abs(shared))) < refine_tol:
            return finer
        frame, n = finer, 2 * n - 1
    log.warning("|gamma| refinement did not settle below %g", refine_tol)
    return frame


def gamma_at(frame: SpectralFrame, n: int, m: int, tau) -> complex | np.ndarray:
    """gamma_nm at tau by linear interpolation (exact at grid points)."""
    _require_levels(frame, n, m)
    _require_in_range(frame, tau)
    series = frame.gamma[:, n, m]
    out = numerics.interp_complex(tau, frame.grid.samples, series)
    return complex(out) if np.ndim(tau) == 0 else out


def theta_series(frame: SpectralFrame, m: int, n: int) -> tuple[np.ndarray, int]:
    """theta_mn on every grid sample, with the count of large unwrap steps.

    theta_mn(tau) = int_0^tau (e_m - e_n + gamma_nn - gamma_mm) dlambda
                    + arg gamma_mn(tau), unwrapped continuously from tau=0.
    """
    _require_levels(frame, m, n)
    if m == n:
        raise ValueError("theta_mn needs m != n")
    coupling = frame.gamma[:, m, n]
    if np.min(np.abs(coupling)) < COUPLING_FLOOR:
        raise UndefinedArgError(
            f"|gamma_{m}{n}| fell below {COUPLING_FLOOR:g}; arg undefined"
        )
    taus = frame.grid.samples
    integrand = (
        frame.energies[:, m]
        - frame.energies[:, n]
        + frame.gamma[:, n, n].real
        - frame.gamma[:, m, m].real
    )
    integral = numerics.cumulative_integral(integrand, taus)
    arg, large = numerics.unwrap_angles(np.angle(coupling))
    if large:
        log.warning(
            "theta_%d%d: %d unwrap steps exceeded pi/2; grid may be coarse",
            m, n, large,
        )
    return integral + arg, large


def theta_mn(frame: SpectralFrame, m: int, n: int, tau) -> float | np.ndarray:
    """theta_mn at tau (linear interpolation between grid samples)."""
    _require_in_range(frame, tau)
    series, _ = theta_series(frame, m, n)
    out = np.interp(tau, frame.grid.samples, series)
    return float(out) if np.ndim(tau) == 0 else out


@dataclass(frozen=True, eq=False)
class AdiabaticTrajectory:
    """U(1)-invariant adiabatic orbit of one level.

    states[k] = exp(-i * phases[k]) * phi_m(tau_k) with
    phases[k] = int_0^tau_k (e_m - gamma_mm) dlambda; phases[0] = 0.
    """

    frame: SpectralFrame
    level: int
    phases: np.ndarray
    states: np.ndarray

    @property
    def grid(self) -> TimeGrid:
        return self.frame.grid


def adiabatic_trajectory(frame: SpectralFrame, m: int) -> AdiabaticTrajectory:
    _require_levels(frame, m, m)
    taus = frame.grid.samples
    integrand = frame.energies[:, m] - frame.gamma[:, m, m].real
    phases = numerics.cumulative_integral(integrand, taus)
    states = np.exp(-1j * phases)[:, None] * frame.vectors[:, :, m]
    return AdiabaticTrajectory(frame=frame, level=m, phases=phases, states=states)


def regauge(frame: SpectralFrame, fs: list[SmoothScalar]) -> SpectralFrame:
    """Apply phi_n -> e^{i f_n(tau)} phi_n with f_n(tau_0) = 0.

    gamma transforms consistently: gamma_nm -> e^{i(f_m - f_n)} gamma_nm for
    n != m and gamma_nn -> gamma_nn - f_n'.  Gauge-invariant data
    (delta_analytic) is carried over unchanged.
    """
    if len(fs) != frame.dim:
        raise ValueError(f"need {frame.dim} gauge functions, got {len(fs)}")
    taus = frame.grid.samples
    f_vals = np.stack([f.value(taus) for f in fs], axis=1)
    f_dots = np.stack([f.d1(taus) for f in fs], axis=1)
    if np.max(np.abs(f_vals[0])) > 1e-12:
        raise ValueError("gauge functions must vanish at the first grid sample")
    phase = np.exp(1j * f_vals)
    vectors = frame.vectors * phase[:, None, :]
    gamma = frame.gamma * np.exp(1j * (f_vals[:, None, :] - f_vals[:, :, None]))
    idx = np.arange(frame.dim)
    gamma[:, idx, idx] = frame.gamma[:, idx, idx] - f_dots
    return replace(frame, vectors=vectors, gamma=gamma, gamma_mode=frame.gamma_mode + "+regauge")


def _require_levels(frame: SpectralFrame, *levels: int) -> None:
    for lvl in levels:
        if not 0 <= lvl < frame.dim:
            raise OutOfRangeError(f"level {lvl} outside 0..{frame.dim - 1}")


def _require_in_range(frame: SpectralFrame, tau) -> None:
    lo, hi = frame.grid.tau_start, frame.grid.tau_end
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < lo - 1e-12) or np.any(tau > hi + 1e-12):
        raise OutOfRangeError(f"tau outside grid range [{lo}, {hi}]")
