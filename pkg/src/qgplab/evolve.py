"""Exact dynamics, two independent ways.

* ``evolve_schrodinger`` integrates i dpsi/dtau = h(tau) psi with the
  exponential midpoint rule: every substep applies exp(-i h(t_mid) dt), so
  each step is exactly unitary and norm drift is a property of the
  implementation, not of the step size.  Accuracy is controlled by halving
  the substep width until successive refinements agree below ``tol``.
* ``evolve_coefficients`` integrates the adiabatic-coefficient equations
  c_m' = i sum_n c_n M_mn on a spectral frame, with M_mn = |gamma_mn|
  e^{i theta_mn} rebuilt between frame samples from linearly interpolated
  magnitude and phase; the generator -M is Hermitian, so the same unitary
  stepper applies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, StepUnderflowError, UndefinedArgError
from .frames import COUPLING_FLOOR, SpectralFrame, TimeGrid, adiabatic_trajectory, theta_series
from .linalg import expm_unitary, expm_unitary_batch, require_hermitian, require_state
from .models import HamiltonianModel

#: substeps processed per vectorized chunk (bounds peak memory)
_CHUNK_SUBSTEPS = 1 << 19

_MIN_STEP = 1e-12


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """States sampled on a grid, with unitarity bookkeeping."""

    grid: TimeGrid
    states: np.ndarray
    norms: np.ndarray
    method: str
    substeps_per_interval: int
    total_steps: int
    max_norm_drift: float
    refinements: int

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _compose_intervals(step_us: np.ndarray) -> np.ndarray:
    """Product over the substep axis (time order) of (n, s, N, N) unitaries."""
    u = step_us[:, 0]
    for j in range(1, step_us.shape[1]):
        u = step_us[:, j] @ u
    return u


def _interval_transfers(sample_h, taus: np.ndarray, substeps: int, dim: int) -> np.ndarray:
    """exp-midpoint transfer matrix of every grid interval at fixed substeps."""
    n_int = taus.size - 1
    transfers = np.empty((n_int, dim, dim), dtype=complex)
    block = max(1, _CHUNK_SUBSTEPS // substeps)
    offsets = (np.arange(substeps) + 0.5) / substeps
    for i0 in range(0, n_int, block):
        i1 = min(i0 + block, n_int)
        t0 = taus[i0:i1]
        widths = (taus[i0 + 1 : i1 + 1] - t0) / substeps
        mids = t0[:, None] + offsets[None, :] * (taus[i0 + 1 : i1 + 1] - t0)[:, None]
        hs = sample_h(mids.ravel()).reshape(i1 - i0, substeps, dim, dim)
        dts = np.broadcast_to(widths[:, None], (i1 - i0, substeps))
        transfers[i0:i1] = _compose_intervals(expm_unitary_batch(hs, dts))
    return transfers


def _propagate_fixed(sample_h, psi0: np.ndarray, taus: np.ndarray, substeps: int) -> np.ndarray:
    dim = psi0.size
    transfers = _interval_transfers(sample_h, taus, substeps, dim)
    states = np.empty((taus.size, dim), dtype=complex)
    states[0] = psi0
    psi = psi0
    for i in range(transfers.shape[0]):
        psi = transfers[i] @ psi
        states[i + 1] = psi
    return states


#: refinement aborts once a single pass would exceed this many substeps
_MAX_TOTAL_SUBSTEPS = 1 << 25


def _adaptive_states(
    sample_h, psi0: np.ndarray, grid: TimeGrid, tol: float, max_refinements: int
) -> tuple[np.ndarray, int, int]:
    """Halve substeps until successive refinements agree below tol."""
    taus = grid.samples
    substeps = 1
    states = _propagate_fixed(sample_h, psi0, taus, substeps)
    for level in range(1, max_refinements + 1):
        if np.max(np.diff(taus)) / (2 * substeps) < _MIN_STEP:
            raise StepUnderflowError(
                f"substep below {_MIN_STEP:g} before reaching tol {tol:g}"
            )
        if 2 * substeps * (taus.size - 1) > _MAX_TOTAL_SUBSTEPS:
            raise StepUnderflowError(
                f"refinement would exceed {_MAX_TOTAL_SUBSTEPS} substeps "
                f"before reaching tol {tol:g} (stiff input)"
            )
        finer = _propagate_fixed(sample_h, psi0, taus, 2 * substeps)
        diff = float(np.max(np.linalg.norm(finer - states, axis=1)))
        states, substeps = finer, 2 * substeps
        if diff <= max(tol, 5e-14):
            return states, substeps, level
    raise StepUnderflowError(
        f"no convergence below tol {tol:g} after {max_refinements} refinements"
    )


def _result(grid, states, method, substeps, refinements) -> EvolutionResult:
    norms = np.linalg.norm(states, axis=1)
    return EvolutionResult(
        grid=grid,
        states=states,
        norms=norms,
        method=method,
        substeps_per_interval=substeps,
        total_steps=substeps * (grid.n - 1),
        max_norm_drift=float(np.max(np.abs(norms - 1.0))),
        refinements=refinements,
    )


def evolve_schrodinger(
    model: HamiltonianModel,
    psi0: np.ndarray,
    grid: TimeGrid,
    tol: float = 1e-9,
    max_refinements: int = 24,
) -> EvolutionResult:
    """Integrate i dpsi/dtau = h(tau) psi from the first grid sample."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    psi0 = require_state(psi0)
    if psi0.size != model.dim:
        raise GridMismatchError(f"state dim {psi0.size} != model dim {model.dim}")
    states, substeps, refinements = _adaptive_states(
        model.sample, psi0, grid, tol, max_refinements
    )
    return _result(grid, states, "schrodinger", substeps, refinements)


def schrodinger_fixed_step(
    model: HamiltonianModel, psi0: np.ndarray, grid: TimeGrid, substeps: int
) -> np.ndarray:
    """Fixed-substep states (used by convergence-order tests)."""
    return _propagate_fixed(model.sample, require_state(psi0), grid.samples, substeps)


@dataclass(frozen=True, eq=False)
class CouplingMatrixM:
    """M(tau)_mn = |gamma_mn| e^{i theta_mn} with an exactly zero diagonal.

    Pairs whose coupling vanishes identically on the grid are stored as
    zero (no transition channel); a coupling that vanishes only somewhere
    raises UndefinedArg, because theta cannot be unwrapped through a zero.
    """

    grid: TimeGrid
    values: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def coupling_matrix(frame: SpectralFrame) -> CouplingMatrixM:
    dim = frame.dim
    k = frame.n_samples
    values = np.zeros((k, dim, dim), dtype=complex)
    for m in range(dim):
        for n in range(m + 1, dim):
            coupling = np.abs(frame.gamma[:, m, n])
            if np.max(coupling) < COUPLING_FLOOR:
                continue
            if np.min(coupling) < COUPLING_FLOOR:
                raise UndefinedArgError(
                    f"|gamma_{m}{n}| vanishes on part of the grid; M undefined"
                )
            theta, _ = theta_series(frame, m, n)
            values[:, m, n] = coupling * np.exp(1j * theta)
            values[:, n, m] = np.conjugate(values[:, m, n])
    return CouplingMatrixM(grid=frame.grid, values=values)


def evolve_coefficients(
    frame: SpectralFrame,
    c0: np.ndarray,
    tol: float = 1e-9,
    max_refinements: int = 24,
) -> EvolutionResult:
    """Integrate c' = i M(tau) c on the frame grid (generator -M, Hermitian).

    Between frame samples, |gamma_mn| and the unwrapped theta_mn are
    interpolated linearly and recombined, which is exact whenever the phase
    rate is constant and avoids the |theta_dot|^2 error of interpolating the
    complex M directly.
    """
    c0 = require_state(c0)
    if c0.size != frame.dim:
        raise GridMismatchError(f"coefficient dim {c0.size} != frame dim {frame.dim}")
    dim = frame.dim
    taus = frame.grid.samples
    coupling_matrix(frame)  # surface UndefinedArg before integrating
    pairs = []
    for m in range(dim):
        for n in range(m + 1, dim):
            magnitude = np.abs(frame.gamma[:, m, n])
            if np.max(magnitude) < COUPLING_FLOOR:
                continue
            theta, _ = theta_series(frame, m, n)
            pairs.append((m, n, magnitude, theta))

    def sample_generator(ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((ts.size, dim, dim), dtype=complex)
        for m, n, magnitude, theta in pairs:
            entry = np.interp(ts, taus, magnitude) * np.exp(
                1j * np.interp(ts, taus, theta)
            )
            out[:, m, n] = entry
            out[:, n, m] = np.conjugate(entry)
        return -out

    states, substeps, refinements = _adaptive_states(
        sample_generator, c0, frame.grid, tol, max_refinements
    )
    return _result(frame.grid, states, "coefficients", substeps, refinements)


def reconstruct_state(frame: SpectralFrame, coefficients: EvolutionResult) -> np.ndarray:
    """sum_n c_n(tau) |Phi_n^adia(tau)> on the frame grid; shape (K, N)."""
    if coefficients.grid is not frame.grid and not np.array_equal(
        coefficients.grid.samples, frame.grid.samples
    ):
        raise GridMismatchError("coefficient result lives on a different grid")
    out = np.zeros((frame.n_samples, frame.dim), dtype=complex)
    for n in range(frame.dim):
        traj = adiabatic_trajectory(frame, n)
        out += coefficients.states[:, n][:, None] * traj.states
    return out


def evolve_exact_constant(h: np.ndarray, psi0: np.ndarray, tau: float) -> np.ndarray:
    """exp(-i H tau) psi0 for a time-independent Hermitian generator."""
    h = require_hermitian(np.asarray(h, dtype=complex))
    psi0 = require_state(psi0)
    return expm_unitary(h, tau) @ psi0


def fidelity_series(states_a: np.ndarray, states_b: np.ndarray) -> np.ndarray:
    """|<a_k|b_k>| per sample for two (K, N) state stacks."""
    return np.abs(np.einsum("kn,kn->k", states_a.conj(), states_b))
