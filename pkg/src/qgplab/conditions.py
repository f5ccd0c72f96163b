"""Adiabaticity criteria and the constant-coefficient machinery.

Two pointwise criteria are evaluated on a spectral frame for a chosen
initial level m:

* traditional: max |gamma_nm| / |e_n - e_m| <= threshold (the gap alone);
* new:         max |gamma_km| / |e_n - e_m + Delta_mn| <= delta/sqrt(N-1),
  where Delta_mn is the quantum geometric potential.

For N > 2 the pairing of the numerator index k with the denominator pair
(m, n) is ambiguous; both the conservative reading (max over all k != m,
n != m combinations) and the strict one (k = n) are computed.

The constant-coefficient case is handled exactly through the self-adjoint
matrix Pi (omega_k on the diagonal, |gamma_kl| off it): its spectrum obeys
|eta_m - omega_m| <= sqrt(sum_k 2 |gamma_km|^2) and the surviving amplitude
is c_m(tau) = sum_k |U_mk|^2 e^{i eta_k tau}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qgp as qgp_mod
from .errors import (
    GapClosureError,
    InvalidParamsError,
    InvariantViolationError,
    MatchingAmbiguityError,
    NotAntisymmetricError,
    UndefinedArgError,
)
from .frames import SpectralFrame
from .linalg import eigh


# ---------------------------------------------------------------------------
# Frame-based criteria
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairConditionSeries:
    """Per-sample ingredients of both criteria for one (m, n) pair."""

    pair: tuple[int, int]
    gap: np.ndarray                 # e_n - e_m
    gamma_abs: np.ndarray           # |gamma_nm|
    delta: np.ndarray               # Delta_mn (NaN where undefined)
    traditional_ratio: np.ndarray
    new_ratio_strict: np.ndarray
    new_ratio_conservative: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True, eq=False)
class ConditionReport:
    """Criteria evaluation for one initial level of one model run."""

    model_label: str
    level: int
    delta_threshold: float
    traditional_threshold: float
    pairing: str
    pairs: list[PairConditionSeries]
    max_traditional: float
    tau_at_max_traditional: float
    max_new: float
    max_new_strict: float
    max_new_conservative: float
    tau_at_max_new: float
    traditional_pass: bool
    new_pass: bool

    @property
    def new_threshold(self) -> float:
        n = len(self.pairs) + 1
        return self.delta_threshold / math.sqrt(n - 1)

    @property
    def probability_floor(self) -> float:
        """(1 - delta)^2, the occupation the new condition guarantees."""
        return (1.0 - self.delta_threshold) ** 2


def condition_report(
    frame: SpectralFrame,
    m: int,
    delta_threshold: float = 0.1,
    traditional_threshold: float = 0.1,
    pairing: str = "conservative",
) -> ConditionReport:
    """Evaluate both criteria for initial level m over the whole grid."""
    if not 0.0 < delta_threshold < 1.0:
        raise InvalidParamsError("delta must lie in (0, 1)")
    if pairing not in ("conservative", "strict"):
        raise InvalidParamsError(f"unknown pairing {pairing!r}")
    if frame.min_gap <= 0:
        raise GapClosureError("frame has a closed gap")
    dim = frame.dim
    taus = frame.grid.samples
    others = [n for n in range(dim) if n != m]
    # conservative numerator: the largest coupling out of level m at each tau
    coupling_to_m = np.abs(frame.gamma[:, :, m])
    coupling_to_m[:, m] = 0.0
    max_coupling = np.max(coupling_to_m, axis=1)

    pairs = []
    for n in others:
        gap = frame.energies[:, n] - frame.energies[:, m]
        gamma_abs = np.abs(frame.gamma[:, n, m])
        if np.max(gamma_abs) < qgp_mod.COUPLING_FLOOR:
            # decoupled pair: no transition channel, ratios vanish; the QGP
            # denominator is only needed when some coupling survives
            if np.max(max_coupling) >= qgp_mod.COUPLING_FLOOR:
                raise UndefinedArgError(
                    f"Delta_{m}{n} undefined (gamma_{n}{m} vanishes) but other "
                    "couplings out of the level persist"
                )
            zeros = np.zeros_like(gap)
            pairs.append(
                PairConditionSeries(
                    pair=(m, n),
                    gap=gap,
                    gamma_abs=gamma_abs,
                    delta=np.full_like(gap, np.nan),
                    traditional_ratio=zeros,
                    new_ratio_strict=zeros,
                    new_ratio_conservative=zeros.copy(),
                    valid=np.zeros(gap.size, dtype=bool),
                )
            )
            continue
        series = qgp_mod.qgp(frame, m, n)
        with np.errstate(invalid="ignore", divide="ignore"):
            trad = gamma_abs / np.abs(gap)
            denom = np.abs(gap + series.delta)
            strict = gamma_abs / denom
            conservative = max_coupling / denom
        pairs.append(
            PairConditionSeries(
                pair=(m, n),
                gap=gap,
                gamma_abs=gamma_abs,
                delta=series.delta,
                traditional_ratio=trad,
                new_ratio_strict=strict,
                new_ratio_conservative=conservative,
                valid=series.valid,
            )
        )

    trad_stack = np.stack([p.traditional_ratio for p in pairs])
    i_pair, i_tau = np.unravel_index(np.argmax(trad_stack), trad_stack.shape)
    max_trad = float(trad_stack[i_pair, i_tau])
    tau_trad = float(taus[i_tau])

    def masked_max(stack: np.ndarray) -> tuple[float, float]:
        masked = np.where(np.isfinite(stack), stack, -np.inf)
        j_pair, j_tau = np.unravel_index(np.argmax(masked), masked.shape)
        return float(masked[j_pair, j_tau]), float(taus[j_tau])

    max_strict, tau_strict = masked_max(np.stack([p.new_ratio_strict for p in pairs]))
    max_cons, tau_cons = masked_max(np.stack([p.new_ratio_conservative for p in pairs]))
    max_new, tau_new = (max_cons, tau_cons) if pairing == "conservative" else (max_strict, tau_strict)

    new_threshold = delta_threshold / math.sqrt(dim - 1)
    return ConditionReport(
        model_label=frame.model.label if frame.model is not None else "",
        level=m,
        delta_threshold=delta_threshold,
        traditional_threshold=traditional_threshold,
        pairing=pairing,
        pairs=pairs,
        max_traditional=max_trad,
        tau_at_max_traditional=tau_trad,
        max_new=max_new,
        max_new_strict=max_strict,
        max_new_conservative=max_cons,
        tau_at_max_new=tau_new,
        traditional_pass=bool(max_trad <= traditional_threshold),
        new_pass=bool(max_new <= new_threshold),
    )


def traditional_condition(
    frame: SpectralFrame, m: int, threshold: float = 0.1
) -> tuple[float, float, bool]:
    """(max ratio, tau where attained, pass) for the gap-only criterion."""
    report = condition_report(frame, m, traditional_threshold=threshold)
    return report.max_traditional, report.tau_at_max_traditional, report.traditional_pass


def new_condition(
    frame: SpectralFrame, m: int, delta: float, pairing: str = "conservative"
) -> tuple[float, float, bool]:
    """(max ratio, threshold delta/sqrt(N-1), pass) for the QGP criterion."""
    report = condition_report(frame, m, delta_threshold=delta, pairing=pairing)
    return report.max_new, report.new_threshold, report.new_pass


# ---------------------------------------------------------------------------
# Rydberg-Ritz combination principle
# ---------------------------------------------------------------------------


def rrcp_check(theta_dots: np.ndarray, tol: float = 1e-8) -> tuple[bool, np.ndarray]:
    """Check theta_dot_nl + theta_dot_lm = theta_dot_nm for all triples.

    Holds iff theta_dot_mn = omega_m - omega_n for some vector omega; the
    recovered omega (gauge-fixed by omega_N = 0) is returned either way.
    """
    td = np.asarray(theta_dots, dtype=float)
    if td.ndim != 2 or td.shape[0] != td.shape[1]:
        raise ValueError("theta_dots must be a square matrix")
    if np.max(np.abs(td + td.T)) > tol:
        raise NotAntisymmetricError(
            f"theta_dot is not antisymmetric within {tol:g}"
        )
    omega = td[:, -1].copy()  # omega_m = theta_dot_m,N with omega_N = 0
    triple = td[:, :, None] + td[None, :, :] - td[:, None, :]
    ok = bool(np.max(np.abs(triple)) <= tol)
    return ok, omega


# ---------------------------------------------------------------------------
# Pi-matrix machinery (constant |gamma| and theta_dot)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiMatrix:
    """Self-adjoint Pi with omegas on the diagonal, |gamma_kl| off it."""

    omegas: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        couplings = np.asarray(self.couplings, dtype=float)
        n = omegas.size
        if couplings.shape != (n, n):
            raise InvalidParamsError("couplings shape must match omegas")
        if np.max(np.abs(couplings - couplings.T)) > 0:
            raise InvalidParamsError("couplings must be symmetric")
        if np.any(np.diag(couplings) != 0):
            raise InvalidParamsError("couplings must have zero diagonal")
        if np.any(couplings < 0):
            raise InvalidParamsError("couplings must be nonnegative (magnitudes)")
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "couplings", couplings)

    @property
    def dim(self) -> int:
        return self.omegas.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.omegas).astype(complex) + self.couplings

    def level_bounds(self) -> np.ndarray:
        """sqrt(sum_{k != m} 2 |gamma_km|^2) per level."""
        return np.sqrt(2.0 * np.sum(self.couplings**2, axis=0))

    def condition_ratio(self, m: int, pairing: str = "conservative") -> float:
        """Criterion ratio for constant couplings: |gamma_km| over the
        phase-rate gaps |omega_n - omega_m|."""
        others = [n for n in range(self.dim) if n != m]
        gaps = np.abs(self.omegas[others] - self.omegas[m])
        if np.min(gaps) == 0:
            return math.inf
        if pairing == "strict":
            return float(np.max(self.couplings[others, m] / gaps))
        return float(np.max(self.couplings[others, m]) / np.min(gaps))


@dataclass(frozen=True)
class PiBoundReport:
    """Eigenvalues of Pi matched to omegas, with the per-level bound."""

    etas: np.ndarray
    omegas: np.ndarray
    shifts: np.ndarray
    bounds: np.ndarray
    margins: np.ndarray


def pi_bound(pi: PiMatrix) -> PiBoundReport:
    """Verify |eta_m - omega_m| <= sqrt(sum 2|gamma_km|^2) per level.

    Levels are matched by sorting both spectra ascending.  If the safety
    intervals around the omegas overlap (coupling comparable to the omega
    spacing), the pairing is ill-defined and MatchingAmbiguity is raised
    carrying the margins of both candidate orderings.
    """
    etas = eigh(pi.matrix()).values
    order = np.argsort(pi.omegas, kind="stable")
    bounds = pi.level_bounds()
    radii = np.maximum(bounds, np.sum(pi.couplings, axis=0))
    sorted_omegas = pi.omegas[order]
    sorted_radii = radii[order]
    lo = sorted_omegas - sorted_radii
    hi = sorted_omegas + sorted_radii
    ambiguous = bool(np.any(hi[:-1] > lo[1:]))

    shifts = np.empty(pi.dim)
    shifts[order] = etas - sorted_omegas
    margins = bounds - np.abs(shifts)
    if ambiguous:
        vectors = eigh(pi.matrix()).vectors
        overlap_match = np.argmax(np.abs(vectors), axis=0)
        alt = np.full(pi.dim, np.nan)
        if np.unique(overlap_match).size == pi.dim:
            alt_shifts = np.empty(pi.dim)
            alt_shifts[overlap_match] = etas - pi.omegas[overlap_match]
            alt = bounds - np.abs(alt_shifts)
        raise MatchingAmbiguityError(
            "omega spacing is smaller than the total coupling; eta-omega "
            "pairing is ill-defined",
            sorted_margins=margins,
            overlap_margins=alt,
        )
    if np.any(margins < 0):
        raise InvariantViolationError(
            f"Pi eigenvalue bound violated: worst margin {np.min(margins):.3e}"
        )
    return PiBoundReport(
        etas=etas, omegas=pi.omegas, shifts=shifts, bounds=bounds, margins=margins
    )


def constant_case_solution(pi: PiMatrix, m: int, tau) -> complex | np.ndarray:
    """Exact surviving amplitude c'_m(tau) = sum_k |U_mk|^2 e^{i eta_k tau}."""
    system = eigh(pi.matrix())
    weights = np.abs(system.vectors[m, :]) ** 2
    taus = np.asarray(tau, dtype=float)
    out = np.sum(weights * np.exp(1j * np.outer(np.atleast_1d(taus), system.values)), axis=1)
    return complex(out[0]) if np.ndim(tau) == 0 else out


# ---------------------------------------------------------------------------
# Theorem bound calculator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoremInputs:
    """Inputs of the (1-delta)^2 occupation bound for an N-level system.

    ``deriv_bound`` is the user-supplied bound B on the coefficient-vector
    derivatives at the interval ends; computing it symbolically is out of
    scope, so the calculator checks the theorem's arithmetic only.
    """

    n_levels: int
    p_terms: int
    deriv_bound: float
    coupling_max: float
    omega_min: float

    def __post_init__(self):
        if self.n_levels < 2 or self.p_terms < 1:
            raise InvalidParamsError("need n_levels >= 2 and p_terms >= 1")
        vals = (self.deriv_bound, self.coupling_max, self.omega_min)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParamsError("theorem inputs must be finite")
        if self.deriv_bound <= 0 or self.omega_min <= 0:
            raise InvalidParamsError("deriv_bound and omega_min must be positive")
        if self.coupling_max < 0:
            raise InvalidParamsError("coupling_max must be nonnegative")


@dataclass(frozen=True)
class TheoremBound:
    """Result of the bound calculator; inapplicable results name the failed
    premise instead of reporting a verdict."""

    applicable: bool
    violated: str | None
    eps_prime: float
    eps: float
    delta: float | None
    floor: float | None


def theorem_bound(inputs: TheoremInputs) -> TheoremBound:
    """delta = eps/(1 - eps') and the floor (1 - delta)^2 from the premises."""
    n, p = inputs.n_levels, inputs.p_terms
    eps_prime = 1.0 / inputs.omega_min
    eps = eps_prime * 2.0 * p * n * (n - 1) * inputs.deriv_bound * inputs.coupling_max
    if not eps_prime < 1.0:
        return TheoremBound(False, "eps_prime < 1", eps_prime, eps, None, None)
    if not eps + eps_prime <= 1.0:
        return TheoremBound(False, "eps + eps_prime <= 1", eps_prime, eps, None, None)
    delta = eps / (1.0 - eps_prime)
    return TheoremBound(True, None, eps_prime, eps, delta, (1.0 - delta) ** 2)
