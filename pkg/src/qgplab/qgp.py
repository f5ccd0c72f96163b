"""Quantum geometric potential, Bloch-sphere curvature, and loop identities.

The QGP of the pair (m, n) is

    Delta_mn = gamma_mm - gamma_nn + d/dtau arg gamma_nm ,

a gauge-invariant correction to the instantaneous gap.  For 2-level systems
Delta_mn / (2|gamma_mn|) equals the geodesic curvature of the eigenstate's
Bloch-sphere curve with arclength ds = 2|gamma_mn| dtau; over closed loops
the integral of Delta_mn is the difference of the two Berry phases up to an
integer number of 2 pi windings of the coupling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import (
    DegenerateCouplingError,
    InvariantViolationError,
    NotClosedError,
    SingularPointError,
    UndefinedArgError,
)
from .frames import (
    COUPLING_FLOOR,
    SpectralFrame,
    TimeGrid,
    build_frame,
)
from .linalg import max_abs
from .models import (
    BlochCurveModel,
    HamiltonianModel,
    SmoothScalar,
    bloch_curve,
)

_SPEED_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class QgpSeries:
    """Delta_mn, |gamma_mn| and their ratio on a grid.

    ``valid`` masks samples where the coupling is large enough for the phase
    derivative to exist; delta/ratio are NaN elsewhere.
    """

    grid: TimeGrid
    pair: tuple[int, int]
    delta: np.ndarray
    gamma_abs: np.ndarray
    ratio: np.ndarray
    valid: np.ndarray
    unwrap_flags: int = 0

    def require_valid(self) -> None:
        if not bool(np.all(self.valid)):
            raise UndefinedArgError(
                f"QGP for pair {self.pair} undefined on "
                f"{int(np.count_nonzero(~self.valid))} samples"
            )


def qgp(frame: SpectralFrame, m: int, n: int) -> QgpSeries:
    """Quantum geometric potential Delta_mn on the frame grid.

    Uses the model's closed-form Delta when the frame carries it; otherwise
    differentiates the unwrapped phase of gamma_nm with 4th-order stencils,
    independently on each maximal run of valid samples.
    """
    if m == n:
        raise ValueError("QGP needs m != n")
    coupling = frame.gamma[:, n, m]  # arg gamma_nm enters Delta_mn
    gamma_abs = np.abs(coupling)
    valid = gamma_abs > COUPLING_FLOOR
    if not valid.any():
        raise UndefinedArgError(f"gamma_{n}{m} vanishes on the whole grid")

    taus = frame.grid.samples
    flags = 0
    if frame.delta_analytic is not None:
        delta = frame.delta_analytic[:, m, n].astype(float).copy()
        delta[~valid] = np.nan
    else:
        diag = frame.gamma[:, m, m].real - frame.gamma[:, n, n].real
        delta = np.full(taus.size, np.nan)
        for start, stop in numerics.valid_runs(valid):
            arg, large = numerics.unwrap_angles(np.angle(coupling[start:stop]))
            flags += large
            if stop - start == 1:
                continue
            darg = numerics.derivative_series(arg, taus[start:stop])
            delta[start:stop] = diag[start:stop] + darg
        valid = valid & ~np.isnan(delta)

    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = delta / (2.0 * gamma_abs)
    return QgpSeries(
        grid=frame.grid,
        pair=(m, n),
        delta=delta,
        gamma_abs=gamma_abs,
        ratio=ratio,
        valid=valid,
        unwrap_flags=flags,
    )


# ---------------------------------------------------------------------------
# Bloch-sphere geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphereCurve:
    """Regular curve on the unit sphere given by polar/azimuth functions."""

    theta: SmoothScalar
    phi: SmoothScalar

    @classmethod
    def from_bloch(cls, curve: BlochCurveModel) -> "SphereCurve":
        return cls(theta=curve.theta, phi=curve.phi)

    def speed(self, tau) -> np.ndarray:
        """|dr/dtau| = sqrt(theta'^2 + (phi' sin theta)^2)."""
        tau = np.asarray(tau, dtype=float)
        td = self.theta.d1(tau)
        pd = self.phi.d1(tau)
        return np.sqrt(td * td + (pd * np.sin(self.theta.value(tau))) ** 2)

    def point(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        th, ph = self.theta.value(tau), self.phi.value(tau)
        return np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
        )


def geodesic_curvature(curve: SphereCurve, tau) -> float | np.ndarray:
    """Geodesic curvature of the spherical curve at tau.

    rho = (r x r_s) . r_ss in terms of theta, phi and their first and second
    tau-derivatives; requires a regular point (nonzero speed).
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    th = curve.theta.value(tau_arr)
    td = curve.theta.d1(tau_arr)
    tdd = curve.theta.d2(tau_arr)
    pd = curve.phi.d1(tau_arr)
    pdd = curve.phi.d2(tau_arr)
    sin_th, cos_th = np.sin(th), np.cos(th)
    speed_sq = td * td + (pd * sin_th) ** 2
    if np.any(np.sqrt(speed_sq) < _SPEED_FLOOR):
        raise SingularPointError("curve speed below 1e-10; curvature undefined")
    num = (
        td * pdd * sin_th
        + 2 * td * td * pd * cos_th
        + pd**3 * sin_th**2 * cos_th
        - pd * tdd * sin_th
    )
    rho = num / speed_sq**1.5
    return float(rho[0]) if np.ndim(tau) == 0 else rho


def qgp_curvature_identity(
    curve: BlochCurveModel,
    taus: np.ndarray,
    gamma_mode: str = "auto",
) -> float:
    """max_tau |Delta_+-/(2|gamma_+-|) - rho| for a 2-level Bloch model."""
    grid = TimeGrid(np.asarray(taus, dtype=float))
    frame = build_frame(bloch_curve(curve), grid, gamma_mode=gamma_mode)
    series = qgp(frame, 1, 0)
    rho = geodesic_curvature(SphereCurve.from_bloch(curve), grid.samples)
    dev = np.abs(series.ratio - rho)
    if not series.valid.any():
        raise UndefinedArgError("coupling vanished everywhere on the grid")
    return float(np.nanmax(dev[series.valid]))


# ---------------------------------------------------------------------------
# Berry-phase difference over closed loops
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BerryDifference:
    """Loop integrals entering the Berry-phase-difference identity.

    ``berry_m``/``berry_n`` are gauge-invariant Berry phases (diagonal gamma
    integral plus the frame's closure phase).  ``residual`` is
    integral_delta - (berry_m - berry_n) - 2*pi*winding; ``masked`` marks
    loops where the coupling vanished somewhere, in which case the winding
    is not asserted.
    """

    integral_delta: float
    winding: int
    berry_m: float
    berry_n: float
    residual: float
    masked: bool


def berry_difference(
    frame: SpectralFrame,
    m: int,
    n: int,
    closure_tol: float = 1e-10,
    identity_tol: float = 1e-5,
    winding_tol: float = 0.05,
) -> BerryDifference:
    """Check integral of Delta_mn over a closed loop against Berry phases."""
    if frame.model is None:
        raise NotClosedError("frame carries no model; cannot verify closure")
    taus = frame.grid.samples
    h0 = frame.model.evaluate(float(taus[0]))
    h1 = frame.model.evaluate(float(taus[-1]))
    scale = max(max_abs(h0), 1.0)
    if max_abs(h1 - h0) > closure_tol * scale:
        raise NotClosedError(
            f"h(tau_end) differs from h(tau_start) by {max_abs(h1 - h0):.3e}"
        )
    closure = np.einsum("in,in->n", frame.vectors[0].conj(), frame.vectors[-1])
    if np.min(np.abs(closure)) < 1.0 - 1e-6:
        raise NotClosedError("eigenframe does not close up to phases over the loop")

    series = qgp(frame, m, n)
    masked = not bool(np.all(series.valid))

    beta_m = float(np.angle(closure[m]))
    beta_n = float(np.angle(closure[n]))
    berry_m = numerics.trapezoid(frame.gamma[:, m, m].real, taus) + beta_m
    berry_n = numerics.trapezoid(frame.gamma[:, n, n].real, taus) + beta_n

    if masked:
        integral_delta = 0.0
        for start, stop in numerics.valid_runs(series.valid):
            if stop - start > 1:
                integral_delta += numerics.trapezoid(
                    series.delta[start:stop], taus[start:stop]
                )
        return BerryDifference(
            integral_delta=integral_delta,
            winding=0,
            berry_m=berry_m,
            berry_n=berry_n,
            residual=integral_delta - (berry_m - berry_n),
            masked=True,
        )

    arg, _ = numerics.unwrap_angles(np.angle(frame.gamma[:, n, m]))
    winding_raw = (arg[-1] - arg[0] - (beta_m - beta_n)) / (2.0 * np.pi)
    winding = int(np.round(winding_raw))
    if abs(winding_raw - winding) > winding_tol:
        raise InvariantViolationError(
            f"coupling winding {winding_raw:.4f} is not an integer"
        )
    integral_delta = numerics.trapezoid(series.delta, taus)
    residual = integral_delta - (berry_m - berry_n) - 2.0 * np.pi * winding
    if abs(residual) > identity_tol:
        raise InvariantViolationError(
            f"Berry-difference identity residual {residual:.3e} exceeds "
            f"{identity_tol:g}"
        )
    return BerryDifference(
        integral_delta=integral_delta,
        winding=winding,
        berry_m=berry_m,
        berry_n=berry_n,
        residual=residual,
        masked=False,
    )


# ---------------------------------------------------------------------------
# Reparametrization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReparamMap:
    """Strictly increasing smooth time map tau -> tau' = f(tau)."""

    f: SmoothScalar
    domain: tuple[float, float]

    def forward(self, tau) -> np.ndarray:
        return self.f.value(np.asarray(tau, dtype=float))

    def inverse(self, tau_prime, iterations: int = 60, tol: float = 1e-13) -> np.ndarray:
        """Invert by monotone-table bracketing plus Newton polish."""
        tp = np.asarray(tau_prime, dtype=float)
        lo, hi = self.domain
        table_x = np.linspace(lo, hi, 4097)
        table_f = self.f.value(table_x)
        if np.any(np.diff(table_f) <= 0):
            raise DegenerateCouplingError("time map is not strictly increasing")
        x = np.interp(tp, table_f, table_x)
        for _ in range(iterations):
            resid = self.f.value(x) - tp
            slope = self.f.d1(x)
            step = resid / slope
            x = np.clip(x - step, lo, hi)
            if np.max(np.abs(step)) < tol:
                break
        return x


def reparametrized_model(model: HamiltonianModel, rmap: ReparamMap) -> HamiltonianModel:
    """Physically rescaled model in the new time: h'(tau') = g' h(g(tau')).

    g = f^{-1}; the dtau/dtau' factor keeps the Schrodinger dynamics the
    same path traversed at the new rate, so eigenvalues, gamma and Delta all
    scale by g' while Delta/|gamma| is untouched.
    """

    def evaluate_batch(tau_primes):
        tps = np.atleast_1d(np.asarray(tau_primes, dtype=float))
        tau = rmap.inverse(tps)
        gp = 1.0 / rmap.f.d1(tau)
        return gp[:, None, None] * model.sample(tau)

    derivative_batch = None
    if model.derivative is not None and rmap.f.deriv2 is not None:

        def derivative_batch(tau_primes):
            tps = np.atleast_1d(np.asarray(tau_primes, dtype=float))
            tau = rmap.inverse(tps)
            fp = rmap.f.d1(tau)
            fpp = rmap.f.d2(tau)
            gp = 1.0 / fp
            gpp = -fpp / fp**3
            return (
                gpp[:, None, None] * model.sample(tau)
                + (gp**2)[:, None, None] * model.sample_derivative(tau)
            )

    return HamiltonianModel(
        dim=model.dim,
        evaluate=lambda tau: evaluate_batch(np.array([tau]))[0],
        derivative=(
            (lambda tau: derivative_batch(np.array([tau]))[0])
            if derivative_batch is not None
            else None
        ),
        label=f"{model.label}|reparam",
        evaluate_batch=evaluate_batch,
        derivative_batch=derivative_batch,
    )


@dataclass(frozen=True, eq=False)
class FlatReparamResult:
    """Monotone grid map and the frame re-expressed in the new time.

    ``combination`` is e'_- - e'_+ + Delta'_{+-} at the new samples; the
    construction makes it constant up to the quadrature of the map.
    ``rate`` is dtau'/dtau at the original samples.
    """

    tau: np.ndarray
    tau_prime: np.ndarray
    frame: SpectralFrame | None
    combination: np.ndarray
    rate: np.ndarray


def reparametrize_flat(
    model: HamiltonianModel,
    interval: tuple[float, float],
    samples: int = 4097,
    gamma_mode: str = "auto",
) -> FlatReparamResult:
    """Flatten e_- - e_+ + Delta_+- to a constant by a monotone time map.

    The map's rate is proportional to |e_- - e_+ + Delta_+-| itself, which
    is the measure that actually makes the combination constant (the
    arclength measure |gamma_+-| only fixes |gamma'|).  Raises
    DegenerateCoupling if the combination vanishes or changes sign.
    """
    a, b = float(interval[0]), float(interval[1])
    if b == a:
        tau = np.array([a])
        return FlatReparamResult(
            tau=tau, tau_prime=tau.copy(), frame=None,
            combination=np.array([]), rate=np.ones(1),
        )
    if b < a:
        raise ValueError("interval must be ordered")
    grid = TimeGrid.uniform(a, b, samples)
    frame = build_frame(model, grid, gamma_mode=gamma_mode)
    if frame.dim != 2:
        raise ValueError("flat reparametrization is defined for 2-level models")
    series = qgp(frame, 1, 0)
    series.require_valid()
    comb = frame.energies[:, 0] - frame.energies[:, 1] + series.delta
    if np.min(np.abs(comb)) < 1e-9 or (np.max(np.sign(comb)) != np.min(np.sign(comb))):
        raise DegenerateCouplingError(
            "e_- - e_+ + Delta_+- vanishes or changes sign; map not invertible"
        )
    speed = np.abs(comb)
    cum = numerics.cumulative_trapezoid(speed, grid.samples)
    scale = (b - a) / cum[-1]
    tau_prime = a + scale * cum
    stretch = 1.0 / (scale * speed)  # dtau/dtau' at the samples

    new_frame = SpectralFrame(
        grid=TimeGrid(tau_prime),
        energies=frame.energies * stretch[:, None],
        vectors=frame.vectors,
        gamma=frame.gamma * stretch[:, None, None],
        min_gap=float(np.min(np.abs(np.diff(frame.energies * stretch[:, None], axis=1)))),
        gamma_mode=frame.gamma_mode + "+flat",
        model=None,
        delta_analytic=(
            frame.delta_analytic * stretch[:, None, None]
            if frame.delta_analytic is not None
            else None
        ),
        min_overlap=frame.min_overlap,
    )
    return FlatReparamResult(
        tau=grid.samples,
        tau_prime=tau_prime,
        frame=new_frame,
        combination=comb * stretch,
        rate=scale * speed,
    )


def reparam_invariance_check(
    model: HamiltonianModel,
    interval: tuple[float, float],
    rmap: ReparamMap,
    m: int = 1,
    n: int = 0,
    samples: int = 4097,
    gamma_mode: str = "auto",
) -> float:
    """max |(Delta/|gamma|)(tau) - (Delta'/|gamma'|)(f(tau))| over the grid.

    The reparametrized frame is rebuilt from scratch on the image grid, so
    the check exercises the whole numeric pipeline, not the scaling law.
    """
    a, b = float(interval[0]), float(interval[1])
    grid = TimeGrid.uniform(a, b, samples)
    frame = build_frame(model, grid, gamma_mode=gamma_mode)
    series = qgp(frame, m, n)

    image = rmap.forward(grid.samples)
    new_model = reparametrized_model(model, rmap)
    mode = gamma_mode
    if mode == "auto" and new_model.analytic_frame is None:
        mode = "analytic_derivative" if new_model.derivative is not None else "finite_difference"
    new_frame = build_frame(new_model, TimeGrid(image), gamma_mode=mode)
    new_series = qgp(new_frame, m, n)

    both = series.valid & new_series.valid
    if not both.any():
        raise UndefinedArgError("no commonly valid samples for the comparison")
    ratio_old = series.delta[both] / series.gamma_abs[both]
    ratio_new = new_series.delta[both] / new_series.gamma_abs[both]
    return float(np.max(np.abs(ratio_old - ratio_new)))
