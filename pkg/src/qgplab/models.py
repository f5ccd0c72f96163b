"""Hamiltonian models: tau -> Hermitian matrix, with optional analytic extras.

A model bundles the matrix-valued function h(tau) with, when available, its
analytic time derivative and a closed-form eigenframe (energies, eigenvectors,
non-adiabatic coupling matrix, and the geometric gap correction).  All models
are constructed already dimensionless; ``dimensionless`` rescales a raw one.

Built-in models:

* ``rotating_spin``  - spin-1/2 in a rotating magnetic field,
  h = eta*sz + xi*(sx cos(2*K*eta*tau) + sy sin(2*K*eta*tau)).
* ``robust_model``   - 2-level system built from nested conjugations by
  matrix exponentials, engineered so the occupation floor is insensitive to
  the fast-drive magnitude.
* ``bloch_curve``    - h = A(tau)*I + B(tau)*nhat(tau).sigma for a smooth
  curve nhat on the Bloch sphere.
* ``fourier_nlevel`` - sum_k a_k cos(w_k tau + p_k) H_k for Hermitian H_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import linalg
from .errors import GapClosureError, InvalidParamsError, NotHermitianError
from .linalg import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z

# Step used when a scalar's derivative has to fall back to finite differences.
_FD_STEP = 1e-5


@dataclass(frozen=True)
class SmoothScalar:
    """Scalar function of tau with optional analytic derivatives.

    ``value`` must accept numpy arrays.  Missing derivatives fall back to
    5-point central differences with step 1e-5.
    """

    value: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray] | None = None
    deriv2: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.deriv is not None and self.deriv2 is not None

    def d1(self, tau):
        if self.deriv is not None:
            return self.deriv(np.asarray(tau, dtype=float))
        return self._fd(tau, order=1)

    def d2(self, tau):
        if self.deriv2 is not None:
            return self.deriv2(np.asarray(tau, dtype=float))
        return self._fd(tau, order=2)

    def _fd(self, tau, order: int):
        tau = np.asarray(tau, dtype=float)
        h = _FD_STEP
        f = self.value
        if order == 1:
            return (8 * (f(tau + h) - f(tau - h)) - (f(tau + 2 * h) - f(tau - 2 * h))) / (12 * h)
        return (
            -(f(tau + 2 * h) + f(tau - 2 * h))
            + 16 * (f(tau + h) + f(tau - h))
            - 30 * f(tau)
        ) / (12 * h * h)

    @classmethod
    def constant(cls, c: float) -> "SmoothScalar":
        return cls(
            value=lambda tau, c=c: np.full_like(np.asarray(tau, dtype=float), c),
            deriv=lambda tau: np.zeros_like(np.asarray(tau, dtype=float)),
            deriv2=lambda tau: np.zeros_like(np.asarray(tau, dtype=float)),
        )

    @classmethod
    def poly(cls, coeffs) -> "SmoothScalar":
        """Polynomial sum_i coeffs[i] * tau**i."""
        c = np.asarray(coeffs, dtype=float)
        d1 = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
        d2 = np.polynomial.polynomial.polyder(c, 2) if c.size > 2 else np.zeros(1)
        pv = np.polynomial.polynomial.polyval
        return cls(
            value=lambda tau, c=c: pv(np.asarray(tau, dtype=float), c),
            deriv=lambda tau, d=d1: pv(np.asarray(tau, dtype=float), d),
            deriv2=lambda tau, d=d2: pv(np.asarray(tau, dtype=float), d),
        )

    @classmethod
    def sinusoid(cls, offset: float, amplitude: float, omega: float, phase: float = 0.0) -> "SmoothScalar":
        """offset + amplitude * sin(omega*tau + phase)."""
        return cls(
            value=lambda tau: offset + amplitude * np.sin(omega * np.asarray(tau, dtype=float) + phase),
            deriv=lambda tau: amplitude * omega * np.cos(omega * np.asarray(tau, dtype=float) + phase),
            deriv2=lambda tau: -amplitude * omega**2 * np.sin(omega * np.asarray(tau, dtype=float) + phase),
        )

    @classmethod
    def from_callable(cls, f: Callable) -> "SmoothScalar":
        """Value-only wrapper; derivatives go through finite differences."""
        return cls(value=lambda tau, f=f: np.asarray(f(np.asarray(tau, dtype=float)), dtype=float))


@dataclass(frozen=True)
class AnalyticFrame:
    """Closed-form eigenframe sampled on a tau array.

    ``frame_at(taus)`` returns (energies (K, N) ascending, vectors (K, N, N)
    with eigenvector columns, gamma (K, N, N)) in the model's chosen gauge.
    ``delta_at``, when present, returns the closed-form QGP matrix
    Delta[m, n] on the same level ordering.
    """

    frame_at: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]
    delta_at: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """Time-dependent Hermitian generator with optional analytic structure."""

    dim: int
    evaluate: Callable[[float], np.ndarray]
    derivative: Callable[[float], np.ndarray] | None = None
    analytic_frame: AnalyticFrame | None = None
    label: str = ""
    evaluate_batch: Callable[[np.ndarray], np.ndarray] | None = None
    derivative_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def sample(self, taus: np.ndarray) -> np.ndarray:
        """h at every tau in ``taus``; shape (K, dim, dim)."""
        taus = np.asarray(taus, dtype=float)
        if self.evaluate_batch is not None:
            return self.evaluate_batch(taus)
        return np.stack([self.evaluate(float(t)) for t in np.atleast_1d(taus)])

    def sample_derivative(self, taus: np.ndarray) -> np.ndarray:
        if self.derivative is None:
            raise InvalidParamsError(f"model {self.label!r} has no analytic derivative")
        taus = np.asarray(taus, dtype=float)
        if self.derivative_batch is not None:
            return self.derivative_batch(taus)
        return np.stack([self.derivative(float(t)) for t in np.atleast_1d(taus)])


def dimensionless(model: HamiltonianModel, level: int = 0) -> HamiltonianModel:
    """Divide a raw model by |e_level(0)|, recording the scale in the label."""
    system = linalg.eigh(model.evaluate(0.0))
    scale = abs(float(system.values[level]))
    if scale == 0.0:
        raise InvalidParamsError("initial eigenvalue is zero; cannot rescale")
    inv = 1.0 / scale

    def scaled(f):
        return (lambda tau, f=f: inv * f(tau)) if f is not None else None

    return HamiltonianModel(
        dim=model.dim,
        evaluate=scaled(model.evaluate),
        derivative=scaled(model.derivative),
        analytic_frame=None,
        label=f"{model.label}/scale={scale:.12g}",
        evaluate_batch=scaled(model.evaluate_batch),
        derivative_batch=scaled(model.derivative_batch),
    )


# ---------------------------------------------------------------------------
# Rotating spin-1/2 model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RotatingSpinParams:
    """Parameters of the rotating spin-1/2 model (all dimensionless).

    ``eta`` and ``xi`` are the static/rotating field strengths, ``K`` the
    sweep-rate multiplier.  ``normalized`` rescales (eta, xi) onto the unit
    circle so the instantaneous eigenvalues are exactly +-1.
    """

    eta: float
    xi: float
    K: float

    def __post_init__(self):
        if not (self.eta > 0 and self.xi > 0):
            raise InvalidParamsError("rotating spin requires eta > 0 and xi > 0")
        if not all(math.isfinite(v) for v in (self.eta, self.xi, self.K)):
            raise InvalidParamsError("rotating spin parameters must be finite")

    @classmethod
    def normalized(cls, eta: float, xi: float, K: float) -> "RotatingSpinParams":
        scale = math.hypot(eta, xi)
        if scale == 0:
            raise InvalidParamsError("eta and xi cannot both vanish")
        return cls(eta=eta / scale, xi=xi / scale, K=K)

    @property
    def energy(self) -> float:
        """Instantaneous eigenvalue magnitude sqrt(eta^2 + xi^2)."""
        return math.hypot(self.eta, self.xi)

    @property
    def cos_theta(self) -> float:
        return self.eta / self.energy

    @property
    def sin_theta(self) -> float:
        return self.xi / self.energy

    @property
    def omega(self) -> float:
        """Drive angular frequency 2*K*eta."""
        return 2.0 * self.K * self.eta

    @property
    def coupling_abs(self) -> float:
        """|gamma_+-| = K*eta*sin(theta), constant in tau."""
        return abs(self.K * self.eta * self.sin_theta)

    @property
    def qgp(self) -> float:
        """Delta_+- = 2*K*eta*cos(theta), constant in tau."""
        return 2.0 * self.K * self.eta * self.cos_theta


def rotating_spin(params: RotatingSpinParams) -> HamiltonianModel:
    """Spin-1/2 in a field rotating about z at frequency 2*K*eta."""
    eta, xi, K = params.eta, params.xi, params.K
    omega = params.omega

    def evaluate_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        phase = omega * taus
        h = np.zeros((taus.size, 2, 2), dtype=complex)
        off = xi * np.exp(-1j * phase)  # xi*(cos - i sin) couples |0><1|
        h[:, 0, 0] = eta
        h[:, 1, 1] = -eta
        h[:, 0, 1] = off
        h[:, 1, 0] = np.conjugate(off)
        return h

    def derivative_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        phase = omega * taus
        dh = np.zeros((taus.size, 2, 2), dtype=complex)
        doff = -1j * omega * xi * np.exp(-1j * phase)
        dh[:, 0, 1] = doff
        dh[:, 1, 0] = np.conjugate(doff)
        return dh

    half = 0.5 * math.acos(params.cos_theta)
    c, s = math.cos(half), math.sin(half)
    e = params.energy
    g_abs = K * eta * params.sin_theta

    def frame_at(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        k = taus.size
        energies = np.empty((k, 2))
        energies[:, 0] = -e
        energies[:, 1] = e
        drive = np.exp(1j * omega * taus)
        # Columns: level 0 = lower orbit, level 1 = upper orbit.
        vectors = np.zeros((k, 2, 2), dtype=complex)
        vectors[:, 0, 0] = s
        vectors[:, 1, 0] = -c * drive
        vectors[:, 0, 1] = c
        vectors[:, 1, 1] = s * drive
        gamma = np.zeros((k, 2, 2), dtype=complex)
        gamma[:, 0, 0] = -2.0 * K * eta * c * c
        gamma[:, 1, 1] = -2.0 * K * eta * s * s
        gamma[:, 0, 1] = g_abs
        gamma[:, 1, 0] = g_abs
        return energies, vectors, gamma

    def delta_at(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        delta = np.zeros((taus.size, 2, 2))
        delta[:, 1, 0] = params.qgp
        delta[:, 0, 1] = -params.qgp
        return delta

    return HamiltonianModel(
        dim=2,
        evaluate=lambda tau: evaluate_batch(np.array([tau]))[0],
        derivative=lambda tau: derivative_batch(np.array([tau]))[0],
        analytic_frame=AnalyticFrame(frame_at=frame_at, delta_at=delta_at),
        label=f"rotating_spin(eta={eta:g},xi={xi:g},K={K:g})",
        evaluate_batch=evaluate_batch,
        derivative_batch=derivative_batch,
    )


# ---------------------------------------------------------------------------
# Robust model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RobustModelParams:
    """Parameters of the robust 2-level model.

    Regime flags (strong static field, weak wobble) use the >= 10 threshold;
    the occupation-floor statements only hold in-regime.  The mixed-frequency
    radicand eta*eta0 + eta*eta2 + eta2*eta1 must be nonnegative for the
    closed-form probability to be real.
    """

    eta: float
    eta0: float
    eta1: float
    eta2: float

    def __post_init__(self):
        vals = (self.eta, self.eta0, self.eta1, self.eta2)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParamsError("robust model parameters must be finite")
        if self.eta_tilde_sq < 0:
            raise InvalidParamsError(
                "eta*eta0 + eta*eta2 + eta2*eta1 must be nonnegative "
                f"(got {self.eta_tilde_sq:g}); the closed-form probability is "
                "only defined for such parameters"
            )

    @property
    def strong_static(self) -> bool:
        return self.eta != 0 and self.eta0 / self.eta >= 10.0

    @property
    def weak_wobble(self) -> bool:
        return self.eta1 != 0 and self.eta0 / self.eta1 >= 10.0

    @property
    def eta_bar(self) -> float:
        """sqrt(eta1^2 + (eta0 + eta2)^2)."""
        return math.hypot(self.eta1, self.eta0 + self.eta2)

    @property
    def eta_tilde_sq(self) -> float:
        return self.eta * self.eta0 + self.eta * self.eta2 + self.eta2 * self.eta1

    def gap_scale(self, tau) -> np.ndarray:
        """N(tau): half the instantaneous eigenvalue gap."""
        tau = np.asarray(tau, dtype=float)
        z = self.eta + self.eta1 * np.cos(2 * self.eta2 * tau)
        y = self.eta1 * np.sin(2 * self.eta2 * tau)
        return np.sqrt(self.eta0**2 + z * z + y * y)


def _robust_bloch_components(p: RobustModelParams, taus: np.ndarray):
    """Pauli components of the robust Hamiltonian (closed form)."""
    c2e = np.cos(2 * p.eta * taus)
    s2e = np.sin(2 * p.eta * taus)
    s2f = np.sin(2 * p.eta2 * taus)
    c2f = np.cos(2 * p.eta2 * taus)
    hx = p.eta0 * c2e - p.eta1 * s2f * s2e
    hy = p.eta0 * s2e + p.eta1 * s2f * c2e
    hz = p.eta + p.eta1 * c2f
    return hx, hy, hz


def robust_model(params: RobustModelParams) -> HamiltonianModel:
    """2-level model with a fast wobble riding on a strong static field.

    ``evaluate`` follows the defining nested-exponential expression;
    ``evaluate_batch`` uses the equivalent closed-form Pauli components
    (equality is pinned by tests).
    """
    p = params

    def evaluate(tau: float) -> np.ndarray:
        u_z = linalg.expm_unitary(SIGMA_Z, p.eta * tau)
        u_x = linalg.expm_unitary(SIGMA_X, -p.eta2 * tau)  # e^{+i eta2 sx tau}
        inner = p.eta0 * SIGMA_X + p.eta1 * (u_x @ SIGMA_Z @ linalg.dagger(u_x))
        return p.eta * SIGMA_Z + u_z @ inner @ linalg.dagger(u_z)

    def derivative(tau: float) -> np.ndarray:
        # Product rule over the two conjugations.
        u_z = linalg.expm_unitary(SIGMA_Z, p.eta * tau)
        u_x = linalg.expm_unitary(SIGMA_X, -p.eta2 * tau)
        rotated_z = u_x @ SIGMA_Z @ linalg.dagger(u_x)
        inner = p.eta0 * SIGMA_X + p.eta1 * rotated_z
        d_inner = p.eta1 * 1j * p.eta2 * (SIGMA_X @ rotated_z - rotated_z @ SIGMA_X)
        comm = -1j * p.eta * (SIGMA_Z @ inner - inner @ SIGMA_Z)
        return u_z @ (comm + d_inner) @ linalg.dagger(u_z)

    def evaluate_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        hx, hy, hz = _robust_bloch_components(p, taus)
        h = np.zeros((taus.size, 2, 2), dtype=complex)
        h[:, 0, 0] = hz
        h[:, 1, 1] = -hz
        h[:, 0, 1] = hx - 1j * hy
        h[:, 1, 0] = hx + 1j * hy
        return h

    def derivative_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        c2e = np.cos(2 * p.eta * taus)
        s2e = np.sin(2 * p.eta * taus)
        s2f = np.sin(2 * p.eta2 * taus)
        c2f = np.cos(2 * p.eta2 * taus)
        dhx = (
            -2 * p.eta * p.eta0 * s2e
            - 2 * p.eta2 * p.eta1 * c2f * s2e
            - 2 * p.eta * p.eta1 * s2f * c2e
        )
        dhy = (
            2 * p.eta * p.eta0 * c2e
            + 2 * p.eta2 * p.eta1 * c2f * c2e
            - 2 * p.eta * p.eta1 * s2f * s2e
        )
        dhz = -2 * p.eta2 * p.eta1 * s2f
        dh = np.zeros((taus.size, 2, 2), dtype=complex)
        dh[:, 0, 0] = dhz
        dh[:, 1, 1] = -dhz
        dh[:, 0, 1] = dhx - 1j * dhy
        dh[:, 1, 0] = dhx + 1j * dhy
        return dh

    return HamiltonianModel(
        dim=2,
        evaluate=evaluate,
        derivative=derivative,
        label=(
            f"robust(eta={p.eta:g},eta0={p.eta0:g},eta1={p.eta1:g},eta2={p.eta2:g})"
        ),
        evaluate_batch=evaluate_batch,
        derivative_batch=derivative_batch,
    )


def robust_exact_propagator(params: RobustModelParams, tau: float) -> np.ndarray:
    """The model's exact propagator U(tau), a product of three exponentials."""
    p = params
    u1 = linalg.expm_unitary(SIGMA_Z, p.eta * tau)
    u2 = linalg.expm_unitary(SIGMA_X, -p.eta2 * tau)
    u3 = linalg.expm_unitary((p.eta0 + p.eta2) * SIGMA_X + p.eta1 * SIGMA_Z, tau)
    return u1 @ u2 @ u3


def robust_adiabatic_projector(params: RobustModelParams, tau, sign: int) -> np.ndarray:
    """Density matrix of the +- adiabatic orbit, (I +- hhat.sigma)/2."""
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    hx, hy, hz = _robust_bloch_components(params, taus)
    n = params.gap_scale(taus)
    rho = np.zeros((taus.size, 2, 2), dtype=complex)
    rho[:, 0, 0] = 0.5 + sign * hz / (2 * n)
    rho[:, 1, 1] = 0.5 - sign * hz / (2 * n)
    rho[:, 0, 1] = sign * (hx - 1j * hy) / (2 * n)
    rho[:, 1, 0] = sign * (hx + 1j * hy) / (2 * n)
    return rho if np.ndim(tau) else rho[0]


# ---------------------------------------------------------------------------
# Bloch-sphere curve model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlochCurveModel:
    """2-level Hamiltonian A(tau)*I + B(tau)*nhat(tau).sigma.

    nhat = (sin th cos ph, sin th sin ph, cos th).  B must stay positive on
    the run interval (nonzero gap).  Analytic derivatives of theta/phi/A/B
    unlock the closed-form frame and QGP.
    """

    theta: SmoothScalar
    phi: SmoothScalar
    A: SmoothScalar = field(default_factory=lambda: SmoothScalar.constant(0.0))
    B: SmoothScalar = field(default_factory=lambda: SmoothScalar.constant(1.0))

    @property
    def has_analytic_derivatives(self) -> bool:
        return all(
            s.deriv is not None for s in (self.theta, self.phi, self.A, self.B)
        )


def bloch_coupling(curve: BlochCurveModel, taus: np.ndarray) -> np.ndarray:
    """gamma_{-+} = (phi_dot sin(theta) - i theta_dot)/2 in the standard gauge."""
    taus = np.asarray(taus, dtype=float)
    return 0.5 * (
        curve.phi.d1(taus) * np.sin(curve.theta.value(taus)) - 1j * curve.theta.d1(taus)
    )


def bloch_qgp(curve: BlochCurveModel, taus: np.ndarray) -> np.ndarray:
    """Closed-form QGP of the upper orbit in theta/phi derivatives."""
    taus = np.asarray(taus, dtype=float)
    th = curve.theta.value(taus)
    td = curve.theta.d1(taus)
    tdd = curve.theta.d2(taus)
    pd = curve.phi.d1(taus)
    pdd = curve.phi.d2(taus)
    sin_th, cos_th = np.sin(th), np.cos(th)
    num = (
        td * pdd * sin_th
        + 2 * td * td * pd * cos_th
        + pd**3 * sin_th**2 * cos_th
        - pd * tdd * sin_th
    )
    den = td * td + (pd * sin_th) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / den


def bloch_curve(curve: BlochCurveModel) -> HamiltonianModel:
    """Build the Hamiltonian model for a Bloch-sphere curve."""

    def components(taus):
        th = curve.theta.value(taus)
        ph = curve.phi.value(taus)
        a = curve.A.value(taus)
        b = curve.B.value(taus)
        if np.any(b <= 0):
            raise GapClosureError("B(tau) <= 0 sampled; gap closes")
        return th, ph, a, b

    def evaluate_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        th, ph, a, b = components(taus)
        nx = np.sin(th) * np.cos(ph)
        ny = np.sin(th) * np.sin(ph)
        nz = np.cos(th)
        h = np.zeros((taus.size, 2, 2), dtype=complex)
        h[:, 0, 0] = a + b * nz
        h[:, 1, 1] = a - b * nz
        h[:, 0, 1] = b * (nx - 1j * ny)
        h[:, 1, 0] = b * (nx + 1j * ny)
        return h

    derivative_batch = None
    analytic = None
    if curve.has_analytic_derivatives:

        def derivative_batch(taus):
            taus = np.atleast_1d(np.asarray(taus, dtype=float))
            th, ph, a, b = components(taus)
            td, pd = curve.theta.d1(taus), curve.phi.d1(taus)
            ad, bd = curve.A.d1(taus), curve.B.d1(taus)
            sin_th, cos_th = np.sin(th), np.cos(th)
            sin_ph, cos_ph = np.sin(ph), np.cos(ph)
            nx, ny, nz = sin_th * cos_ph, sin_th * sin_ph, cos_th
            dnx = td * cos_th * cos_ph - pd * sin_th * sin_ph
            dny = td * cos_th * sin_ph + pd * sin_th * cos_ph
            dnz = -td * sin_th
            bx = bd * nx + b * dnx
            by = bd * ny + b * dny
            bz = bd * nz + b * dnz
            dh = np.zeros((taus.size, 2, 2), dtype=complex)
            dh[:, 0, 0] = ad + bz
            dh[:, 1, 1] = ad - bz
            dh[:, 0, 1] = bx - 1j * by
            dh[:, 1, 0] = bx + 1j * by
            return dh

        def frame_at(taus):
            taus = np.atleast_1d(np.asarray(taus, dtype=float))
            th, ph, a, b = components(taus)
            energies = np.stack([a - b, a + b], axis=1)
            half = 0.5 * th
            c, s = np.cos(half), np.sin(half)
            eip = np.exp(1j * ph)
            vectors = np.zeros((taus.size, 2, 2), dtype=complex)
            vectors[:, 0, 0] = s
            vectors[:, 1, 0] = -c * eip
            vectors[:, 0, 1] = c
            vectors[:, 1, 1] = s * eip
            td, pd = curve.theta.d1(taus), curve.phi.d1(taus)
            g_mp = 0.5 * (pd * np.sin(th) - 1j * td)  # gamma_{-+}
            gamma = np.zeros((taus.size, 2, 2), dtype=complex)
            gamma[:, 1, 1] = -pd * s * s  # gamma_{++}
            gamma[:, 0, 0] = -pd * c * c  # gamma_{--}
            gamma[:, 0, 1] = g_mp
            gamma[:, 1, 0] = np.conjugate(g_mp)
            return energies, vectors, gamma

        delta_at = None
        if all(s.deriv2 is not None for s in (curve.theta, curve.phi)):

            def delta_at(taus):
                taus = np.atleast_1d(np.asarray(taus, dtype=float))
                d = bloch_qgp(curve, taus)
                delta = np.zeros((taus.size, 2, 2))
                delta[:, 1, 0] = d
                delta[:, 0, 1] = -d
                return delta

        analytic = AnalyticFrame(frame_at=frame_at, delta_at=delta_at)

    return HamiltonianModel(
        dim=2,
        evaluate=lambda tau: evaluate_batch(np.array([tau]))[0],
        derivative=(
            (lambda tau: derivative_batch(np.array([tau]))[0])
            if derivative_batch is not None
            else None
        ),
        analytic_frame=analytic,
        label="bloch_curve",
        evaluate_batch=evaluate_batch,
        derivative_batch=derivative_batch,
    )


# ---------------------------------------------------------------------------
# Generic N-level Fourier model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierTerm:
    matrix: np.ndarray
    omega: float
    amplitude: float
    phase: float = 0.0


def fourier_nlevel(dim: int, terms: list[FourierTerm]) -> HamiltonianModel:
    """h(tau) = sum_k amplitude_k * cos(omega_k tau + phase_k) * H_k.

    Real combinations of Hermitian coefficient matrices, so Hermiticity is
    guaranteed term by term.  An empty term list is the zero Hamiltonian.
    """
    mats = []
    for i, term in enumerate(terms):
        m = np.asarray(term.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise InvalidParamsError(f"term {i} has shape {m.shape}, expected {(dim, dim)}")
        if linalg.hermiticity_defect(m) > linalg.default_hermiticity_tol(m):
            raise NotHermitianError(f"fourier term {i} is not Hermitian")
        mats.append(0.5 * (m + linalg.dagger(m)))
    stack = np.stack(mats) if mats else np.zeros((0, dim, dim), dtype=complex)
    omegas = np.array([t.omega for t in terms], dtype=float)
    amps = np.array([t.amplitude for t in terms], dtype=float)
    phases = np.array([t.phase for t in terms], dtype=float)

    def evaluate_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        if not len(terms):
            return np.zeros((taus.size, dim, dim), dtype=complex)
        weights = amps * np.cos(np.outer(taus, omegas) + phases)
        return np.einsum("kt,tij->kij", weights, stack)

    def derivative_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        if not len(terms):
            return np.zeros((taus.size, dim, dim), dtype=complex)
        weights = -amps * omegas * np.sin(np.outer(taus, omegas) + phases)
        return np.einsum("kt,tij->kij", weights, stack)

    return HamiltonianModel(
        dim=dim,
        evaluate=lambda tau: evaluate_batch(np.array([tau]))[0],
        derivative=lambda tau: derivative_batch(np.array([tau]))[0],
        label=f"fourier({len(terms)} terms, dim={dim})",
        evaluate_batch=evaluate_batch,
        derivative_batch=derivative_batch,
    )


def constant_model(h: np.ndarray, label: str = "constant") -> HamiltonianModel:
    """Time-independent Hamiltonian as a model (handy for tests and the CLI)."""
    h = linalg.require_hermitian(np.asarray(h, dtype=complex))
    dim = h.shape[0]

    def evaluate_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        return np.broadcast_to(h, (taus.size, dim, dim)).copy()

    def derivative_batch(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        return np.zeros((taus.size, dim, dim), dtype=complex)

    return HamiltonianModel(
        dim=dim,
        evaluate=lambda tau: h.copy(),
        derivative=lambda tau: np.zeros_like(h),
        label=label,
        evaluate_batch=evaluate_batch,
        derivative_batch=derivative_batch,
    )
