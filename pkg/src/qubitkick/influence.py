"""Forward/backward path functionals and the qubit-trace phases they induce.

Tracing the two-level system out of a doubled (forward/backward) path
integral leaves an overlap <psi| U(X) U(X')^dag |psi>, where U depends on
the oscillator path only through three scalar functionals per path.  This
module computes those functionals by quadrature, evaluates the weak-coupling
phases of the overlap, and provides a brute-force time-ordered propagator so
the expansion can be checked against the exact product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InvalidParameterError, QubitState

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class PathPair:
    """Forward (q, p) and backward (q_b, p_b) paths on a shared uniform grid."""

    tau: np.ndarray
    q: np.ndarray
    p: np.ndarray
    q_b: np.ndarray
    p_b: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("tau", "q", "p", "q_b", "p_b"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            arrays[name] = arr
        n = arrays["tau"].size
        if n < 2:
            raise InvalidParameterError("path grid needs at least 2 points")
        for name, arr in arrays.items():
            if arr.shape != (n,):
                raise InvalidParameterError(f"{name} must share the grid length {n}, got shape {arr.shape}")
        steps = np.diff(arrays["tau"])
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise InvalidParameterError("tau grid must be uniform")

    @property
    def dt(self) -> float:
        return float(self.tau[1] - self.tau[0])


@dataclass(frozen=True)
class PathFunctionals:
    """Integrated drive components for both paths and their combinations."""

    F_x: float
    F_y: float
    F_z: float
    Fp_x: float
    Fp_y: float
    Fp_z: float
    W_x: float
    W_y: float
    W_z: float


@dataclass(frozen=True)
class InfluencePhases:
    """Weak-coupling exponents of the qubit-trace overlap.

    `fluctuation_exponent` is the (non-positive) real part of log F; the
    overlap magnitude is exp(fluctuation_exponent).  `force_phase` is the
    first-order imaginary part responsible for the deterministic force;
    `dissipative_phase` is the second-order imaginary part.  The dissipative
    part is diagnostic only and never fed into the trajectory dynamics.
    """

    fluctuation_exponent: float
    force_phase: float
    dissipative_phase: float


def drive_components(tau: np.ndarray, q: np.ndarray, p: np.ndarray):
    """Rotating-frame drive pair f_x = q cos(tau) - p sin(tau), f_y = q sin(tau) + p cos(tau)."""
    c, s = np.cos(tau), np.sin(tau)
    return q * c - p * s, q * s + p * c


def _cumtrapz(f: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty_like(f)
    out[0] = 0.0
    np.cumsum((f[1:] + f[:-1]) * (0.5 * dt), out=out[1:])
    return out


def _single_path_functionals(tau: np.ndarray, q: np.ndarray, p: np.ndarray):
    f_x, f_y = drive_components(tau, q, p)
    dt = float(tau[1] - tau[0])
    F_x = float(np.trapezoid(f_x, dx=dt))
    F_y = float(np.trapezoid(f_y, dx=dt))
    # ordered double integral of f_x(t) f_y(t') - f_x(t') f_y(t): running
    # inner trapezoid, then an outer trapezoid (second-order accurate)
    I_x = _cumtrapz(f_x, dt)
    I_y = _cumtrapz(f_y, dt)
    F_z = float(np.trapezoid(f_x * I_y - f_y * I_x, dx=dt))
    return F_x, F_y, F_z


def path_functionals(pair: PathPair) -> PathFunctionals:
    """Quadrature evaluation of the six path functionals and the W combinations.

    W_z pairs the ordered double integrals as (F_z - F'_z); that relative
    sign is fixed by the exact operator product U(X) U(X')^dag, which the
    convergence checks below validate to third order in g.
    """
    F_x, F_y, F_z = _single_path_functionals(pair.tau, pair.q, pair.p)
    Fp_x, Fp_y, Fp_z = _single_path_functionals(pair.tau, pair.q_b, pair.p_b)
    W_x = Fp_x - F_x
    W_y = F_y - Fp_y
    W_z = F_z - Fp_z + 2.0 * Fp_x * F_y - Fp_x * Fp_y - F_x * F_y
    return PathFunctionals(F_x, F_y, F_z, Fp_x, Fp_y, Fp_z, W_x, W_y, W_z)


def influence_phases(f: PathFunctionals, state: QubitState, g: float, n_qubits: int = 1) -> InfluencePhases:
    """Evaluate the weak-coupling phases for n identical non-interacting qubits."""
    p, phi = state.p, state.phi
    k = 2.0 * p * (1.0 - p)
    a = 1.0 - k * (1.0 + math.cos(2.0 * phi))
    b = 1.0 - k * (1.0 - math.cos(2.0 * phi))
    c = -k * math.sin(2.0 * phi)
    quad = a * f.W_x**2 + b * f.W_y**2 + 2.0 * c * f.W_x * f.W_y
    fluct = -0.5 * g * g * quad * n_qubits
    linear = 2.0 * g * state.eta_f * (f.W_x * math.cos(phi) + f.W_y * math.sin(phi)) * n_qubits
    dissip = g * g * (1.0 - 2.0 * p) * (f.W_z - f.W_x * f.W_y) * n_qubits
    return InfluencePhases(fluctuation_exponent=fluct, force_phase=linear, dissipative_phase=dissip)


def influence_closed_form(f: PathFunctionals, state: QubitState, g: float) -> complex:
    """Exact trigonometric overlap <psi| e^{igW_x sx} e^{igW_y sy} e^{ig^2 W_z sz} |psi>.

    Being a unit-vector overlap under a product of unitaries, its modulus
    never exceeds 1.
    """
    p, phi = state.p, state.phi
    eta = state.eta_f
    cx, sx = math.cos(g * f.W_x), math.sin(g * f.W_x)
    cy, sy = math.cos(g * f.W_y), math.sin(g * f.W_y)
    ez = complex(math.cos(g * g * f.W_z), math.sin(g * g * f.W_z))
    eiphi = complex(math.cos(phi), math.sin(phi))
    upper = ez * (
        (1.0 - p) * (cy * cx - 1j * sy * sx)
        - eta * (sy * cx - 1j * cy * sx) / eiphi
    )
    lower = (1.0 / ez) * (
        p * (cy * cx + 1j * sy * sx)
        + eta * (sy * cx + 1j * cy * sx) * eiphi
    )
    return complex(upper + lower)


def _pauli_rotation(theta_x: float, theta_y: float) -> np.ndarray:
    """exp(-i (theta_x sx + theta_y sy)) via the half-angle identity."""
    theta = math.hypot(theta_x, theta_y)
    if theta == 0.0:
        return IDENTITY2.copy()
    nx, ny = theta_x / theta, theta_y / theta
    return math.cos(theta) * IDENTITY2 - 1j * math.sin(theta) * (nx * SIGMA_X + ny * SIGMA_Y)


def pauli_exponential(coef: float, sigma: np.ndarray) -> np.ndarray:
    """exp(i coef sigma) for a Pauli matrix sigma."""
    return math.cos(coef) * IDENTITY2 + 1j * math.sin(coef) * sigma


def qubit_propagator_exact(q, p, T: float, g: float, substeps: int) -> np.ndarray:
    """Time-ordered product of per-step rotations generated by g (f_x sx - f_y sy).

    `q` and `p` may be callables of rescaled time (evaluated exactly at
    substep midpoints) or arrays sampled on a uniform grid over [0, T]
    (linearly interpolated to midpoints).  With arrays, `substeps` must be
    at least the number of grid intervals.  The result is unitary to
    rounding because each factor is an exact 2x2 rotation.
    """
    if substeps < 1:
        raise InvalidParameterError("substeps must be >= 1")
    h = T / substeps
    t_mid = (np.arange(substeps) + 0.5) * h
    if callable(q) and callable(p):
        q_mid = np.asarray(q(t_mid), dtype=float)
        p_mid = np.asarray(p(t_mid), dtype=float)
    else:
        q_arr = np.asarray(q, dtype=float)
        p_arr = np.asarray(p, dtype=float)
        if substeps < q_arr.size - 1:
            raise InvalidParameterError("substeps must be >= the number of grid intervals")
        grid = np.linspace(0.0, T, q_arr.size)
        q_mid = np.interp(t_mid, grid, q_arr)
        p_mid = np.interp(t_mid, grid, p_arr)
    f_x, f_y = drive_components(t_mid, q_mid, p_mid)
    U = IDENTITY2.copy()
    gh = g * h
    for k in range(substeps):
        U = _pauli_rotation(gh * f_x[k], -gh * f_y[k]) @ U
    return U


def _as_path_callable(tau: np.ndarray, arr: np.ndarray):
    return lambda t: np.interp(t, tau, arr)


def _check_g_values(g_values) -> np.ndarray:
    g = np.asarray(sorted(g_values, reverse=True), dtype=float)
    if g.size < 3:
        raise InvalidParameterError("need at least 3 coupling values for a slope fit")
    if np.any(g <= 0.0) or np.any(g > 0.2):
        raise InvalidParameterError("coupling values must lie in (0, 0.2]")
    return g


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def bch_product(f: PathFunctionals, g: float) -> np.ndarray:
    """Second-order split e^{igW_x sx} e^{igW_y sy} e^{ig^2 W_z sz}."""
    return (
        pauli_exponential(g * f.W_x, SIGMA_X)
        @ pauli_exponential(g * f.W_y, SIGMA_Y)
        @ pauli_exponential(g * g * f.W_z, SIGMA_Z)
    )


def verify_bch(pair: PathPair, state: QubitState, g_values, substeps: int | None = None) -> dict:
    """Frobenius error of the split product against U(X) U(X')^dag across g.

    Returns {"g": [...], "error": [...], "slope": float}; the slope of the
    log-log fit should approach 3 (third-order remainder).
    """
    g_values = _check_g_values(g_values)
    if substeps is None:
        substeps = pair.tau.size - 1
    f = path_functionals(pair)
    T = float(pair.tau[-1])
    errors = []
    for g in g_values:
        U_f = qubit_propagator_exact(pair.q, pair.p, T, g, substeps)
        U_b = qubit_propagator_exact(pair.q_b, pair.p_b, T, g, substeps)
        exact = U_f @ U_b.conj().T
        errors.append(float(np.linalg.norm(exact - bch_product(f, g))))
    return {
        "g": g_values.tolist(),
        "error": errors,
        "slope": _loglog_slope(g_values, np.asarray(errors)),
    }


def verify_influence_expansion(pair: PathPair, state: QubitState, g_values, substeps: int | None = None) -> dict:
    """Error of exp(fluctuation + i force phases) against the exact overlap.

    The exact overlap is <psi| U(X) U(X')^dag |psi>, the same operator
    ordering the split product approximates; the remainder is O(g^3).
    """
    g_values = _check_g_values(g_values)
    if substeps is None:
        substeps = pair.tau.size - 1
    f = path_functionals(pair)
    T = float(pair.tau[-1])
    psi = np.array(state.amplitudes(), dtype=complex)
    errors = []
    for g in g_values:
        U_f = qubit_propagator_exact(pair.q, pair.p, T, g, substeps)
        U_b = qubit_propagator_exact(pair.q_b, pair.p_b, T, g, substeps)
        exact = complex(psi.conj() @ (U_f @ U_b.conj().T) @ psi)
        ph = influence_phases(f, state, g)
        approx = np.exp(ph.fluctuation_exponent + 1j * (ph.force_phase + ph.dissipative_phase))
        errors.append(abs(exact - approx))
    return {
        "g": g_values.tolist(),
        "error": errors,
        "slope": _loglog_slope(g_values, np.asarray(errors)),
    }
