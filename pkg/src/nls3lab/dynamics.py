"""Right-hand sides, integrators and conserved quantities for the four equation forms.

``original``/``renormalized`` are advanced with RK4 in integrating-factor form: the
diagonal dispersive phase is applied exactly and only the cubic term is sampled
at the stages. ``v_form``/``w_form`` already live in the interaction picture and
use classical RK4 with exact stage times.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .errors import ContractError, StepFailure
from .params import Beta, ModelParams
from .parallel import blocks, ordered_map
from .propagators import dispersion, gauge_J_array, propagate_array
from .spectral import (Rep, SpectralState, cubic_array, grid_for, make_state, mass_array,
                       quartic_mean_array)


class EquationKind(str, Enum):
    ORIGINAL = "original"
    RENORMALIZED = "renormalized"
    V_FORM = "v_form"
    W_FORM = "w_form"


KIND_REP = {
    EquationKind.ORIGINAL: Rep.U,
    EquationKind.RENORMALIZED: Rep.U_GAUGED,
    EquationKind.V_FORM: Rep.V,
    EquationKind.W_FORM: Rep.W,
}
INTERACTION_KINDS = (EquationKind.V_FORM, EquationKind.W_FORM)


def _check(kind: EquationKind, params: ModelParams) -> EquationKind:
    kind = EquationKind(kind)
    if kind in INTERACTION_KINDS:
        params.require_nonresonant()
    return kind


# ---------------------------------------------------------------------------
# array-level right-hand sides (leading axes are ensemble axes)


def gamma_sum_fft(z: np.ndarray) -> np.ndarray:
    """Non-resonant Gamma-sum of z via transforms: renormalized cubic plus |z_n|^2 z_n."""
    return cubic_array(z, renormalized=True) + (z.real ** 2 + z.imag ** 2) * z


def w_interaction_sum(w: np.ndarray, t, beta: Beta) -> np.ndarray:
    """A_n(t) = sum over Gamma(n) of exp(i t theta) w_{n1} conj(w_{n2}) w_{n3}.

    Folding the phases back gives A = J_t S(-t) [Gamma-sum of z], z = S(t) J_t^{-1} w.
    """
    t = np.asarray(t, dtype=float)
    phase = np.exp(1j * t[..., None] * (w.real ** 2 + w.imag ** 2))
    z = propagate_array(phase * w, t, beta)
    return np.conj(phase) * propagate_array(gamma_sum_fft(z), -t, beta)


def xi_array(w: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Xi(n) = 2 Im(A_n conj(w_n))."""
    return 2.0 * (A.imag * w.real - A.real * w.imag)


def rhs_array(kind: EquationKind, coeffs: np.ndarray, t, beta: Beta) -> np.ndarray:
    kind = EquationKind(kind)
    t = np.asarray(t, dtype=float)
    if kind is EquationKind.ORIGINAL or kind is EquationKind.RENORMALIZED:
        N = (coeffs.shape[-1] - 1) // 2
        lin = -1j * dispersion(N, beta) * coeffs
        return lin - 1j * cubic_array(coeffs, kind is EquationKind.RENORMALIZED)
    if kind is EquationKind.V_FORM:
        u = propagate_array(coeffs, t, beta)
        return propagate_array(-1j * cubic_array(u, renormalized=True), -t, beta)
    A = w_interaction_sum(coeffs, t, beta)
    return -1j * A - 1j * t[..., None] * coeffs * xi_array(coeffs, A)


def rhs(kind: EquationKind, state: SpectralState, t: float, params: ModelParams) -> SpectralState:
    kind = _check(kind, params)
    if state.rep is not KIND_REP[kind]:
        raise ContractError(f"{kind.value} expects rep {KIND_REP[kind].value!r}, got {state.rep.value!r}")
    if kind in INTERACTION_KINDS and not math.isclose(state.time, t, rel_tol=0, abs_tol=1e-12):
        raise ContractError(f"state time {state.time} differs from evaluation time {t}")
    return state.replace(coeffs=rhs_array(kind, state.coeffs, t, params.beta))


# ---------------------------------------------------------------------------
# steppers


def _if_rk4(coeffs, dt, beta, renormalized):
    N = (coeffs.shape[-1] - 1) // 2
    om = dispersion(N, beta)
    E = np.exp(-1j * dt * om)
    E2 = np.exp(-0.5j * dt * om)

    def nl(u):
        return -1j * cubic_array(u, renormalized)

    k1 = nl(coeffs)
    k2 = nl(E2 * (coeffs + 0.5 * dt * k1))
    k3 = nl(E2 * coeffs + 0.5 * dt * k2)
    k4 = nl(E * coeffs + dt * E2 * k3)
    return E * coeffs + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def _rk4(kind, coeffs, t, dt, beta):
    k1 = rhs_array(kind, coeffs, t, beta)
    k2 = rhs_array(kind, coeffs + 0.5 * dt * k1, t + 0.5 * dt, beta)
    k3 = rhs_array(kind, coeffs + 0.5 * dt * k2, t + 0.5 * dt, beta)
    k4 = rhs_array(kind, coeffs + dt * k3, t + dt, beta)
    return coeffs + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_array(kind: EquationKind, coeffs: np.ndarray, t: float, dt: float, beta: Beta) -> np.ndarray:
    kind = EquationKind(kind)
    # overflow is reported below as a StepFailure
    with np.errstate(over="ignore", invalid="ignore"):
        if kind is EquationKind.ORIGINAL:
            out = _if_rk4(coeffs, dt, beta, False)
        elif kind is EquationKind.RENORMALIZED:
            out = _if_rk4(coeffs, dt, beta, True)
        else:
            out = _rk4(kind, coeffs, t, dt, beta)
    bad = ~np.isfinite(out)
    if bad.any():
        N = (coeffs.shape[-1] - 1) // 2
        mode = int(np.argwhere(bad)[0][-1]) - N
        raise StepFailure(f"non-finite coefficient at mode {mode} after step t={t} dt={dt}", mode)
    return out


def step(kind: EquationKind, state: SpectralState, t: float, dt: float, params: ModelParams) -> SpectralState:
    kind = _check(kind, params)
    if not dt > 0:
        raise ContractError("dt must be positive")
    if state.rep is not KIND_REP[kind]:
        raise ContractError(f"{kind.value} expects rep {KIND_REP[kind].value!r}, got {state.rep.value!r}")
    return state.replace(coeffs=step_array(kind, state.coeffs, t, dt, params.beta), time=t + dt)


def step_plan(t0: float, t_final: float, dt: float) -> tuple[int, float]:
    """Number of steps and the (slightly shrunk) step that lands exactly on t_final."""
    if t_final < t0:
        raise ContractError(f"t_final={t_final} precedes the initial time {t0}; only forward evolution is supported")
    if not dt > 0:
        raise ContractError("dt must be positive")
    span = t_final - t0
    if span == 0:
        return 0, dt
    n = max(1, math.ceil(span / dt - 1e-9))
    return n, span / n


def integrate_array(kind: EquationKind, U0: np.ndarray, t0: float, t_final: float, dt: float, beta: Beta,
                    stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Advance stacked initial data; returns (times, snapshots[n_snap, ..., 2N+1])."""
    if stride < 1:
        raise ContractError("snapshot_stride must be >= 1")
    n, h = step_plan(t0, t_final, dt)
    times = [t0]
    snaps = [np.array(U0, dtype=np.complex128)]
    u = snaps[0]
    for k in range(1, n + 1):
        u = step_array(kind, u, t0 + (k - 1) * h, h, beta)
        if k % stride == 0 or k == n:
            times.append(t0 + k * h if k < n else t_final)
            snaps.append(u)
    return np.array(times), np.stack(snaps)


def evolve_ensemble(kind: EquationKind, U0: np.ndarray, t_final: float, dt: float, params: ModelParams,
                    stride: int = 1, t0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Block-parallel integration of a (B, 2N+1) ensemble; output shape (n_snap, B, 2N+1)."""
    kind = _check(kind, params)
    U0 = np.asarray(U0, dtype=np.complex128)
    parts = ordered_map(lambda sl: integrate_array(kind, U0[sl], t0, t_final, dt, params.beta, stride),
                        blocks(U0.shape[0]))
    return parts[0][0], np.concatenate([p[1] for p in parts], axis=1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    params: ModelParams
    kind: EquationKind
    times: np.ndarray
    coeffs: np.ndarray  # (n_snap, 2N+1)
    dt: float

    @property
    def N(self) -> int:
        return (self.coeffs.shape[-1] - 1) // 2

    @property
    def rep(self) -> Rep:
        return KIND_REP[self.kind]

    @property
    def states(self) -> list[SpectralState]:
        return [self.state(k) for k in range(len(self.times))]

    def state(self, k: int) -> SpectralState:
        return make_state(self.N, self.coeffs[k], self.rep, float(self.times[k]))

    @property
    def final(self) -> SpectralState:
        return self.state(len(self.times) - 1)


def evolve(kind: EquationKind, u0: SpectralState, t_final: float, dt: float, params: ModelParams,
           snapshot_stride: int = 1) -> Trajectory:
    """Integrate from the state's own time tag up to ``t_final``."""
    kind = _check(kind, params)
    if u0.rep is not KIND_REP[kind]:
        raise ContractError(f"{kind.value} expects rep {KIND_REP[kind].value!r}, got {u0.rep.value!r}")
    n, h = step_plan(u0.time, t_final, dt)
    times, snaps = integrate_array(kind, u0.coeffs, u0.time, t_final, dt, params.beta, snapshot_stride)
    return Trajectory(params, kind, times, snaps, h)


def conserved_arrays(coeffs: np.ndarray, beta: Beta) -> tuple[np.ndarray, np.ndarray]:
    N = (coeffs.shape[-1] - 1) // 2
    n = np.arange(-N, N + 1, dtype=float)
    a = coeffs.real ** 2 + coeffs.imag ** 2
    M = np.sum(a, axis=-1)
    H = np.sum((-0.5 * n ** 3 + 0.5 * float(beta) * n ** 2) * a, axis=-1) - 0.25 * quartic_mean_array(coeffs)
    return M, H


def conserved_quantities(state: SpectralState, params: ModelParams) -> tuple[float, float]:
    """Mass and Hamiltonian of a physical-variable state."""
    if state.rep is not Rep.U:
        raise ContractError(f"conserved quantities are defined on rep 'u', got {state.rep.value!r}")
    M, H = conserved_arrays(state.coeffs, params.beta)
    return float(M), float(H)


def to_physical_rep(kind: EquationKind, coeffs: np.ndarray, t, beta: Beta) -> np.ndarray:
    """Map coefficients of the given equation form back to the original unknown u."""
    from .propagators import gauge_G_array

    kind = EquationKind(kind)
    t = np.asarray(t, dtype=float)
    if kind is EquationKind.ORIGINAL:
        return coeffs
    if kind is EquationKind.V_FORM:
        coeffs = propagate_array(coeffs, t, beta)
    elif kind is EquationKind.W_FORM:
        coeffs = gauge_J_array(propagate_array(coeffs, t, beta), t, -1.0)
    return gauge_G_array(coeffs, t, -1.0)


def from_physical_rep(kind: EquationKind, coeffs: np.ndarray, t, beta: Beta) -> np.ndarray:
    """Inverse of :func:`to_physical_rep`: u -> G_t u, S(-t) G_t u or S(-t) J_t G_t u."""
    from .propagators import gauge_G_array

    kind = EquationKind(kind)
    t = np.asarray(t, dtype=float)
    if kind is EquationKind.ORIGINAL:
        return coeffs
    coeffs = gauge_G_array(coeffs, t, 1.0)
    if kind is EquationKind.W_FORM:
        coeffs = gauge_J_array(coeffs, t, 1.0)
    if kind in INTERACTION_KINDS:
        coeffs = propagate_array(coeffs, -t, beta)
    return coeffs


def conjugation_defect(kind: EquationKind, U0: np.ndarray, t: float, dt: float, params: ModelParams) -> np.ndarray:
    """H^0 distance between the original flow and the gauge/propagator conjugate of ``kind``'s flow.

    Both flows start from the same coefficients (all gauges are the identity at time 0).
    """
    kind = _check(kind, params)
    U0 = np.atleast_2d(np.asarray(U0, dtype=np.complex128))
    _, ref = evolve_ensemble(EquationKind.ORIGINAL, U0, t, dt, params, stride=10 ** 9)
    _, other = evolve_ensemble(kind, U0, t, dt, params, stride=10 ** 9)
    diff = ref[-1] - to_physical_rep(kind, other[-1], t, params.beta)
    return np.sqrt(mass_array(diff))


__all__ = [
    "EquationKind", "Trajectory", "rhs", "step", "evolve", "evolve_ensemble", "conserved_quantities", "from_physical_rep", "conjugation_defect",
    "rhs_array", "step_array", "integrate_array", "to_physical_rep", "w_interaction_sum", "xi_array",
    "mass_array", "grid_for",
]
