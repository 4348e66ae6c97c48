"""Normal-form (integration by parts in time) decompositions of the v- and w-equations.

Every time integral is evaluated by composite Simpson quadrature over the stored
trajectory snapshots. The nonlinear integrals are also computed directly by
quadrature of the right-hand side, and the residual between the two routes is
reported. At finite N exchanging the time integral with the Gamma-sum is always
allowed, so the identities are exact up to quadrature and integrator error.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
import scipy.integrate
import scipy.sparse

from .dynamics import EquationKind, Trajectory, evolve
from .errors import CapacityError, ContractError, QuadratureError
from .params import Beta, ModelParams
from .resonance import beta_key, gamma_index
from .spectral import Rep, SpectralState, make_state, sobolev_norm_array

MIN_SNAPSHOTS = 9
# the w-side decomposition enumerates nested Gamma-sums at every time node
W_CAPACITY = 16
_CHUNK = 64


@dataclass(frozen=True)
class _GammaTable:
    N: int
    n: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    n3: np.ndarray
    phi: np.ndarray
    incidence: scipy.sparse.csr_matrix

    def gsum(self, vals: np.ndarray) -> np.ndarray:
        """Bin tuple values (K, T) by output mode -> (K, 2N+1)."""
        return np.asarray(self.incidence @ vals.T).T


@lru_cache(maxsize=16)
def _table(N: int, key) -> _GammaTable:
    from fractions import Fraction

    beta = Fraction(key[1], key[2]) if key[0] == "q" else key[1]
    n, n1, n2, n3, ph = gamma_index(N, beta)
    T = n.shape[0]
    inc = scipy.sparse.csr_matrix((np.ones(T), (n + N, np.arange(T))), shape=(2 * N + 1, T))
    return _GammaTable(N, n + N, n1 + N, n2 + N, n3 + N, ph, inc)


def gamma_table(N: int, beta: Beta) -> _GammaTable:
    return _table(int(N), beta_key(beta))


def simpson(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    return scipy.integrate.simpson(values, x=times, axis=0)


def _window(traj: Trajectory, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Snapshots on [0, t]; requires uniform spacing and at least MIN_SNAPSHOTS nodes."""
    times = traj.times
    if abs(times[0]) > 1e-12:
        raise ContractError("normal-form decompositions start from time 0")
    k = int(np.searchsorted(times, t + 1e-12 * max(1.0, t)))
    if k == 0 or not math.isclose(times[k - 1], t, rel_tol=1e-9, abs_tol=1e-12):
        raise ContractError(f"t={t} is not a snapshot time of the trajectory")
    times, coeffs = times[:k], traj.coeffs[:k]
    if len(times) < MIN_SNAPSHOTS:
        raise QuadratureError(f"{len(times)} snapshots on [0, {t}]; Simpson quadrature needs at least {MIN_SNAPSHOTS}")
    h = np.diff(times)
    if np.max(np.abs(h - h[0])) > 1e-9 * h[0]:
        raise QuadratureError("snapshot spacing is not uniform")
    return times, coeffs


def _chunks(K: int):
    for i in range(0, K, _CHUNK):
        yield slice(i, min(i + _CHUNK, K))


# ---------------------------------------------------------------------------
# Xi


def xi_direct(coeffs: np.ndarray, t, beta: Beta) -> np.ndarray:
    """Xi(n, t) for every mode by direct Gamma enumeration; ``coeffs`` may carry leading axes."""
    g = gamma_table((coeffs.shape[-1] - 1) // 2, beta)
    W = np.atleast_2d(coeffs)
    tt = np.broadcast_to(np.asarray(t, dtype=float), W.shape[:1])[:, None]
    a = W.real ** 2 + W.imag ** 2
    theta = g.phi + (-a[:, g.n] + a[:, g.n1] - a[:, g.n2] + a[:, g.n3])
    A = g.gsum(np.exp(1j * tt * theta) * W[:, g.n1] * np.conj(W[:, g.n2]) * W[:, g.n3])
    out = 2.0 * np.imag(A * np.conj(W))
    return out.reshape(coeffs.shape)


def xi(state: SpectralState, n: int, t: float, beta: Beta | None = None, params: ModelParams | None = None) -> float:
    if state.rep is not Rep.W:
        raise ContractError(f"Xi is defined on w-states, got rep {state.rep.value!r}")
    idx = state.grid.index(n)
    if beta is None:
        beta = (params or ModelParams()).beta
    return float(xi_direct(state.coeffs, t, beta)[idx])


# ---------------------------------------------------------------------------
# v-equation


@dataclass(frozen=True, eq=False)
class NormalFormTermsV:
    boundary_t: SpectralState
    boundary_0: SpectralState
    quintic_II: SpectralState
    quintic_III: SpectralState
    resonant_integral: SpectralState
    nonres_integral: SpectralState
    residual: float

    def terms(self) -> dict[str, SpectralState]:
        return {"I_t": self.boundary_t, "I_0": self.boundary_0, "II": self.quintic_II,
                "III": self.quintic_III, "R0": self.resonant_integral}

    @property
    def normal_form_sum(self) -> np.ndarray:
        return (self.boundary_t.coeffs - self.boundary_0.coeffs + self.quintic_II.coeffs
                + self.quintic_III.coeffs)


def _v_integrands(V: np.ndarray, tk: np.ndarray, g: _GammaTable) -> dict[str, np.ndarray]:
    t = tk[:, None]
    V1, V2c, V3 = V[:, g.n1], np.conj(V[:, g.n2]), V[:, g.n3]
    E = np.exp(1j * t * g.phi)
    Ep = E / g.phi
    P3 = V1 * V2c * V3
    N0 = -1j * g.gsum(E * P3)
    R0 = 1j * (V.real ** 2 + V.imag ** 2) * V
    dV = N0 + R0
    return {
        "N0": N0,
        "R0": R0,
        "I": -g.gsum(Ep * P3),
        "II": 2.0 * g.gsum(Ep * dV[:, g.n1] * V2c * V3),
        "III": g.gsum(Ep * V1 * np.conj(dV[:, g.n2]) * V3),
    }


def _evaluate(fn, coeffs, times, g) -> dict[str, np.ndarray]:
    parts = [fn(coeffs[sl], times[sl], g) for sl in _chunks(len(times))]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def nf_decompose_v(traj: Trajectory, t: float, params: ModelParams | None = None) -> NormalFormTermsV:
    params = params or traj.params
    if EquationKind(traj.kind) is not EquationKind.V_FORM:
        raise ContractError("nf_decompose_v needs a v_form trajectory")
    params.require_nonresonant()
    N = traj.N

    def st(c):
        return make_state(N, c, Rep.V, t)

    if t == 0:
        z = st(np.zeros(2 * N + 1, complex))
        return NormalFormTermsV(z, z, z, z, z, z, 0.0)
    times, coeffs = _window(traj, t)
    vals = _evaluate(_v_integrands, coeffs, times, gamma_table(N, params.beta))
    q = {k: simpson(vals[k], times) for k in ("N0", "R0", "II", "III")}
    nf = vals["I"][-1] - vals["I"][0] + q["II"] + q["III"]
    res = float(sobolev_norm_array(q["N0"] - nf, 0.0))
    return NormalFormTermsV(st(vals["I"][-1]), st(vals["I"][0]), st(q["II"]), st(q["III"]),
                            st(q["R0"]), st(q["N0"]), res)


# ---------------------------------------------------------------------------
# w-equation

W1_TERMS = ("I_t", "I_0", "II", "III_1", "III_2", "IV_1", "IV_2")
W2_TERMS = ("tI", "tII", "tIII", "tIV_0", "tIV_1", "tIV_2", "tIV_3")


@dataclass(frozen=True, eq=False)
class NormalFormTermsW:
    terms: dict[str, SpectralState]
    nonres_integral_1: SpectralState
    nonres_integral_2: SpectralState
    residual_N1: float
    residual_N2: float

    @property
    def sum_N1(self) -> np.ndarray:
        c = {k: self.terms[k].coeffs for k in W1_TERMS}
        return c["I_t"] - c["I_0"] + c["II"] + c["III_1"] + c["III_2"] + c["IV_1"] + c["IV_2"]

    @property
    def sum_N2(self) -> np.ndarray:
        return sum(self.terms[k].coeffs for k in W2_TERMS)


def _w_integrands(W: np.ndarray, tk: np.ndarray, g: _GammaTable) -> dict[str, np.ndarray]:
    t = tk[:, None]
    a = W.real ** 2 + W.imag ** 2
    W1, W2c, W3 = W[:, g.n1], np.conj(W[:, g.n2]), W[:, g.n3]
    psi = -a[:, g.n] + a[:, g.n1] - a[:, g.n2] + a[:, g.n3]
    E = np.exp(1j * t * (g.phi + psi))
    Ep = E / g.phi
    P3 = W1 * W2c * W3
    A = g.gsum(E * P3)
    Xi = 2.0 * np.imag(A * np.conj(W))
    N1 = -1j * A
    N2 = -1j * t * W * Xi
    dW = N1 + N2
    dpsi = -Xi[:, g.n] + Xi[:, g.n1] - Xi[:, g.n2] + Xi[:, g.n3]
    weight = psi + t * dpsi
    B = g.gsum(Ep * P3)
    Wc = np.conj(W)
    ReD = np.real(B * Wc)
    return {
        "N1": N1,
        "N2": N2,
        "I": -B,
        "II": 1j * g.gsum(Ep * weight * P3),
        "III_1": -2j * g.gsum(Ep * A[:, g.n1] * W2c * W3),
        "III_2": 1j * g.gsum(Ep * W1 * np.conj(A[:, g.n2]) * W3),
        "IV_1": -2j * t * g.gsum(Ep * Xi[:, g.n1] * P3),
        "IV_2": 1j * t * g.gsum(Ep * Xi[:, g.n2] * P3),
        "tI": 2j * t * W * ReD,
        "tII": -2j * W * ReD,
        "tIII": 2j * t * W * np.imag(Wc * g.gsum(Ep * weight * P3)),
        "tIV_0": -2j * t * dW * ReD,
        "tIV_1": -4j * t * W * np.real(Wc * g.gsum(Ep * dW[:, g.n1] * W2c * W3)),
        "tIV_2": -2j * t * W * np.real(Wc * g.gsum(Ep * W1 * np.conj(dW[:, g.n2]) * W3)),
        "tIV_3": -2j * t * W * np.real(np.conj(dW) * B),
    }


def nf_decompose_w(traj: Trajectory, t: float, params: ModelParams | None = None) -> NormalFormTermsW:
    params = params or traj.params
    if EquationKind(traj.kind) is not EquationKind.W_FORM:
        raise ContractError("nf_decompose_w needs a w_form trajectory")
    params.require_nonresonant()
    N = traj.N
    if N > W_CAPACITY:
        raise CapacityError(
            f"w-side decomposition enumerates nested Gamma-sums and is capped at N={W_CAPACITY} (got N={N}); "
            "use the v-side decomposition for larger truncations"
        )

    def st(c):
        return make_state(N, c, Rep.W, t)

    if t == 0:
        z = st(np.zeros(2 * N + 1, complex))
        return NormalFormTermsW({k: z for k in W1_TERMS + W2_TERMS}, z, z, 0.0, 0.0)
    times, coeffs = _window(traj, t)
    vals = _evaluate(_w_integrands, coeffs, times, gamma_table(N, params.beta))
    terms = {"I_t": st(vals["I"][-1]), "I_0": st(vals["I"][0]), "tI": st(vals["tI"][-1])}
    for k in ("II", "III_1", "III_2", "IV_1", "IV_2", "tII", "tIII", "tIV_0", "tIV_1", "tIV_2", "tIV_3"):
        terms[k] = st(simpson(vals[k], times))
    q1 = simpson(vals["N1"], times)
    q2 = simpson(vals["N2"], times)
    out = NormalFormTermsW({k: terms[k] for k in W1_TERMS + W2_TERMS}, st(q1), st(q2), 0.0, 0.0)
    r1 = float(sobolev_norm_array(q1 - out.sum_N1, 0.0))
    r2 = float(sobolev_norm_array(q2 - out.sum_N2, 0.0))
    return NormalFormTermsW(out.terms, st(q1), st(q2), r1, r2)


# ---------------------------------------------------------------------------
# remainders


def remainder_K(u0: SpectralState, t: float, j: int, params: ModelParams, dt: float = 1e-3) -> SpectralState:
    """K_j(t)(u0) = Psi_j(t)(u0) - u0 with u0 read as v-data (j=0) or w-data (j=1)."""
    if j not in (0, 1):
        raise ContractError("j must be 0 or 1")
    kind, rep = (EquationKind.V_FORM, Rep.V) if j == 0 else (EquationKind.W_FORM, Rep.W)
    start = u0.replace(rep=rep, time=0.0)
    if t == 0:
        return start.replace(coeffs=np.zeros_like(u0.coeffs))
    final = evolve(kind, start, t, dt, params).final
    return final.replace(coeffs=final.coeffs - start.coeffs)


def decompose(kind: EquationKind, u0: SpectralState, t: float, dt: float, params: ModelParams, stride: int = 1):
    """Integrate from ``u0`` (read as v- or w-data) and decompose at ``t``."""
    kind = EquationKind(kind)
    rep = Rep.V if kind is EquationKind.V_FORM else Rep.W
    traj = evolve(kind, u0.replace(rep=rep, time=0.0), t, dt, params, stride)
    if kind is EquationKind.V_FORM:
        return traj, nf_decompose_v(traj, t, params)
    return traj, nf_decompose_w(traj, t, params)
