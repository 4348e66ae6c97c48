"""Linear propagator S(t), the mass gauge G_t, the per-mode gauge J_t and the
interaction-representation maps.

Applying the dispersion operator d_x^3 - i beta d_x^2 to e^{inx} gives
-i (n^3 - beta n^2) e^{inx}, so S(t) multiplies mode n by exp(-i t omega_n) with
omega_n = n^3 - beta n^2. With this sign, v = S(-t) u carries the phase
exp(+i t phi) in its equation.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ContractError
from .params import Beta, ModelParams
from .spectral import Rep, SpectralState, mass_array


class Direction(str, Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


def _sign(direction) -> float:
    return 1.0 if Direction(direction) is Direction.FORWARD else -1.0


def dispersion(N: int, beta: Beta) -> np.ndarray:
    """omega_n = n^3 - beta n^2 for n = -N..N."""
    n = np.arange(-N, N + 1, dtype=float)
    return n ** 3 - float(beta) * n ** 2


# array-level kernels, shared with the integrators and the measure lab

def propagate_array(coeffs: np.ndarray, t, beta: Beta) -> np.ndarray:
    """S(t) on stacked coefficient vectors; ``t`` may be an array broadcasting over leading axes."""
    N = (coeffs.shape[-1] - 1) // 2
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * t[..., None] * dispersion(N, beta)) * coeffs


def gauge_G_array(coeffs: np.ndarray, t, sign: float = 1.0) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.exp(2j * sign * t * mass_array(coeffs))[..., None] * coeffs


def gauge_J_array(coeffs: np.ndarray, t, sign: float = 1.0) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = coeffs.real ** 2 + coeffs.imag ** 2
    return np.exp(-1j * sign * t[..., None] * a) * coeffs


# state-level operations

def linear_propagator(state: SpectralState, t: float, params: ModelParams) -> SpectralState:
    return state.replace(coeffs=propagate_array(state.coeffs, t, params.beta), time=state.time + t)


_G_PAIRS = {Direction.FORWARD: (Rep.U, Rep.U_GAUGED), Direction.INVERSE: (Rep.U_GAUGED, Rep.U)}
_J_PAIRS = {Direction.FORWARD: (Rep.U_GAUGED, Rep.U_J), Direction.INVERSE: (Rep.U_J, Rep.U_GAUGED)}


def _check_rep(state: SpectralState, expected: Rep, what: str) -> None:
    if state.rep is not expected:
        raise ContractError(f"{what} expects a state tagged {expected.value!r}, got {state.rep.value!r}")


def gauge_G(state: SpectralState, t: float, direction: Direction | str = Direction.FORWARD) -> SpectralState:
    """G_t f = exp(2 i t mean|f|^2) f; the inverse is G_{-t}."""
    d = Direction(direction)
    src, dst = _G_PAIRS[d]
    _check_rep(state, src, f"gauge_G ({d.value})")
    return state.replace(coeffs=gauge_G_array(state.coeffs, t, _sign(d)), rep=dst)


def gauge_J(state: SpectralState, t: float, direction: Direction | str = Direction.FORWARD) -> SpectralState:
    """Per-mode rotation f_n -> exp(-i t |f_n|^2) f_n (inverse: opposite sign)."""
    d = Direction(direction)
    src, dst = _J_PAIRS[d]
    _check_rep(state, src, f"gauge_J ({d.value})")
    return state.replace(coeffs=gauge_J_array(state.coeffs, t, _sign(d)), rep=dst)


_INTERACTION = {Rep.U_GAUGED: Rep.V, Rep.U_J: Rep.W}
_PHYSICAL = {Rep.V: Rep.U_GAUGED, Rep.W: Rep.U_J}


def interaction_map(state: SpectralState, direction: Direction | str, params: ModelParams) -> SpectralState:
    """Forward: S(-t) with t the state's time tag (u_gauged -> v, u_j -> w); inverse applies S(t)."""
    d = Direction(direction)
    table = _INTERACTION if d is Direction.FORWARD else _PHYSICAL
    if state.rep not in table:
        raise ContractError(f"interaction_map ({d.value}) cannot act on rep {state.rep.value!r}")
    t = state.time
    coeffs = propagate_array(state.coeffs, -t if d is Direction.FORWARD else t, params.beta)
    return state.replace(coeffs=coeffs, rep=table[state.rep])
