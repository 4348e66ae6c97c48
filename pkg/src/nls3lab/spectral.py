"""Truncated Fourier states on the circle, Sobolev norms and exact cubic products.

Coefficients are stored in the order n = -N, ..., N. Integrals over the circle use
the normalized measure (1/2pi) dx, so the mass of a state is the plain sum of
|u_n|^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft

from .errors import ContractError, DimensionError, ValidationError
from .params import Beta, off_shell, resonant_integer


class Rep(str, Enum):
    """Which unknown a coefficient vector belongs to.

    ``u``: the original equation; ``u_gauged``: after the global mass gauge;
    ``u_j``: after the additional per-mode gauge; ``v``/``w``: the interaction
    representations of ``u_gauged``/``u_j``.
    """

    U = "u"
    U_GAUGED = "u_gauged"
    U_J = "u_j"
    V = "v"
    W = "w"


@dataclass(frozen=True)
class FrequencyGrid:
    N: int
    transform_length: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValidationError(f"truncation N must be a positive integer, got {self.N!r}")
        if self.transform_length < 4 * self.N + 1:
            raise ValidationError(
                f"transform length {self.transform_length} < 4N+1 = {4 * self.N + 1} aliases cubic products"
            )

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def index(self, n: int) -> int:
        if abs(n) > self.N:
            raise IndexError(f"mode {n} outside [-{self.N}, {self.N}]")
        return n + self.N


@lru_cache(maxsize=None)
def grid_for(N: int) -> FrequencyGrid:
    return FrequencyGrid(int(N), scipy.fft.next_fast_len(4 * int(N) + 1))


@dataclass(frozen=True, eq=False)
class SpectralState:
    grid: FrequencyGrid
    coeffs: np.ndarray
    time: float = 0.0
    rep: Rep = Rep.U

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.shape[0] != self.grid.size:
            raise DimensionError(f"expected {self.grid.size} coefficients for N={self.grid.N}, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            bad = int(np.flatnonzero(~np.isfinite(c))[0]) - self.grid.N
            raise ValidationError(f"non-finite coefficient at mode {bad}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "rep", Rep(self.rep))
        object.__setattr__(self, "time", float(self.time))

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def modes(self) -> np.ndarray:
        return self.grid.modes

    def coeff(self, n: int) -> complex:
        return complex(self.coeffs[self.grid.index(n)])

    def replace(self, coeffs=None, rep=None, time=None) -> "SpectralState":
        return SpectralState(
            self.grid,
            self.coeffs if coeffs is None else coeffs,
            self.time if time is None else time,
            self.rep if rep is None else rep,
        )

    def __repr__(self):
        return f"SpectralState(N={self.N}, time={self.time}, rep={self.rep.value})"


def make_state(N: int, coeffs, rep: Rep | str = Rep.U, t: float = 0.0) -> SpectralState:
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 1 or coeffs.shape[0] != 2 * N + 1:
        raise DimensionError(f"coefficient vector of length {coeffs.shape} does not match 2N+1 = {2 * N + 1}")
    return SpectralState(grid_for(N), coeffs, t, Rep(rep))


def zero_state(N: int, rep: Rep | str = Rep.U, t: float = 0.0) -> SpectralState:
    return make_state(N, np.zeros(2 * N + 1, complex), rep, t)


def single_mode(N: int, n: int, a: complex = 1.0, rep: Rep | str = Rep.U, t: float = 0.0) -> SpectralState:
    c = np.zeros(2 * N + 1, complex)
    c[n + N] = a
    return make_state(N, c, rep, t)


def random_state(N: int, rng: np.random.Generator, decay: float = 1.0, norm: float | None = 1.0,
                 rep: Rep | str = Rep.U) -> SpectralState:
    """Complex Gaussian coefficients damped by <n>^-decay, optionally rescaled to an L2 norm."""
    n = np.arange(-N, N + 1)
    c = (rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)) * (1.0 + n * n) ** (-decay / 2)
    if norm is not None:
        c *= norm / np.sqrt(np.sum(np.abs(c) ** 2))
    return make_state(N, c, rep)


def analytic_state(N: int, rng: np.random.Generator, rate: float = 1.0, norm: float | None = 1.0,
                   rep: Rep | str = Rep.U) -> SpectralState:
    """Complex Gaussian coefficients damped by exp(-rate |n|): a random real-analytic profile."""
    n = np.arange(-N, N + 1)
    c = (rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)) * np.exp(-rate * np.abs(n))
    if norm is not None:
        c *= norm / np.sqrt(np.sum(np.abs(c) ** 2))
    return make_state(N, c, rep)


# ---------------------------------------------------------------------------
# norms


def bracket(n) -> np.ndarray:
    """Japanese bracket <n> = (1 + n^2)^(1/2)."""
    n = np.asarray(n, dtype=float)
    return np.sqrt(1.0 + n * n)


def sobolev_norm_array(coeffs: np.ndarray, s: float) -> np.ndarray:
    """H^s norms along the last axis of an array of coefficient vectors."""
    N = (coeffs.shape[-1] - 1) // 2
    n = np.arange(-N, N + 1, dtype=float)
    w = (1.0 + n * n) ** s
    return np.sqrt(np.sum(w * (coeffs.real ** 2 + coeffs.imag ** 2), axis=-1))


def sobolev_norm(state: SpectralState, s: float) -> float:
    return float(sobolev_norm_array(state.coeffs, s))


def mass_array(coeffs: np.ndarray) -> np.ndarray:
    return np.sum(coeffs.real ** 2 + coeffs.imag ** 2, axis=-1)


# ---------------------------------------------------------------------------
# transform-based products


def to_physical(coeffs: np.ndarray, M: int) -> np.ndarray:
    """Values on the M-point grid x_j = 2 pi j / M of the trigonometric polynomial."""
    N = (coeffs.shape[-1] - 1) // 2
    buf = np.zeros(coeffs.shape[:-1] + (M,), dtype=np.complex128)
    buf[..., : N + 1] = coeffs[..., N:]
    buf[..., M - N:] = coeffs[..., :N]
    return scipy.fft.ifft(buf, axis=-1, norm="forward")


def from_physical(values: np.ndarray, N: int) -> np.ndarray:
    """Galerkin projection onto |n| <= N of grid values."""
    M = values.shape[-1]
    f = scipy.fft.fft(values, axis=-1, norm="forward")
    return np.concatenate([f[..., M - N:], f[..., : N + 1]], axis=-1)


def cubic_array(coeffs: np.ndarray, renormalized: bool = False) -> np.ndarray:
    """P_N(|u|^2 u), or P_N((|u|^2 - 2 mean|u|^2) u), for stacked coefficient vectors."""
    N = (coeffs.shape[-1] - 1) // 2
    M = grid_for(N).transform_length
    u = to_physical(coeffs, M)
    out = from_physical((u.real ** 2 + u.imag ** 2) * u, N)
    if renormalized:
        out -= 2.0 * mass_array(coeffs)[..., None] * coeffs
    return out


def quartic_mean_array(coeffs: np.ndarray) -> np.ndarray:
    """mean |u|^4 over the circle, exact on the padded grid."""
    N = (coeffs.shape[-1] - 1) // 2
    u = to_physical(coeffs, grid_for(N).transform_length)
    a = u.real ** 2 + u.imag ** 2
    return np.mean(a * a, axis=-1)


def cubic_terms_fft(state: SpectralState, renormalized: bool = False) -> SpectralState:
    return state.replace(coeffs=cubic_array(state.coeffs, renormalized))


# ---------------------------------------------------------------------------
# direct triple sums (oracle)

FILTERS = ("all", "gamma", "diagonal", "resonant")


@lru_cache(maxsize=32)
def _hyperplane_triples(N: int):
    """All (n, n1, n2, n3) with n = n1 - n2 + n3 and every entry in [-N, N]."""
    r = np.arange(-N, N + 1)
    n, n1, n3 = np.meshgrid(r, r, r, indexing="ij")
    n2 = n1 + n3 - n
    keep = np.abs(n2) <= N
    out = tuple(np.ascontiguousarray(a[keep]) for a in (n, n1, n2, n3))
    for a in out:
        a.flags.writeable = False
    return out


def _triple_mask(N: int, filter: str, beta: Beta | None):
    n, n1, n2, n3 = _hyperplane_triples(N)
    if filter == "all":
        return np.ones(n.shape, bool)
    if filter == "diagonal":
        return (n1 == n) & (n3 == n)
    if beta is None:
        raise ContractError(f"filter {filter!r} needs beta")
    generic = (n != n1) & (n != n3)
    if filter == "gamma":
        return generic & off_shell(n1 + n3, beta)
    if filter == "resonant":
        k = resonant_integer(beta)
        if k is None:
            return np.zeros(n.shape, bool)
        return generic & (n1 + n3 == k)
    raise ContractError(f"unknown triple filter {filter!r}; expected one of {FILTERS}")


def triple_sum(coeffs: np.ndarray, mask: np.ndarray, N: int, weights=None) -> np.ndarray:
    """sum over selected hyperplane triples of u_{n1} conj(u_{n2}) u_{n3}, binned by n."""
    n, n1, n2, n3 = (a[mask] for a in _hyperplane_triples(N))
    prod = coeffs[n1 + N] * np.conj(coeffs[n2 + N]) * coeffs[n3 + N]
    if weights is not None:
        prod = prod * weights
    idx = n + N
    size = 2 * N + 1
    return np.bincount(idx, prod.real, size) + 1j * np.bincount(idx, prod.imag, size)


def cubic_terms_direct(state: SpectralState, filter: str = "all", beta: Beta | None = None,
                       renormalized: bool = False) -> SpectralState:
    """Exact triple sum over the triples selected by ``filter``.

    ``renormalized`` subtracts 2*M*u and is only meaningful with ``filter="all"``.
    A resonant-shell request with a non-integer 2*beta/3 returns the zero state.
    """
    if filter not in FILTERS:
        raise ContractError(f"unknown triple filter {filter!r}; expected one of {FILTERS}")
    N = state.N
    out = triple_sum(state.coeffs, _triple_mask(N, filter, beta), N)
    if renormalized:
        if filter != "all":
            raise ContractError("renormalization applies to the full cubic sum only")
        out = out - 2.0 * mass_array(state.coeffs) * state.coeffs
    return state.replace(coeffs=out)


# ---------------------------------------------------------------------------
# snapshot files


def snapshot_text(state: SpectralState) -> str:
    """ASCII snapshot: header ``n_min n_max time rep`` then ``n re im`` per mode (repr floats)."""
    lines = [f"{-state.N} {state.N} {state.time!r} {state.rep.value}"]
    for n, c in zip(state.modes, state.coeffs):
        lines.append(f"{int(n)} {float(c.real)!r} {float(c.imag)!r}")
    return "\n".join(lines) + "\n"


def write_snapshot(state: SpectralState, path) -> None:
    Path(path).write_text(snapshot_text(state), encoding="ascii")


def parse_snapshot(text: str, source: str = "<snapshot>") -> SpectralState:
    rows = [ln.split() for ln in text.split("\n") if ln.strip()]
    if not rows or len(rows[0]) != 4:
        raise ValidationError(f"{source}: malformed header, expected 'n_min n_max time rep'")
    try:
        n_min, n_max, t, rep = int(rows[0][0]), int(rows[0][1]), float(rows[0][2]), Rep(rows[0][3])
    except ValueError as exc:
        raise ValidationError(f"{source}: malformed header: {exc}") from exc
    if n_min != -n_max or n_max < 1:
        raise ValidationError(f"{source}: modes must span a symmetric range [-N, N]")
    body = rows[1:]
    if len(body) != 2 * n_max + 1:
        raise DimensionError(f"{source}: expected {2 * n_max + 1} mode lines, got {len(body)}")
    coeffs = np.zeros(2 * n_max + 1, complex)
    for k, row in enumerate(body):
        try:
            ok = len(row) == 3 and int(row[0]) == n_min + k
            if ok:
                coeffs[k] = complex(float(row[1]), float(row[2]))
        except ValueError:
            ok = False
        if not ok:
            raise ValidationError(f"{source}: line {k + 2} should read '{n_min + k} re im'")
    return make_state(n_max, coeffs, rep, t)


def read_snapshot(path) -> SpectralState:
    try:
        text = Path(path).read_text(encoding="ascii")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path}: snapshot files are ASCII") from exc
    return parse_snapshot(text, str(path))
