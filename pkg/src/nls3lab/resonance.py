"""Phase functions, the non-resonant index set Gamma(n) and the N1/N2/N3 split."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ContractError
from .params import Beta, off_shell, resonant_integer, shell_value
from .spectral import SpectralState, _hyperplane_triples, cubic_terms_direct

# default constant in the phase lower bounds
DEFAULT_C = 1 / 8
# "comparable frequencies" means within this factor of n_max
COMPARABLE_FACTOR = 4
_PHI_RTOL = 1e-9


@dataclass(frozen=True)
class FrequencyTuple:
    n: int
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        if self.n != self.n1 - self.n2 + self.n3:
            raise ContractError(f"{self.as_tuple()} is off the hyperplane n = n1 - n2 + n3")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n, self.n1, self.n2, self.n3)

    @classmethod
    def from_outer(cls, n: int, n1: int, n3: int) -> "FrequencyTuple":
        return cls(n, n1, n1 + n3 - n, n3)


def _as_tuple(tup) -> FrequencyTuple:
    return tup if isinstance(tup, FrequencyTuple) else FrequencyTuple(*tup)


def phi_expanded(tup, beta: Beta):
    n, n1, n2, n3 = _as_tuple(tup).as_tuple()
    def w(k):
        return k ** 3 - beta * k ** 2
    return w(n) - w(n1) + w(n2) - w(n3)


def phi(tup, beta: Beta) -> float:
    """Factored phase 3 (n - n1)(n - n3)(n1 + n3 - 2 beta/3), cross-checked against the cubic form."""
    t = _as_tuple(tup)
    fac = 3 * (t.n - t.n1) * (t.n - t.n3) * (t.n1 + t.n3 - shell_value(beta))
    exp = phi_expanded(t, beta)
    scale = max(1.0, abs(float(t.n) ** 3) + abs(float(t.n1) ** 3) + abs(float(t.n2) ** 3) + abs(float(t.n3) ** 3))
    assert abs(float(fac) - float(exp)) <= _PHI_RTOL * scale * max(1.0, abs(float(beta))), (t, fac, exp)
    return float(fac)


def phi_array(n, n1, n3, beta: Beta) -> np.ndarray:
    n, n1, n3 = (np.asarray(a, dtype=float) for a in (n, n1, n3))
    return 3.0 * (n - n1) * (n - n3) * (n1 + n3 - float(shell_value(beta)))


def phi_expanded_array(n, n1, n2, n3, beta: Beta) -> np.ndarray:
    b = float(beta)
    def w(k):
        k = np.asarray(k, dtype=float)
        return k ** 3 - b * k ** 2
    return w(n) - w(n1) + w(n2) - w(n3)


def gamma_contains(tup, beta: Beta) -> bool:
    t = _as_tuple(tup)
    if t.n == t.n1 or t.n == t.n3:
        return False
    return bool(off_shell(np.int64(t.n1 + t.n3), beta))


@dataclass(frozen=True)
class PhaseBoundReport:
    phi: float
    n_max: int
    lam: float
    Lam: float
    case_i_holds: bool
    case_ii_holds: bool
    comparable: bool
    c: float


def _comparable(absn: np.ndarray, n_max) -> np.ndarray:
    return np.all(COMPARABLE_FACTOR * np.maximum(absn, 1) >= np.asarray(n_max)[..., None], axis=-1)


def phase_bounds(tup, beta: Beta, c: float = DEFAULT_C) -> PhaseBoundReport:
    t = _as_tuple(tup)
    if not gamma_contains(t, beta):
        raise ContractError(f"{t.as_tuple()} is not in Gamma(n) for beta={beta}")
    p = phi(t, beta)
    a = abs(t.n - t.n1)
    b = abs(t.n - t.n3)
    r = abs(float(t.n1 + t.n3 - shell_value(beta)))
    n_max = max(abs(t.n), abs(t.n1), abs(t.n2), abs(t.n3))
    lam = float(min(a, b, r))
    Lam = float(min(a * b, b * r, a * r))
    comparable = bool(_comparable(np.abs(np.array(t.as_tuple())), n_max))
    return PhaseBoundReport(
        phi=p,
        n_max=n_max,
        lam=lam,
        Lam=Lam,
        case_i_holds=abs(p) >= c * n_max ** 2 * lam,
        case_ii_holds=comparable and abs(p) >= c * n_max * Lam,
        comparable=comparable,
        c=c,
    )


def phase_bound_table(N: int, beta: Beta, c: float = DEFAULT_C) -> dict[str, np.ndarray]:
    """Vectorized phase bounds for every Gamma(n) tuple with all |n_i| <= N."""
    n, n1, n2, n3 = gamma_index(N, beta)[:4]
    p = phi_array(n, n1, n3, beta)
    a = np.abs(n - n1).astype(float)
    b = np.abs(n - n3).astype(float)
    r = np.abs(n1 + n3 - float(shell_value(beta)))
    absn = np.abs(np.stack([n, n1, n2, n3], axis=-1))
    n_max = absn.max(axis=-1)
    lam = np.minimum(np.minimum(a, b), r)
    Lam = np.minimum(np.minimum(a * b, b * r), a * r)
    comparable = _comparable(absn, n_max)
    ratio_i = np.abs(p) / (n_max.astype(float) ** 2 * lam)
    ratio_ii = np.where(comparable, np.abs(p) / (n_max * Lam), 0.0)
    return dict(n=n, n1=n1, n2=n2, n3=n3, phi=p, lam=lam, Lam=Lam, n_max=n_max, comparable=comparable,
                case_i=np.abs(p) >= c * n_max.astype(float) ** 2 * lam,
                case_ii=comparable & (np.abs(p) >= c * n_max * Lam),
                ratio_i=ratio_i, ratio_ii=ratio_ii)


def best_constant(N: int, beta: Beta) -> float:
    """Largest c for which every Gamma tuple with |n_i| <= N satisfies case (i) or case (ii)."""
    tab = phase_bound_table(N, beta)
    return float(np.min(np.maximum(tab["ratio_i"], tab["ratio_ii"])))


def psi(tup, state: SpectralState) -> float:
    t = _as_tuple(tup)
    g = state.grid
    a = np.abs(state.coeffs) ** 2
    return float(-a[g.index(t.n)] + a[g.index(t.n1)] - a[g.index(t.n2)] + a[g.index(t.n3)])


def split_N123(state: SpectralState, beta: Beta) -> tuple[SpectralState, SpectralState, SpectralState]:
    """Non-resonant Gamma-sum, the diagonal term -|u_n|^2 u_n and the resonant-shell sum."""
    n1 = cubic_terms_direct(state, "gamma", beta)
    diag = cubic_terms_direct(state, "diagonal")
    n3 = cubic_terms_direct(state, "resonant", beta)
    return n1, diag.replace(coeffs=-diag.coeffs), n3


def beta_key(beta: Beta):
    return ("q", beta.numerator, beta.denominator) if isinstance(beta, Fraction) else ("f", float(beta))


@lru_cache(maxsize=64)
def _gamma_index(N: int, key) -> tuple[np.ndarray, ...]:
    beta = Fraction(key[1], key[2]) if key[0] == "q" else key[1]
    n, n1, n2, n3 = _hyperplane_triples(N)
    keep = (n != n1) & (n != n3) & off_shell(n1 + n3, beta)
    out = [np.ascontiguousarray(a[keep]) for a in (n, n1, n2, n3)]
    out.append(phi_array(out[0], out[1], out[3], beta))
    for a in out:
        a.flags.writeable = False
    return tuple(out)


def gamma_index(N: int, beta: Beta) -> tuple[np.ndarray, ...]:
    """(n, n1, n2, n3, phi) arrays over all Gamma(n) tuples with entries in [-N, N], grouped by n."""
    return _gamma_index(int(N), beta_key(beta))


def resonant_shell_direct(state: SpectralState, beta: Beta) -> np.ndarray:
    """N3 through its factored form conj(u(k - n)) * sum_{n1 != n, k - n1} u(n1) u(k - n1), k = 2beta/3."""
    k = resonant_integer(beta)
    N = state.N
    out = np.zeros(2 * N + 1, complex)
    if k is None:
        return out
    u = state.coeffs
    def get(m):
        return u[m + N] if abs(m) <= N else 0.0
    for n in range(-N, N + 1):
        partner = np.conj(get(k - n))
        if partner == 0:
            continue
        acc = 0.0
        for m in range(-N, N + 1):
            if m != n and k - m != n:
                acc += get(m) * get(k - m)
        out[n + N] = partner * acc
    return out
