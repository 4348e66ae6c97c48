"""Gaussian measure mu_s: sampling, invariance tests, smoothing and Ramer diagnostics.

Samples are u_n = g_n / <n>^s with g_n standard complex Gaussians (E|g_n|^2 = 2).
Every sample owns a counter-based stream keyed by (seed, stream, index); modes are
drawn in the order 0, 1, -1, 2, -2, ... so that a sample restricted to a smaller
truncation is exactly the truncation of the larger sample.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
import scipy.stats

from .dynamics import EquationKind, evolve_ensemble, from_physical_rep
from .errors import ContractError, StepSizeError
from .params import Beta, ModelParams
from .parallel import blocks, ordered_map
from .propagators import gauge_G_array, gauge_J_array, propagate_array
from .spectral import SpectralState, bracket, make_state, sobolev_norm_array

MAPS = ("S(t)", "G_t", "J_t", "composition", "identity")
COMPONENTS = ("re", "im", "abs")
MIN_POWER_COUNT = 100


@dataclass(frozen=True)
class MeasureSpec:
    s: float = 0.8
    N: int = 32
    seed: int = 0
    count: int = 1000

    def __post_init__(self):
        if not self.s > 0.5:
            raise ContractError(f"mu_s needs s > 1/2, got s={self.s}")
        if self.count < 1:
            raise ContractError("count must be >= 1")
        if self.N < 1:
            raise ContractError("N must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ContractError("seed must be a 64-bit unsigned integer")


def canonical_order(N: int) -> np.ndarray:
    """Modes 0, 1, -1, 2, -2, ..., N, -N."""
    out = np.zeros(2 * N + 1, dtype=int)
    out[1::2] = np.arange(1, N + 1)
    out[2::2] = -np.arange(1, N + 1)
    return out


def _generator(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, index))))


def _draw(spec: MeasureSpec, stream: int, index: int) -> np.ndarray:
    g = _generator(spec.seed, stream, index).standard_normal((2 * spec.N + 1, 2))
    c = np.empty(2 * spec.N + 1, dtype=np.complex128)
    c[canonical_order(spec.N) + spec.N] = g[:, 0] + 1j * g[:, 1]
    return c / bracket(np.arange(-spec.N, spec.N + 1)) ** spec.s


def sample_mu(spec: MeasureSpec, index: int, stream: int = 0) -> SpectralState:
    if not 0 <= index < spec.count:
        raise ContractError(f"sample index {index} outside [0, {spec.count})")
    return make_state(spec.N, _draw(spec, stream, index))


def sample_batch(spec: MeasureSpec, stream: int = 0, start: int = 0, count: int | None = None) -> np.ndarray:
    """Coefficient array (count, 2N+1) of samples start, start+1, ..."""
    count = spec.count - start if count is None else count
    return np.stack([_draw(spec, stream, start + i) for i in range(count)])


# ---------------------------------------------------------------------------
# invariance


def apply_map(name: str, coeffs: np.ndarray, t: float, beta: Beta) -> np.ndarray:
    if name == "S(t)":
        return propagate_array(coeffs, t, beta)
    if name == "G_t":
        return gauge_G_array(coeffs, t)
    if name == "J_t":
        return gauge_J_array(coeffs, t)
    if name == "composition":
        return propagate_array(gauge_J_array(gauge_G_array(coeffs, 0.3), 0.7), 1.0, beta)
    if name == "identity":
        return coeffs
    raise ContractError(f"unknown map {name!r}; expected one of {MAPS}")


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    map_name: str
    t: float
    alpha: float
    modes: np.ndarray
    statistics: dict[str, np.ndarray]
    pvalues: dict[str, np.ndarray]
    warnings: tuple[str, ...] = ()

    @property
    def n_tests(self) -> int:
        return sum(p.size for p in self.pvalues.values())

    @property
    def corrected_alpha(self) -> float:
        return self.alpha / self.n_tests

    @property
    def rejections(self) -> int:
        return int(sum(np.sum(p < self.corrected_alpha) for p in self.pvalues.values()))

    @property
    def raw_rejections(self) -> int:
        return int(sum(np.sum(p < self.alpha) for p in self.pvalues.values()))

    def rows(self):
        for k, n in enumerate(self.modes):
            for comp in COMPONENTS:
                yield int(n), comp, float(self.statistics[comp][k]), float(self.pvalues[comp][k])


def _components(c: np.ndarray) -> dict[str, np.ndarray]:
    return {"re": c.real, "im": c.imag, "abs": np.abs(c)}


def invariance_test(map_name: str, t: float, spec: MeasureSpec, alpha: float = 0.01,
                    beta: Beta = 2.1) -> InvarianceReport:
    """Two-sample KS tests per mode and component between mu_s and its pushforward."""
    if map_name not in MAPS:
        raise ContractError(f"unknown map {map_name!r}; expected one of {MAPS}")
    if not 0 < alpha < 1:
        raise ContractError("alpha must lie in (0, 1)")
    notes = []
    if spec.count < MIN_POWER_COUNT:
        notes.append(f"count={spec.count} < {MIN_POWER_COUNT}: the KS suite has little power")
    pushed = apply_map(map_name, sample_batch(spec, stream=0), t, beta)
    ref = sample_batch(spec, stream=1)
    a, b = _components(pushed), _components(ref)
    stats, pvals = {}, {}
    for comp in COMPONENTS:
        res = scipy.stats.ks_2samp(a[comp], b[comp], axis=0)
        stats[comp] = np.asarray(res.statistic, dtype=float)
        pvals[comp] = np.asarray(res.pvalue, dtype=float)
    return InvarianceReport(map_name, t, alpha, np.arange(-spec.N, spec.N + 1), stats, pvals, tuple(notes))


def calibration_rate(spec: MeasureSpec, alpha: float = 0.01, runs: int = 10) -> tuple[int, int]:
    """Pooled uncorrected rejections of the identity map over ``runs`` seeds: (rejections, tests)."""
    rej = tests = 0
    for r in range(runs):
        rep = invariance_test("identity", 0.0, MeasureSpec(spec.s, spec.N, spec.seed + r, spec.count), alpha)
        rej += rep.raw_rejections
        tests += rep.n_tests
    return rej, tests


# ---------------------------------------------------------------------------
# flow remainders on ensembles


def diagnostic_dt(N: int) -> float:
    """Step size that resolves the dispersive phases of rough data at truncation N."""
    return min(5e-4, 1.25e-4 * (32.0 / N) ** 2)


def remainder_ensemble(j: int, U0: np.ndarray, t: float, params: ModelParams, dt: float | None = None,
                       n_nodes: int = 0):
    """K_j(t) on a batch, integrated through the original equation and mapped back by the gauges.

    Returns (K, times, physical snapshots). With ``n_nodes`` > 0 about that many equally
    spaced snapshots are kept for quadratures and sup-norms; otherwise only the endpoints.
    """
    if j not in (0, 1):
        raise ContractError("j must be 0 or 1")
    params.require_nonresonant()
    N = (U0.shape[-1] - 1) // 2
    dt = diagnostic_dt(N) if dt is None else dt
    if t == 0:
        return np.zeros_like(U0), np.array([0.0]), U0[None]
    steps = max(1, math.ceil(t / dt - 1e-9))
    stride = steps if n_nodes <= 0 else max(1, steps // n_nodes)
    while stride > 1 and steps % stride:
        stride -= 1
    times, U = evolve_ensemble(EquationKind.ORIGINAL, U0, t, dt, params, stride)
    kind = EquationKind.V_FORM if j == 0 else EquationKind.W_FORM
    return from_physical_rep(kind, U[-1], t, params.beta) - U0, times, U


# ---------------------------------------------------------------------------
# smoothing


@dataclass(frozen=True, eq=False)
class SmoothingReport:
    j: int
    t: float
    params: ModelParams
    targets: dict[str, float]
    N_list: tuple[int, ...]
    count: int
    norms: dict[str, np.ndarray]  # name -> (len(N_list), count)
    bounds: dict[str, np.ndarray]

    @property
    def ratios(self) -> dict[str, np.ndarray]:
        return {k: self.norms[k] / np.where(self.bounds[k] > 0, self.bounds[k], np.inf) for k in self.norms}

    def quantile(self, name: str, q: float = 0.95) -> np.ndarray:
        return np.quantile(self.norms[name], q, axis=1)

    def ratio_quantiles(self, qs=(0.5, 0.95, 1.0)) -> dict[str, dict[float, np.ndarray]]:
        return {k: {q: np.quantile(r, q, axis=1) for q in qs} for k, r in self.ratios.items()}

    def trend_ok(self, name: str, slack: float = 0.2, q: float = 0.95) -> bool:
        """Quantile does not grow by more than ``slack`` from one N to the next."""
        v = self.quantile(name, q)
        return bool(np.all(v[1:] <= (1.0 + slack) * v[:-1]))

    def rows(self):
        for a, N in enumerate(self.N_list):
            for b in range(self.count):
                yield (N, b) + tuple(float(self.norms[k][a, b]) for k in self.norms) + tuple(
                    float(self.bounds[k][a, b]) for k in self.norms)


def smoothing_targets(j: int, params: ModelParams) -> dict[str, float]:
    sig = params.sigma
    if j == 0:
        return {"N0": sig + 2.0, "NR0": 3.0 * sig}
    return {"K1": sig + 1.0 + params.epsilon}


def check_smoothing_ranges(j: int, t: float, params: ModelParams) -> None:
    sig = params.sigma
    if j == 0 and not sig > 0.5:
        raise ContractError(f"v-side smoothing needs sigma > 1/2 (got sigma={sig})")
    if j == 1 and not 0.25 < sig <= 0.5:
        raise ContractError(f"w-side smoothing needs 1/4 < sigma <= 1/2 (got sigma={sig})")
    if j not in (0, 1):
        raise ContractError("j must be 0 or 1")
    if not 0 <= t <= 1:
        raise ContractError("smoothing diagnostics are run for 0 <= t <= 1")


def _simpson_nodes(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    import scipy.integrate

    return scipy.integrate.simpson(values, x=times, axis=0)


def _smoothing_block(j, U0, t, params, dt, n_nodes):
    K, times, U = remainder_ensemble(j, U0, t, params, dt, n_nodes)
    hs = sobolev_norm_array(U, params.sigma)  # (n_snap, B); gauges keep every |u_n|
    h0, ht, sup = hs[0], hs[-1], hs.max(axis=0)
    tg = smoothing_targets(j, params)
    if j == 1:
        norms = {"K1": sobolev_norm_array(K, tg["K1"])}
        bound = h0 ** 3 + ht ** 3 + h0 ** 5 + ht ** 5 + t * (sup ** 5 + sup ** 7 + sup ** 9)
        return norms, {"K1": bound}
    # resonant part: integral of i |v_n|^2 v_n with v = S(-t') G_t' u
    if len(times) > 1:
        V = from_physical_rep(EquationKind.V_FORM, U, times[:, None], params.beta)
        nr = _simpson_nodes(times, 1j * (V.real ** 2 + V.imag ** 2) * V)
    else:
        nr = np.zeros_like(K)
    norms = {"N0": sobolev_norm_array(K - nr, tg["N0"]), "NR0": sobolev_norm_array(nr, tg["NR0"])}
    bounds = {"N0": h0 ** 3 + ht ** 3 + t * sup ** 5, "NR0": t * sup ** 3}
    return norms, bounds


def smoothing_diagnostic(j: int, t: float, params: ModelParams, N_list, spec: MeasureSpec,
                         dt: float | None = None, n_nodes: int = 200) -> SmoothingReport:
    """Target-norm sizes of K_j(t) on mu_s samples for each truncation in ``N_list``."""
    check_smoothing_ranges(j, t, params)
    if abs(spec.s - params.s) > 1e-12:
        raise ContractError("MeasureSpec.s and ModelParams.s disagree")
    N_list = tuple(int(N) for N in N_list)
    names = list(smoothing_targets(j, params))
    norms = {k: np.zeros((len(N_list), spec.count)) for k in names}
    bounds = {k: np.zeros((len(N_list), spec.count)) for k in names}
    for a, N in enumerate(N_list):
        sp = MeasureSpec(spec.s, N, spec.seed, spec.count)
        U0 = sample_batch(sp)
        parts = ordered_map(lambda sl: _smoothing_block(j, U0[sl], t, params, dt, n_nodes), blocks(spec.count))
        for k in names:
            norms[k][a] = np.concatenate([p[0][k] for p in parts])
            bounds[k][a] = np.concatenate([p[1][k] for p in parts])
    bad = [k for k in names if not np.all(np.isfinite(norms[k]))]
    if bad:
        raise ContractError(f"non-finite smoothing norms for {bad}")
    return SmoothingReport(j, t, params, smoothing_targets(j, params), N_list, spec.count, norms, bounds)


# ---------------------------------------------------------------------------
# Ramer diagnostics


@dataclass(frozen=True)
class RamerReport:
    hs_norm: float
    min_singular_value: float
    N: int
    probe_count: int
    richardson_defect: float = 0.0


def _real_coords(c: np.ndarray) -> np.ndarray:
    return np.concatenate([c.real, c.imag], axis=-1)


def _jacobian(j, u0, t, params, steps, dt):
    """Central-difference Jacobian of K_j in real coordinates (re block, im block)."""
    N = (u0.shape[-1] - 1) // 2
    D = 2 * (2 * N + 1)
    basis = np.zeros((D, 2 * N + 1), dtype=np.complex128)
    idx = np.arange(2 * N + 1)
    basis[idx, idx] = 1.0
    basis[2 * N + 1 + idx, idx] = 1j
    basis *= np.concatenate([steps, steps])[:, None]
    probes = np.concatenate([u0 + basis, u0 - basis])
    K, _, _ = remainder_ensemble(j, probes, t, params, dt)
    diff = _real_coords(K[:D] - K[D:])  # (D, D): row = probe direction
    return (diff / (2.0 * np.concatenate([steps, steps])[:, None])).T


def ramer_diagnostic(u0: SpectralState, t: float, j: int, params: ModelParams, fd_step: float = 1e-5,
                     dt: float | None = None, check: bool = True) -> RamerReport:
    """H^s-weighted Hilbert-Schmidt norm of DK_j(t) at u0 and the smallest singular value of Id + DK."""
    if not fd_step > 0:
        raise ContractError("fd_step must be positive")
    if not np.all(np.isfinite(u0.coeffs)):
        raise ContractError("u0 must be finite")
    N = u0.grid.N
    D = 2 * (2 * N + 1)
    if t == 0:
        return RamerReport(0.0, 1.0, N, 0)
    n = np.arange(-N, N + 1)
    steps = fd_step * bracket(n) ** (-params.s)
    J = _jacobian(j, u0.coeffs, t, params, steps, dt)
    defect = 0.0
    probes = 2 * D
    if check:
        J2 = _jacobian(j, u0.coeffs, t, params, 0.5 * steps, dt)
        probes *= 2
        scale = np.linalg.norm(J2)
        if scale > 0:
            defect = float(np.linalg.norm(J - J2) / scale)
            if defect > 0.1:
                raise StepSizeError(f"finite-difference Jacobian changed by {defect:.1%} when fd_step was halved; "
                                    "reduce fd_step")
    w = np.concatenate([bracket(n), bracket(n)]) ** params.s
    A = w[:, None] * J / w[None, :]
    sv = np.linalg.svd(np.eye(D) + A, compute_uv=False)
    return RamerReport(float(np.linalg.norm(A)), float(sv.min()), N, probes, defect)


def ramer_survey(spec: MeasureSpec, t: float, j: int, params: ModelParams, N_list, fd_step: float = 1e-5,
                 dt: float | None = None, check: bool = True) -> dict[int, list[RamerReport]]:
    """Ramer diagnostics on the first ``spec.count`` samples for each truncation."""
    out = {}
    for N in N_list:
        sp = MeasureSpec(spec.s, int(N), spec.seed, spec.count)
        out[int(N)] = [ramer_diagnostic(sample_mu(sp, i), t, j, params, fd_step, dt, check)
                       for i in range(spec.count)]
    return out
