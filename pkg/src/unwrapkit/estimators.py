"""Range estimators operating on a single multi-frequency phase observation.

Three estimators are provided and registered by name:

  * ``bw``       - the classical sequential chain over beat wavelengths,
                   finishing with a rounding step at lambda_0;
  * ``concerto`` - three coherent stages: the same chain stopped at the
                   finest beat wavelength (coarse), a closed-form weighted
                   least-squares residual over adjacent wrapped differences
                   of the compensated phases, and a final scalar
                   least-squares fit over all unwrapped phases;
  * ``ef``       - excess fractions: exhaustive scoring of every candidate
                   location at lambda_0, refined by the same final fit.

No matrix inversion or decomposition happens at estimate time: the residual
weight matrix has a closed-form entry formula and the final fit is a scalar
quotient. Per-plan constants are cached, so repeated estimates on one plan
only pay for the per-observation arithmetic. All entry points are pure
functions and safe for concurrent use.

Rounding convention: round-half-away-from-zero, everywhere an integer is
recovered from a noisy real value. Ties are measure-zero but deterministic.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    TWO_PI,
    FrequencyPlan,
    PhaseObservation,
    beat_wavelengths,
    wrap_phase,
)
from .errors import (
    DegeneratePlanError,
    DuplicateEstimatorError,
    InvalidArgumentError,
    UnknownEstimatorError,
)


_INV_TWO_PI = 1.0 / TWO_PI


def _round_half_away(v: float) -> int:
    if v >= 0.0:
        return int(math.floor(v + 0.5))
    return -int(math.floor(0.5 - v))


def _round_half_away_arr(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.fabs(x) + 0.5), x)


def _wrap_arr(x: np.ndarray) -> np.ndarray:
    # wrap_phase without the finiteness guard, for internally built arrays
    r = np.fmod(x, TWO_PI)
    r = np.where(r > math.pi, r - TWO_PI, r)
    return np.where(r <= -math.pi, r + TWO_PI, r)


@dataclass(frozen=True, eq=False)
class EstimateTrace:
    """Every intermediate quantity of a single estimate.

    ``l_mid_m`` always equals ``l_coarse_m + l_residual_m`` exactly as
    computed. ``delta_m`` is filled when the observation carried its truth.
    """

    method: str
    m_chain: tuple
    l_coarse_m: float
    l_residual_m: float
    l_mid_m: float
    fold_ints: tuple
    l_final_m: float
    delta_m: float | None = None


@dataclass(frozen=True, eq=False)
class ResidualSystem:
    """The ingredients of the residual stage, exposed for inspection.

    ``w_matrix`` is symmetric positive definite with entries
    (N*min(j,k) - j*k)/N for 1-based j, k.
    """

    delta_f_hz: np.ndarray
    delta_phi_rad: np.ndarray
    w_matrix: np.ndarray
    compensated_rad: np.ndarray


@dataclass(frozen=True, eq=False)
class LsSystem:
    """Inverse wavelengths and unwrapped cycle counts of the final fit."""

    inv_wavelengths: np.ndarray
    m_f: np.ndarray


def build_w(n: int) -> np.ndarray:
    """Residual-stage weight matrix for an n-frequency plan, shape (n-1, n-1)."""
    if n < 2:
        raise InvalidArgumentError(f"weight matrix needs n >= 2, got {n}")
    idx = np.arange(1, n, dtype=float)
    j = idx[:, None]
    k = idx[None, :]
    return (n * np.minimum(j, k) - j * k) / n


# ---------------------------------------------------------------------------
# Per-plan constants. FrequencyPlan is frozen and hashable, so these caches
# key directly on the plan object.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=128)
def _ws_basic(plan: FrequencyPlan):
    lam = np.array(plan.wavelengths_m)
    inv_lam = 1.0 / lam
    return lam, inv_lam, float(inv_lam @ inv_lam), TWO_PI * inv_lam


@lru_cache(maxsize=128)
def _ws_beat(plan: FrequencyPlan):
    beat_lam = beat_wavelengths(plan)
    ratios = (beat_lam[:-1] / beat_lam[1:]).tolist()
    return beat_lam, ratios, float(beat_lam[-1])


@lru_cache(maxsize=128)
def _ws_residual(plan: FrequencyPlan):
    freqs = np.array(plan.freqs_hz)
    delta_f = -np.diff(freqs)
    w = build_w(plan.n)
    w_delta_f = w @ delta_f
    denom = float(delta_f @ w_delta_f)
    if denom == 0.0:
        raise DegeneratePlanError("residual stage denominator is zero")
    return delta_f, w_delta_f, denom


def _chain(obs: PhaseObservation):
    """Shared chain kernel: beat phases in turns and the integer chain."""
    _, ratios, _ = _ws_beat(obs.plan)
    phases = obs.phases_rad
    bp = _wrap_arr(float(phases[0]) - phases[1:]) * _INV_TWO_PI
    bp_list = bp.tolist()
    m_chain = [0]
    m = 0.0
    floor = math.floor
    for i in range(len(bp_list) - 1):
        v = (m + bp_list[i]) * ratios[i] - bp_list[i + 1]
        m = floor(v + 0.5) if v >= 0.0 else -floor(0.5 - v)
        m_chain.append(int(m))
    return m_chain, bp_list


def bw_fold_chain(obs: PhaseObservation) -> np.ndarray:
    """Sequential beat-wavelength folding integers M_1..M_{N-1} (M_1 = 0).

    Wrong integers under heavy noise are a statistical outcome, not an
    error; correctness assumes |true range| < UMR/2.
    """
    m_chain, _ = _chain(obs)
    return np.array(m_chain, dtype=np.int64)


def coarse_estimate(obs: PhaseObservation):
    """First-stage coarse range: unwrap at the finest beat wavelength.

    Returns (L_c, m_chain). Conditional on a correct chain the error lies
    within +/- c/(2B).
    """
    beat_lam_last = _ws_beat(obs.plan)[2]
    m_chain, bp_list = _chain(obs)
    l_c = (m_chain[-1] + bp_list[-1]) * beat_lam_last
    return l_c, np.array(m_chain, dtype=np.int64)


def compensate_phases(obs: PhaseObservation, l_c: float) -> np.ndarray:
    """Remove the coarse range from every phase: wrap(phi_i - 2*pi*l_c/lambda_i)."""
    two_pi_inv_lam = _ws_basic(obs.plan)[3]
    return _wrap_arr(obs.phases_rad - l_c * two_pi_inv_lam)


def build_residual_system(compensated_rad, plan: FrequencyPlan) -> ResidualSystem:
    """Assemble the residual-stage system for inspection or testing."""
    comp = np.asarray(compensated_rad, dtype=float)
    if comp.size != plan.n:
        raise InvalidArgumentError("compensated phase count does not match plan")
    freqs = np.array(plan.freqs_hz)
    return ResidualSystem(
        delta_f_hz=-np.diff(freqs),
        delta_phi_rad=wrap_phase(comp[:-1] - comp[1:]),
        w_matrix=build_w(plan.n),
        compensated_rad=comp,
    )


def residual_estimate(compensated_rad, plan: FrequencyPlan) -> float:
    """Closed-form residual range from compensated phases.

    Weighted least squares over the adjacent wrapped differences of the
    compensated phases:

        L_r = (c / 2*pi) * (df' W dphi) / (df' W df)

    The closed form is exact only for residuals inside +/- c/(2B); outside
    that regime a value is still returned, and the failure shows up
    statistically rather than as an error.
    """
    delta_f, w_delta_f, denom = _ws_residual(plan)
    comp = np.asarray(compensated_rad, dtype=float)
    if comp.size != plan.n:
        raise InvalidArgumentError("compensated phase count does not match plan")
    dphi = wrap_phase(comp[:-1] - comp[1:])
    return (plan.c_m_s / TWO_PI) * float(w_delta_f @ dphi) / denom


def _alignment_cost(l_grid: np.ndarray, freqs: np.ndarray, comp: np.ndarray, c: float) -> np.ndarray:
    ang = (TWO_PI / c) * np.outer(l_grid, freqs) - comp[None, :]
    z = np.exp(1j * ang).sum(axis=1)
    return (z * z.conj()).real


def cost_grid_oracle(
    compensated_rad,
    plan: FrequencyPlan,
    span_m: float | None = None,
    step_m: float | None = None,
) -> float:
    """Brute-force residual estimate: grid search over the alignment cost.

    Maximizes |sum_i exp(j(2*pi*f_i*L/c - phi_i))|^2 on a grid spanning
    ``span_m`` with spacing ``step_m`` (defaults 2c/B and c/(200B)), then
    refines around the best grid point by golden-section search to well
    below step/100. Slow by construction; exists as an independent check
    of :func:`residual_estimate`.
    """
    comp = np.asarray(compensated_rad, dtype=float)
    c = plan.c_m_s
    b = plan.bandwidth_hz
    if b <= 0.0:
        raise DegeneratePlanError("grid oracle needs a positive bandwidth")
    if span_m is None:
        span_m = 2.0 * c / b
    if step_m is None:
        step_m = c / (200.0 * b)
    if step_m <= 0.0:
        raise InvalidArgumentError("step must be positive")
    if span_m < c / b:
        raise InvalidArgumentError("span must cover at least c/B")
    freqs = np.array(plan.freqs_hz)
    grid = np.arange(-span_m / 2.0, span_m / 2.0 + step_m / 2.0, step_m)
    costs = _alignment_cost(grid, freqs, comp, c)
    x0 = float(grid[int(np.argmax(costs))])

    # Golden-section refinement; 40 halvings shrink the bracket far below step/100.
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b_hi = x0 - step_m, x0 + step_m
    x1 = b_hi - gr * (b_hi - a)
    x2 = a + gr * (b_hi - a)
    f1 = float(_alignment_cost(np.array([x1]), freqs, comp, c)[0])
    f2 = float(_alignment_cost(np.array([x2]), freqs, comp, c)[0])
    for _ in range(40):
        if f1 < f2:
            a = x1
            x1, f1 = x2, f2
            x2 = a + gr * (b_hi - a)
            f2 = float(_alignment_cost(np.array([x2]), freqs, comp, c)[0])
        else:
            b_hi = x2
            x2, f2 = x1, f1
            x1 = b_hi - gr * (b_hi - a)
            f1 = float(_alignment_cost(np.array([x1]), freqs, comp, c)[0])
    return (a + b_hi) / 2.0


def fold_integers(obs: PhaseObservation, l_m: float) -> np.ndarray:
    """Folding integers at every wavelength implied by the range guess ``l_m``."""
    _, inv_lam, _, _ = _ws_basic(obs.plan)
    x = l_m * inv_lam - obs.phases_rad * _INV_TWO_PI
    return _round_half_away_arr(x).astype(np.int64)


def build_ls_system(obs: PhaseObservation, fold_ints) -> LsSystem:
    """Assemble the final-fit system for inspection or testing."""
    inv_lam = _ws_basic(obs.plan)[1]
    m_f = np.asarray(fold_ints, dtype=float) + obs.phases_rad * _INV_TWO_PI
    return LsSystem(inv_wavelengths=inv_lam.copy(), m_f=m_f)


def ls_refine(obs: PhaseObservation, fold_ints) -> float:
    """Scalar least-squares range over all phases for a fixed integer branch.

    Minimizes sum_i (2*pi*L/lambda_i - phi_i - 2*pi*m_i)^2; the minimizer is
    the quotient (sum_i m_f_i/lambda_i) / (sum_i lambda_i^-2).
    """
    _, inv_lam, inv_sq_sum, _ = _ws_basic(obs.plan)
    m_f = np.asarray(fold_ints, dtype=float) + obs.phases_rad * _INV_TWO_PI
    return float(inv_lam @ m_f) / inv_sq_sum


def _delta(l_final: float, obs: PhaseObservation):
    return None if obs.truth_m is None else l_final - obs.truth_m


def bw_estimate(obs: PhaseObservation) -> EstimateTrace:
    """Classical chain estimate, including the final rounding step at lambda_0.

    The trace's residual field is 0 and its fold integers are the ones the
    final range implies at every wavelength (index 0 is the rounded m_0).
    """
    lam, inv_lam, _, _ = _ws_basic(obs.plan)
    beat_lam_last = _ws_beat(obs.plan)[2]
    m_chain, bp_list = _chain(obs)
    l_c = (m_chain[-1] + bp_list[-1]) * beat_lam_last
    lam0 = float(lam[0])
    phi0_turns = float(obs.phases_rad[0]) * _INV_TWO_PI
    m0 = _round_half_away(
        (m_chain[-1] + bp_list[-1]) * (beat_lam_last / lam0) - phi0_turns
    )
    l_final = (m0 + phi0_turns) * lam0
    fold = _round_half_away_arr(l_final * inv_lam - obs.phases_rad * _INV_TWO_PI)
    return EstimateTrace(
        method="bw",
        m_chain=tuple(m_chain),
        l_coarse_m=l_c,
        l_residual_m=0.0,
        l_mid_m=l_c + 0.0,
        fold_ints=tuple(int(v) for v in fold.tolist()),
        l_final_m=l_final,
        delta_m=_delta(l_final, obs),
    )


def concerto_estimate(obs: PhaseObservation) -> EstimateTrace:
    """Three-stage estimate: coarse chain, residual correction, final fit.

    Assumes |true range| < UMR/2; the only raised errors are degenerate-plan
    conditions propagated from the stage kernels.
    """
    plan = obs.plan
    _, inv_lam, inv_sq_sum, two_pi_inv_lam = _ws_basic(plan)
    beat_lam_last = _ws_beat(plan)[2]
    _, w_delta_f, denom = _ws_residual(plan)
    phases = obs.phases_rad

    m_chain, bp_list = _chain(obs)
    l_c = (m_chain[-1] + bp_list[-1]) * beat_lam_last

    comp = _wrap_arr(phases - l_c * two_pi_inv_lam)
    dphi = _wrap_arr(comp[:-1] - comp[1:])
    l_r = (plan.c_m_s / TWO_PI) * float(w_delta_f @ dphi) / denom
    l_m = l_c + l_r

    phase_turns = phases * _INV_TWO_PI
    fold = _round_half_away_arr(l_m * inv_lam - phase_turns)
    l_final = float(inv_lam @ (fold + phase_turns)) / inv_sq_sum
    return EstimateTrace(
        method="concerto",
        m_chain=tuple(m_chain),
        l_coarse_m=l_c,
        l_residual_m=l_r,
        l_mid_m=l_m,
        fold_ints=tuple(int(v) for v in fold.tolist()),
        l_final_m=l_final,
        delta_m=_delta(l_final, obs),
    )


_EF_CHUNK = 4096
_EF_LOCAL = threading.local()


def _ef_scratch(cols: int):
    # Per-thread chunk buffers keep the candidate scan reentrant without
    # paying an allocation (and page-fault) per estimate.
    cached = getattr(_EF_LOCAL, "buffers", None)
    if cached is None or cached[0].shape[1] != cols:
        cached = (np.empty((_EF_CHUNK, cols)), np.empty((_EF_CHUNK, cols)))
        _EF_LOCAL.buffers = cached
    return cached


def ef_estimate(obs: PhaseObservation, k_m: float | None = None) -> EstimateTrace:
    """Excess-fractions estimate over the search range ``k_m``.

    Every candidate location at lambda_0 inside +/- k/2 (plus one cycle of
    guard) is scored by the summed squared distance of its implied folding
    fractions to the nearest integers; the winner is refined by the final
    least-squares fit. Cost is linear in k.
    """
    plan = obs.plan
    if k_m is None:
        k_m = plan.range_budget_m if plan.range_budget_m is not None else plan.umr_m
    if not (k_m > 0.0 and math.isfinite(k_m)):
        raise InvalidArgumentError("search range must be positive and finite")
    if k_m > plan.umr_m * (1.0 + 1e-9):
        raise InvalidArgumentError(
            f"search range {k_m!r} m exceeds the unambiguous range {plan.umr_m!r} m"
        )
    lam = _ws_basic(plan)[0]
    lam0 = float(lam[0])
    phases = obs.phases_rad
    phi0_turns = float(phases[0]) * _INV_TWO_PI
    m_lo = math.ceil(-k_m / (2.0 * lam0) - 1.0)
    m_hi = math.floor(k_m / (2.0 * lam0) + 1.0)
    if m_hi < m_lo:
        raise InvalidArgumentError("empty candidate set")

    inv_lam_rest = 1.0 / lam[1:]
    targets = phases[1:] * _INV_TWO_PI
    best_score = math.inf
    best_m = m_lo
    frac, scratch = _ef_scratch(inv_lam_rest.size)
    for start in range(m_lo, m_hi + 1, _EF_CHUNK):
        stop = min(start + _EF_CHUNK - 1, m_hi)
        count = stop - start + 1
        cand = np.arange(start, stop + 1, dtype=float)
        l_cand = (cand + phi0_turns) * lam0
        f = frac[:count]
        s = scratch[:count]
        np.multiply(l_cand[:, None], inv_lam_rest[None, :], out=f)
        np.subtract(f, targets[None, :], out=f)
        np.rint(f, out=s)
        np.subtract(f, s, out=f)
        scores = np.einsum("ij,ij->i", f, f)
        local = int(np.argmin(scores))
        if scores[local] < best_score:
            best_score = float(scores[local])
            best_m = start + local

    l_cand_best = (best_m + phi0_turns) * lam0
    fold = fold_integers(obs, l_cand_best)
    l_final = ls_refine(obs, fold)

    # Beat-chain analogue implied by the final range, for trace completeness.
    beat_lam = _ws_beat(plan)[0]
    bp = _wrap_arr(float(phases[0]) - phases[1:]) * _INV_TWO_PI
    m_chain = _round_half_away_arr(l_final / beat_lam - bp)
    return EstimateTrace(
        method="ef",
        m_chain=tuple(int(v) for v in m_chain.tolist()),
        l_coarse_m=l_cand_best,
        l_residual_m=0.0,
        l_mid_m=l_cand_best + 0.0,
        fold_ints=tuple(int(v) for v in fold.tolist()),
        l_final_m=l_final,
        delta_m=_delta(l_final, obs),
    )


# ---------------------------------------------------------------------------
# Estimator registry: name -> (PhaseObservation) -> EstimateTrace.
# Immutable after startup in normal use; duplicate names are rejected.
# ---------------------------------------------------------------------------

_REGISTRY: dict = {}


def register_estimator(name: str, fn) -> None:
    if name in _REGISTRY:
        raise DuplicateEstimatorError(f"estimator {name!r} is already registered")
    _REGISTRY[name] = fn


def lookup_estimator(name: str):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownEstimatorError(
            f"unknown estimator {name!r}; registered: {sorted(_REGISTRY)}"
        ) from None


def registered_estimators() -> tuple:
    return tuple(sorted(_REGISTRY))


register_estimator("bw", bw_estimate)
register_estimator("concerto", concerto_estimate)
register_estimator("ef", ef_estimate)
