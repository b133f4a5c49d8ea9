"""Construction and validation of measurement frequency patterns.

Two designed families are supported:

  * ``concerto``: the offsets f_0 - f_i form a geometric chain with common
    ratio r = (B*K/c)^(1/(N-2)), which pins the unambiguous range
    c/(f_0 - f_1) to the range budget K and equalizes the noise
    amplification of every rounding step in the coarse chain.
  * ``bw``: the classical chain whose common ratio is f_0/B, so that the
    last step (unwrapping at lambda_0 itself) is also covered.

Plans are stored at full floating precision; no synthesizer grid rounding.
"""

from __future__ import annotations

import math

from .core import FrequencyPlan
from .errors import InfeasibleDesignError, InvalidArgumentError

#: Relative tolerance for the common-ratio structure of designed plans.
RATIO_RTOL = 1e-9


def design_concerto_plan(
    f_high_hz: float,
    f_low_hz: float,
    n: int,
    k_m: float,
    c_m_s: float,
) -> FrequencyPlan:
    """Design an N-frequency geometric-offset plan covering range budget ``k_m``.

    The ratio is set with equality, r = (B*K/c)^(1/(N-2)), which makes the
    unambiguous range equal to K (up to rounding) and minimizes the noise
    amplification per chain step.
    """
    if n < 3:
        raise InvalidArgumentError(f"designed patterns need n >= 3, got {n}")
    if not (f_high_hz > f_low_hz > 0.0):
        raise InvalidArgumentError("need f_high > f_low > 0")
    if not (k_m > 0.0 and math.isfinite(k_m)):
        raise InvalidArgumentError("range budget must be positive and finite")
    b = f_high_hz - f_low_hz
    bk_over_c = b * k_m / c_m_s
    if bk_over_c <= 1.0:
        raise InfeasibleDesignError(
            f"bandwidth-range product B*K/c = {bk_over_c:.6g} <= 1: "
            "geometric pattern degenerates (r <= 1)"
        )
    r = bk_over_c ** (1.0 / (n - 2))
    freqs = [f_high_hz]
    for i in range(1, n - 1):
        freqs.append(f_high_hz - b * r ** (-(n - 1 - i)))
    freqs.append(f_low_hz)
    return FrequencyPlan(
        freqs_hz=tuple(freqs),
        c_m_s=c_m_s,
        pattern_kind="concerto",
        range_budget_m=float(k_m),
        ratio=r,
    )


def design_bw_plan(
    f_high_hz: float,
    bandwidth_hz: float,
    n: int,
    c_m_s: float,
) -> FrequencyPlan:
    """Design the classical chain pattern with common ratio f_0/B.

    The range budget is set to the resulting unambiguous range
    (c/B)*(f_0/B)^(N-2); there is no independent K for this family.
    """
    if n < 3:
        raise InvalidArgumentError(f"designed patterns need n >= 3, got {n}")
    if not (f_high_hz > bandwidth_hz > 0.0):
        raise InvalidArgumentError("need f_high > bandwidth > 0")
    rho = f_high_hz / bandwidth_hz
    freqs = [f_high_hz]
    for i in range(1, n):
        freqs.append(f_high_hz - bandwidth_hz * rho ** (-(n - 1 - i)))
    budget = (c_m_s / bandwidth_hz) * rho ** (n - 2)
    return FrequencyPlan(
        freqs_hz=tuple(freqs),
        c_m_s=c_m_s,
        pattern_kind="bw",
        range_budget_m=budget,
        ratio=rho,
    )


def umr(plan: FrequencyPlan) -> float:
    """Unambiguous measurement range of a plan, c/(f_0 - f_1)."""
    return plan.umr_m


def validate_plan(plan: FrequencyPlan) -> list:
    """Check every plan invariant, returning a list of violation strings.

    An empty list means the plan is valid. Each violation names the broken
    invariant and, where applicable, the offending index. Violations are
    data, not errors: broken plans are inspectable.
    """
    violations = []
    freqs = plan.freqs_hz
    n = plan.n

    for i, f in enumerate(freqs):
        if f <= 0.0:
            violations.append(f"positivity: freqs_hz[{i}] = {f!r} is not positive")
    ordered = True
    for i in range(n - 1):
        if not freqs[i] > freqs[i + 1]:
            ordered = False
            violations.append(
                f"frequency-order: freqs_hz[{i + 1}] = {freqs[i + 1]!r} is not "
                f"strictly below freqs_hz[{i}] = {freqs[i]!r}"
            )

    lam = plan.wavelengths_m
    for i in range(n):
        if abs(lam[i] * freqs[i] - plan.c_m_s) > 1e-12 * plan.c_m_s:
            violations.append(f"wavelength-consistency: index {i}")

    designed = plan.pattern_kind in ("concerto", "bw")
    if designed and n < 3:
        violations.append(f"frequency-count: designed pattern has n = {n} < 3")
    if designed and plan.ratio is None:
        violations.append("ratio-missing: designed pattern lacks its common ratio")

    if designed and ordered and n >= 3 and plan.ratio is not None:
        # Offset chain (f_0 - f_{i+1})/(f_0 - f_i) must equal the stored ratio.
        for i in range(1, n - 1):
            lo = freqs[0] - freqs[i]
            hi = freqs[0] - freqs[i + 1]
            if lo == 0.0:
                violations.append(f"ratio-mismatch: zero offset at index {i}")
                continue
            if abs(hi / lo - plan.ratio) > RATIO_RTOL * plan.ratio:
                violations.append(
                    f"ratio-mismatch: (f_0-f_{i + 1})/(f_0-f_{i}) = {hi / lo!r} "
                    f"differs from r = {plan.ratio!r} beyond {RATIO_RTOL:g} relative"
                )
        if plan.pattern_kind == "bw":
            rho = freqs[0] / plan.bandwidth_hz
            if abs(plan.ratio - rho) > RATIO_RTOL * rho:
                violations.append(
                    f"ratio-mismatch: stored ratio {plan.ratio!r} differs from f_0/B = {rho!r}"
                )

    if plan.pattern_kind == "concerto":
        if plan.range_budget_m is None:
            violations.append("range-budget-missing: concerto pattern lacks K")
        elif ordered and n >= 2:
            if plan.umr_m < plan.range_budget_m * (1.0 - RATIO_RTOL):
                violations.append(
                    f"umr-below-budget: UMR = {plan.umr_m!r} m is below "
                    f"K = {plan.range_budget_m!r} m"
                )
    return violations


# ---------------------------------------------------------------------------
# Plan file format: the `design` output re-ingested (self-round-tripping CSV).
# ---------------------------------------------------------------------------

def plan_to_csv(plan: FrequencyPlan) -> str:
    """Render a plan as CSV: one comment header line, then index,f_hz,lambda_m rows."""
    meta = [
        f"pattern={plan.pattern_kind}",
        f"n={plan.n}",
        f"c_m_s={plan.c_m_s!r}",
        f"bandwidth_hz={plan.bandwidth_hz!r}",
        f"ratio={'none' if plan.ratio is None else repr(plan.ratio)}",
        f"range_budget_m={'none' if plan.range_budget_m is None else repr(plan.range_budget_m)}",
        f"umr_m={plan.umr_m!r}",
    ]
    lines = ["# " + ",".join(meta), "index,f_hz,lambda_m"]
    for i, (f, lam) in enumerate(zip(plan.freqs_hz, plan.wavelengths_m)):
        lines.append(f"{i},{f!r},{lam!r}")
    return "\n".join(lines) + "\n"


def plan_from_csv(text: str) -> FrequencyPlan:
    """Parse a plan written by :func:`plan_to_csv`."""
    meta = {}
    freqs = []
    saw_header = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for item in line.lstrip("#").strip().split(","):
                if "=" in item:
                    key, value = item.split("=", 1)
                    meta[key.strip()] = value.strip()
            continue
        if not saw_header:
            if line.lower().startswith("index,"):
                saw_header = True
                continue
            raise InvalidArgumentError(f"plan file: unexpected line {line!r}")
        parts = line.split(",")
        if len(parts) < 2:
            raise InvalidArgumentError(f"plan file: malformed row {line!r}")
        freqs.append(float(parts[1]))
    if not freqs:
        raise InvalidArgumentError("plan file contains no frequency rows")

    def _opt_float(key):
        value = meta.get(key, "none")
        return None if value == "none" else float(value)

    return FrequencyPlan(
        freqs_hz=tuple(freqs),
        c_m_s=float(meta.get("c_m_s", "299792458.0")),
        pattern_kind=meta.get("pattern", "explicit"),
        range_budget_m=_opt_float("range_budget_m"),
        ratio=_opt_float("ratio"),
    )
