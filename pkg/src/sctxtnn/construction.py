"""Exact realization of a contextual linear model as an EXACT-mode SCtxtNN.

The network uses one pair of gated hidden units per context. Units 1-2 carry
the first context's linear model; pair j (j >= 2) carries the successive
difference between contexts j and j-1. Gates fire (value 1) exactly when
x_p lies left of the pair's cut point, and a strongly negative injection
weight then drives the unit's ReLU output to exactly zero. With output
weights alternating +1/-1, the active pairs telescope to the current
context's regression function, so the network output equals the true
function everywhere on S x T.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    ContextualLinearModel,
    RegressorDomain,
    evaluate_true_batch,
)
from .networks import GateMode, SCtxtNNParams, forward_sctxtnn_batch

CUT_PROBE_OFFSET = 1e-9
DEFAULT_GRID_DENSITY = 200


class ConstructionVerificationError(AssertionError):
    """A constructed network violated an activation-state invariant."""


@dataclass(frozen=True)
class UnitRecord:
    """Bookkeeping for one gated hidden unit of a constructed network."""

    unit: int  # 1-based index in 1..2c
    carried_coefficients: np.ndarray  # length r (zeros for offset units)
    carried_intercept: float
    bias_margin: float  # supremum term guaranteeing a nonnegative pre-activation
    suppression_weight: float

    def to_json_dict(self) -> dict:
        return {
            "unit": self.unit,
            "carried_coefficients": self.carried_coefficients.tolist(),
            "carried_intercept": self.carried_intercept,
            "bias_margin": self.bias_margin,
            "suppression_weight": self.suppression_weight,
        }


@dataclass(frozen=True)
class ConstructionReport:
    params: SCtxtNNParams
    unit_records: tuple[UnitRecord, ...]
    max_abs_error: float  # NaN until measured by verify_construction

    def to_json_dict(self) -> dict:
        return {
            "params": self.params.to_json_dict(),
            "unit_records": [u.to_json_dict() for u in self.unit_records],
            "max_abs_error": self.max_abs_error,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ConstructionReport":
        records = tuple(
            UnitRecord(
                unit=int(u["unit"]),
                carried_coefficients=np.asarray(u["carried_coefficients"], dtype=np.float64),
                carried_intercept=float(u["carried_intercept"]),
                bias_margin=float(u["bias_margin"]),
                suppression_weight=float(u["suppression_weight"]),
            )
            for u in d["unit_records"]
        )
        return cls(
            params=SCtxtNNParams.from_json_dict(d["params"]),
            unit_records=records,
            max_abs_error=float(d["max_abs_error"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "ConstructionReport":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))


def sup_abs_linear(beta: np.ndarray, domain: RegressorDomain) -> float:
    """Exact supremum of |beta . x| over the hyperrectangle.

    A linear functional attains its extrema at vertices, coordinate by
    coordinate: the maximum of beta . x picks max(beta_k lo_k, beta_k hi_k)
    per axis and the minimum picks the other endpoint, so the supremum of
    the absolute value is the larger magnitude of those two signed sums.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (domain.num_regressors,):
        raise ValueError("beta length must match the regressor domain")
    lo_term = beta * domain.bounds[:, 0]
    hi_term = beta * domain.bounds[:, 1]
    highest = float(np.sum(np.maximum(lo_term, hi_term)))
    lowest = float(np.sum(np.minimum(lo_term, hi_term)))
    return max(highest, -lowest)


def _paper_suppression_constant(model: ContextualLinearModel, domain: RegressorDomain) -> float:
    # global constant -2 sup_i { sup_S |beta_i . x| + 2 |beta_i0| }
    worst = max(
        sup_abs_linear(model.coefficients[i], domain) + 2.0 * abs(float(model.intercepts[i]))
        for i in range(model.num_contexts)
    )
    return -2.0 * worst


def construct_exact(
    model: ContextualLinearModel,
    domain: RegressorDomain,
    suppression: str = "per-unit",
    grid_density: int | None = DEFAULT_GRID_DENSITY,
) -> ConstructionReport:
    """Build EXACT-mode parameters reproducing the model on S x T.

    suppression selects the gate-injection constants: "per-unit" uses
    -(bias_j + sup_S |w_j . x| + 1) which is sufficient for every unit;
    "paper-global" uses one shared constant (see module notes) kept for
    comparison. If grid_density is not None the construction is verified
    and max_abs_error filled in; pass None to skip verification.
    """
    if domain.num_regressors != model.num_regressors:
        raise ValueError("regressor domain dimension must match the model")
    if suppression not in ("per-unit", "paper-global"):
        raise ValueError(f"unknown suppression rule {suppression!r}")
    c, r = model.num_contexts, model.num_regressors
    m = 2 * c
    cuts = model.cut_points  # z_1 .. z_{c+1} with z_1 = t_lo

    ctx_w = np.full(m, -1.0)
    ctx_b = np.empty(m)
    W1 = np.zeros((r, m))
    b1 = np.empty(m)
    records = []

    for j in range(1, c + 1):
        odd, even = 2 * j - 2, 2 * j - 1  # 0-based columns of the pair
        # gate fires iff x_p < z_j; pair 1 uses z_1 = t_lo so it never fires on T
        ctx_b[odd] = ctx_b[even] = cuts[j - 1]
        if j == 1:
            delta = model.coefficients[0].copy()
            d0 = float(model.intercepts[0])
        else:
            delta = model.coefficients[j - 1] - model.coefficients[j - 2]
            d0 = float(model.intercepts[j - 1] - model.intercepts[j - 2])
        margin = abs(d0) + sup_abs_linear(delta, domain)
        W1[:, odd] = delta
        b1[odd] = d0 + margin
        b1[even] = margin  # offsets the odd unit's bias: b_even = b_odd - d0
        records.append(UnitRecord(odd + 1, delta.copy(), d0, margin, np.nan))
        records.append(UnitRecord(even + 1, np.zeros(r), d0, margin, np.nan))

    if suppression == "paper-global":
        inj = np.full(m, _paper_suppression_constant(model, domain))
    else:
        inj = np.array([
            -(b1[j] + sup_abs_linear(W1[:, j], domain) + 1.0) for j in range(m)
        ])
    records = tuple(replace(u, suppression_weight=float(inj[u.unit - 1])) for u in records)

    out_w = np.tile([1.0, -1.0], c)
    params = SCtxtNNParams(
        ctx_weights=ctx_w,
        ctx_biases=ctx_b,
        gate_injection=inj,
        hidden_weights=W1,
        hidden_biases=b1,
        out_weights=out_w,
        out_bias=0.0,
    )
    report = ConstructionReport(params=params, unit_records=records, max_abs_error=float("nan"))
    if grid_density is not None:
        err = verify_construction(report, model, domain, grid_density)
        report = replace(report, max_abs_error=err)
    return report


def _verification_grid(model: ContextualLinearModel, domain: RegressorDomain,
                       grid_density: int) -> np.ndarray:
    t_lo, t_hi = model.domain
    xp_vals = [np.linspace(t_lo, t_hi, grid_density)]
    for z in model.interior_cuts:
        probes = np.array([z - CUT_PROBE_OFFSET, z, z + CUT_PROBE_OFFSET])
        xp_vals.append(np.clip(probes, t_lo, t_hi))
    xp = np.unique(np.concatenate(xp_vals))
    axes = [np.linspace(lo, hi, grid_density) for lo, hi in domain.bounds]
    reg_points = np.array(list(itertools.product(*axes)))
    n_reg, n_xp = reg_points.shape[0], xp.shape[0]
    X = np.empty((n_reg * n_xp, domain.num_regressors + 1))
    X[:, :-1] = np.repeat(reg_points, n_xp, axis=0)
    X[:, -1] = np.tile(xp, n_reg)
    return X


def verify_construction(
    report: ConstructionReport,
    model: ContextualLinearModel,
    domain: RegressorDomain,
    grid_density: int = DEFAULT_GRID_DENSITY,
) -> float:
    """Compare the constructed network against the true function on a grid.

    The grid covers S x T at grid_density points per axis plus probes on both
    sides of every interior cut. Returns the maximum absolute discrepancy.
    Also checks the activation-state invariants: units whose gate fires have
    hidden activation exactly 0, and units with a silent gate have a
    nonnegative pre-activation (up to rounding), so their ReLU is affine.
    """
    if grid_density < 2:
        raise ValueError("grid_density must be at least 2")
    X = _verification_grid(model, domain, grid_density)
    truth = evaluate_true_batch(model, X)
    out, gates, hidden, pre = forward_sctxtnn_batch(report.params, GateMode.exact(), X)

    fired = gates == 1.0
    if np.any(hidden[fired] != 0.0):
        raise ConstructionVerificationError("a suppressed unit has nonzero activation")
    if np.any(pre[~fired] < -1e-12):
        raise ConstructionVerificationError("an active unit has a negative pre-activation")
    return float(np.max(np.abs(out - truth)))
