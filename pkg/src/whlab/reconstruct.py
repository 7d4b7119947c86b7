"""Recovery of a step distribution from its half-line convolution powers.

Everything here consumes a :class:`~whlab.data.TruncatedData` and nothing
else. Four structural classes are detected and inverted:

* exponential: a geometric bound on P(S_n < 0), or a certified moment
  generating value in (1, infinity), lets the ratio statistic recover the
  transform near 0, after which the negative window is fitted by
  mass-constrained least squares;
* skip_free: the only negative mass sits at -1; the candidate is forced by
  the mass deficit and accepted by exact forward consistency;
* triangular: a gap pattern (positive support starting at a+b, second
  power vanishing through a) makes the one-sided correlation system
  triangular and exactly solvable;
* discrete_cm: a completely monotone positive part turns the correlation
  sequence into a finite Hausdorff moment problem solved through its
  geometric atoms, cross-checked against direct kernel inversion.

A dispatcher runs all detectors and labels by precedence exact-before-
approximate. Reported residuals and rank flags are the honesty layer: a
rank-deficient kernel yields a flag, never a fabricated answer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import nnls

from .data import TruncatedData, packed_restricted, truncated_data
from .errors import (
    ClassNotDetected,
    ConditioningError,
    DataInconsistencyError,
    DomainError,
)
from .ladder import (
    Drift,
    drift_classify,
    exp_moment_conditions,
    ladder_epochs_from_data,
    log_restricted_mgf,
    neg_prob_sequence,
)
from .lattice import (
    MASS_TOL,
    LatticeDist,
    convolution_power,
    convolve,
    lattice,
    restrict_nonneg,
    sup_distance,
    tv_distance,
)

CLASS_EXPONENTIAL = "exponential"
CLASS_SKIP_FREE = "skip_free"
CLASS_TRIANGULAR = "triangular"
CLASS_DISCRETE_CM = "discrete_cm"
CLASS_NONE = "none"

DETECTOR_ORDER = ("exponential", "skip_free", "triangular", "discrete_cm")
# exact classes outrank approximate ones when several detectors fire
LABEL_PRECEDENCE = (
    CLASS_SKIP_FREE,
    CLASS_TRIANGULAR,
    CLASS_EXPONENTIAL,
    CLASS_DISCRETE_CM,
)

MAX_NEG_WINDOW = 32
FIT_TOL = 1e-6
EPS_CM = 1e-10
EPS_V = 1e-8
COND_LIMIT = 1e12
# mass below this is treated as absent when reading support patterns
# (iterated large-window convolutions leave roundoff dust in support gaps)
PATTERN_TOL = 1e-12

__all__ = [
    "CLASS_EXPONENTIAL",
    "CLASS_SKIP_FREE",
    "CLASS_TRIANGULAR",
    "CLASS_DISCRETE_CM",
    "CLASS_NONE",
    "DETECTOR_ORDER",
    "ReconstructionReport",
    "HausdorffMoments",
    "CorrelationSolution",
    "detect_lattice",
    "recover_exponential",
    "recover_skipfree",
    "correlation_lhs_from_data",
    "correlation_inverse",
    "recover_cm_discrete",
    "recover_triangular",
    "extend_by_negative",
    "deconvolve_extension",
    "DeconvolvedData",
    "auto_reconstruct",
]


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    detected_class: str
    recovered: LatticeDist | None
    residuals: dict[str, float]
    diagnostics: dict[str, object]

    def to_dict(self) -> dict:
        return {
            "detected_class": self.detected_class,
            "recovered": None if self.recovered is None else self.recovered.to_dict(),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Drift):
        return obj.value
    if isinstance(obj, HausdorffMoments):
        return {
            "moments": _jsonable(obj.moments),
            "atoms": _jsonable(obj.atoms),
        }
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


@dataclass(frozen=True)
class HausdorffMoments:
    """Correlation moments b(1..M) with the geometric atoms behind them.

    When the moments are genuinely of the form sum w_i c_i^n the alternating
    finite differences of the padded sequence stay nonnegative; validity is
    checked up to roundoff through :meth:`is_completely_monotone`.
    """

    moments: np.ndarray
    atoms: tuple[tuple[float, float], ...] | None

    def is_completely_monotone(self, eps: float = EPS_CM, max_order: int = 16) -> bool:
        ok, _ = _cm_test(np.asarray(self.moments, dtype=float), eps, max_order)
        return ok


def detect_lattice(data: TruncatedData, refinement: int = 1) -> bool:
    """True iff all data mass sits on multiples of ``refinement``.

    Data observed on a lattice finer than the hypothesized integer grid is
    encoded with indices in refined units; the hypothesis holds when no
    power carries visible mass off the coarse grid.
    """
    if refinement < 1:
        raise DomainError("refinement must be a positive integer")
    for r in data.restricted:
        if r.is_zero:
            continue
        visible = r.indices()[r.weights > 1e-12]
        if np.any(visible % refinement != 0):
            return False
    return True


# -- shared assembly and fitting helpers ------------------------------------


def _dense_r1(r1: LatticeDist) -> np.ndarray:
    if r1.is_zero:
        return np.zeros(1)
    out = np.zeros(r1.max_index + 1)
    out[r1.min_index :] = r1.weights
    return out


def _first_visible(r: LatticeDist, tol: float = PATTERN_TOL) -> int | None:
    """Lowest index carrying mass above tol, None when there is none."""
    if r.is_zero:
        return None
    idx = r.indices()[r.weights > tol]
    return int(idx[0]) if idx.size else None


def _assemble(r1: LatticeDist, neg_masses: np.ndarray) -> LatticeDist:
    """Distribution with mass neg_masses[j-1] at -j and r1 on the half-line."""
    w = int(len(neg_masses))
    pos = _dense_r1(r1)
    if w == 0:
        return lattice(0, pos)
    weights = np.concatenate([np.maximum(neg_masses, 0.0)[::-1], pos])
    return lattice(-w, weights)


def _deficit(data: TruncatedData) -> float:
    d = 1.0 - data.restricted_power(1).total
    if d < -MASS_TOL:
        raise DataInconsistencyError("restricted(1) mass exceeds one by %g" % -d)
    return max(d, 0.0)


def _mass_constrained_fit(design: np.ndarray, rhs: np.ndarray, total: float):
    """Nonnegative least squares under sum(x) = total.

    The mass constraint rides along as a heavily weighted extra row, so a
    solution that cannot carry the full deficit shows up as a residual
    rather than silently rescaling. Returns (x, sup_residual, cond) with
    the residual taken over the raw equations only. Conditioning is that
    of the design restricted to the constraint surface, which is what the
    unconstrained directions actually see.
    """
    m = design.shape[1]
    if m == 0:
        sup = float(np.abs(rhs).max()) if rhs.size else 0.0
        return np.zeros(0), sup, 1.0
    if m == 1:
        x = np.array([total])
        cond = 1.0
    else:
        basis = null_space(np.ones((1, m)))
        reduced = design @ basis
        sv = np.linalg.svd(reduced, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        weight = 1e8
        stacked = np.vstack([design, weight * np.ones((1, m))])
        target = np.concatenate([rhs, [weight * total]])
        try:
            x, _ = nnls(stacked, target)
        except RuntimeError:
            return np.full(m, total / m), float("inf"), cond
    sup = float(np.abs(design @ x - rhs).max())
    return x, sup, cond


_STAB_TOL = 5e-8


def _char_ratio_points(data: TruncatedData, n_points: int = 49):
    """Characteristic-function estimates by the ratio statistic.

    Shrinks the t-interval until enough points have a stabilized ratio
    (possible whenever the geometric decay condition holds, because the
    transform tends to 1 at 0).
    """
    packed = packed_restricted(data)
    idx = np.arange(packed.shape[1])
    half_width = 1.0
    for _ in range(8):
        t = np.linspace(-half_width, half_width, n_points)
        phases = np.exp(1j * np.outer(idx, t))
        a = packed.astype(complex) @ phases
        safe = (np.abs(a[-2]) > 1e-280) & (np.abs(a[-3]) > 1e-280)
        est = np.where(safe, a[-1] / np.where(safe, a[-2], 1.0), 0.0)
        prev = np.where(safe, a[-2] / np.where(safe, a[-3], 1.0), 0.0)
        stable = safe & (np.abs(est - prev) <= _STAB_TOL * np.maximum(1.0, np.abs(est)))
        if stable.sum() >= max(16, n_points // 3):
            known = (packed[0].astype(complex) @ phases)[stable]
            return t[stable], est[stable], known
        half_width /= 2.0
    raise ConditioningError(
        "ratio statistic failed to stabilize on any characteristic grid",
        condition_number=float("inf"),
    )


def _mgf_ratio_points(data: TruncatedData, lambdas: np.ndarray):
    """Moment-generating estimates at probe lambdas with stabilized ratios."""
    pts, est, known = [], [], []
    for lam in lambdas:
        logs = log_restricted_mgf(data, lam)
        if not np.all(np.isfinite(logs[-3:])):
            continue
        ratio = float(np.exp(logs[-1] - logs[-2]))
        prev = float(np.exp(logs[-2] - logs[-3]))
        if abs(ratio - prev) <= _STAB_TOL * max(1.0, abs(ratio)):
            pts.append(float(lam))
            est.append(ratio)
            known.append(float(np.exp(logs[0])))
    return np.array(pts), np.array(est), np.array(known)


def _window_search(design_fn, rhs, total, windows, explicit: bool):
    """Accept the smallest negative window whose fit carries the deficit.

    Every candidate is solved as a nonnegative mass vector, so a window is
    accepted only when a genuine sub-distribution reproduces the transform
    data within tolerance. Nothing is ever returned on a failed fit; the
    alternative (the best-residual solution over all windows) is exactly
    the overfitted oscillating garbage ill-conditioned designs produce.
    """
    rhs_scale = max(1.0, float(np.abs(rhs).max()) if rhs.size else 1.0)
    last_cond = None
    for w in windows:
        design = design_fn(w)
        x, sup, cond = _mass_constrained_fit(design, rhs, total)
        last_cond = cond
        if cond > COND_LIMIT:
            if explicit:
                raise ConditioningError(
                    "negative-window fit is ill-conditioned",
                    condition_number=cond,
                )
            break
        mass_ok = x.size == 0 or abs(float(x.sum()) - total) <= 1e-6 * max(1.0, total)
        if sup / rhs_scale <= FIT_TOL and mass_ok:
            return x, sup, cond, w
    raise ConditioningError(
        "no negative window fits the transform data with a distribution",
        condition_number=last_cond if last_cond is not None else float("inf"),
    )


def recover_exponential(
    data: TruncatedData,
    negative_window: int | None = None,
    truth: LatticeDist | None = None,
) -> ReconstructionReport:
    """Transform-route recovery under a decay or moment certificate.

    The geometric-decay route estimates the characteristic function at
    stabilized ratio points; the moment route estimates the real transform
    at certified lambdas. Either way the negative window is fitted by
    least squares constrained to carry exactly the missing mass.
    """
    r1 = data.restricted_power(1)
    deficit = _deficit(data)
    decay = neg_prob_sequence(data)
    conditions = exp_moment_conditions(data)
    if decay.fitted_alpha is None and not conditions.condition_b:
        raise ClassNotDetected(
            "neither a geometric decay rate nor a super-unit moment "
            "generating value is certified by the data"
        )
    if data.horizon < 3:
        raise ClassNotDetected("horizon below 3 cannot stabilize the ratio statistic")

    if decay.fitted_alpha is not None:
        route = "characteristic"
        points, estimates, known = _char_ratio_points(data)
        rhs_c = estimates - known
        rhs = np.concatenate([rhs_c.real, rhs_c.imag])

        def design_fn(w: int) -> np.ndarray:
            cols = np.exp(-1j * np.outer(points, np.arange(1, w + 1)))
            return np.concatenate([cols.real, cols.imag])

    else:
        route = "mgf"
        grid = np.geomspace(
            max(conditions.b_witness / 20.0, 1e-6), conditions.lambda_cap, 40
        )
        lambdas = np.unique(np.concatenate([[conditions.b_witness], grid]))
        points, estimates, known = _mgf_ratio_points(data, lambdas)
        if len(points) < 4:
            raise ConditioningError(
                "too few stabilized moment-generating probes",
                condition_number=float("inf"),
            )
        rhs = estimates - known

        def design_fn(w: int) -> np.ndarray:
            return np.exp(-np.outer(points, np.arange(1, w + 1)))

    windows = [negative_window] if negative_window is not None else list(
        range(0, MAX_NEG_WINDOW + 1)
    )
    x, sup, cond, width = _window_search(
        design_fn, rhs, deficit, windows, explicit=negative_window is not None
    )
    recovered = _assemble(r1, x)
    residuals = {
        "fit_residual": sup,
        "relative_residual": sup / max(1.0, float(np.abs(rhs).max()) if rhs.size else 1.0),
        "deficit": deficit,
    }
    if truth is not None:
        residuals["tv_distance"] = tv_distance(recovered, truth)
    diagnostics = {
        "route": route,
        "negative_window": width,
        "alpha": decay.fitted_alpha,
        "alpha_r_squared": decay.r_squared,
        "b_witness": conditions.b_witness,
        "n_transform_points": int(len(points)),
        "condition_number": cond,
    }
    return ReconstructionReport(CLASS_EXPONENTIAL, recovered, residuals, diagnostics)


# -- skip-free detection -----------------------------------------------------


def _skipfree_identity_diagnostics(data: TruncatedData) -> dict[str, object]:
    """Renewal-identity diagnostics for the skip-free hypothesis.

    The overshoot tails of the upward first passage satisfy
    P(S_tau > n, tau < inf) = sum_r v(r) P(S_1 > n + r) with v identically
    one exactly in the downward skip-free non-drifting case. Both the
    deviation of the v = 1 prediction and a least-squares solve for v are
    reported; a short positive support leaves the system rank-deficient,
    which is flagged rather than solved.
    """
    r1 = data.restricted_power(1)
    k_top = r1.max_index if not r1.is_zero else 0
    if k_top <= 0:
        return {"v_rank": 0, "v_rank_deficient": True, "v_band": 1.0}
    table = ladder_epochs_from_data(data, height_cap=k_top)
    pos = _dense_r1(r1)
    tail1 = np.concatenate([np.cumsum(pos[::-1])[::-1][1:], [0.0]])
    lhs = np.array([table[:, n + 1 :].sum() for n in range(k_top)])
    band = float(max(0.0, 1.0 - table.sum()))

    pred = np.array([tail1[n:].sum() for n in range(k_top)])
    identity_dev = float(np.abs(lhs - pred).max())

    n_cols = max(1, k_top - 1)
    design = np.zeros((k_top, n_cols))
    for n in range(k_top):
        for r in range(1, n_cols + 1):
            if n + r < k_top:
                design[n, r - 1] = tail1[n + r]
    rank = int(np.linalg.matrix_rank(design, tol=1e-12))
    out: dict[str, object] = {
        "v_identity_dev": identity_dev,
        "v_band": band,
        "v_rank": rank,
        "v_rank_deficient": rank < n_cols,
    }
    if rank == n_cols:
        v_hat, *_ = np.linalg.lstsq(design, lhs - tail1[:k_top], rcond=None)
        out["v_hat"] = v_hat
        out["v_max_deviation"] = float(np.abs(v_hat - 1.0).max()) if v_hat.size else 0.0
    return out


def recover_skipfree(
    data: TruncatedData,
    truth: LatticeDist | None = None,
    consistency_tol: float = 1e-9,
) -> ReconstructionReport:
    """Detect and invert the class with negative support exactly {-1}.

    The mass deficit of restricted(1) pins the only admissible candidate,
    which is accepted iff its forward powers reproduce every observed
    restricted power. Walks drifting to +infinity are routed to the
    transform-based recovery instead, where a decay certificate is
    guaranteed to exist.
    """
    drift = drift_classify(data)
    if drift is Drift.PLUS:
        report = recover_exponential(data, truth=truth)
        diagnostics = dict(report.diagnostics)
        diagnostics["routed_from"] = "skip_free"
        diagnostics["drift"] = drift
        return ReconstructionReport(
            report.detected_class, report.recovered, report.residuals, diagnostics
        )

    r1 = data.restricted_power(1)
    deficit = _deficit(data)
    candidate = _assemble(r1, np.array([deficit]) if deficit > 0.0 else np.zeros(0))
    forward = truncated_data(candidate, data.horizon)
    consistency = max(
        sup_distance(forward.restricted_power(n), data.restricted_power(n))
        for n in range(1, data.horizon + 1)
    )
    diagnostics: dict[str, object] = {"drift": drift}
    diagnostics.update(_skipfree_identity_diagnostics(data))
    residuals = {"consistency_sup": consistency, "deficit": deficit}
    if consistency <= consistency_tol:
        if truth is not None:
            residuals["tv_distance"] = tv_distance(candidate, truth)
        return ReconstructionReport(CLASS_SKIP_FREE, candidate, residuals, diagnostics)
    diagnostics["reject_reason"] = (
        "forward powers of the mass-deficit candidate do not match the data"
    )
    return ReconstructionReport(CLASS_NONE, None, residuals, diagnostics)


# -- one-sided correlation ---------------------------------------------------


def correlation_lhs_from_data(data: TruncatedData) -> np.ndarray:
    """b(n) = (restricted(2)(n) - sum_{k=1}^{n-1} r1(n-k) r1(k)) / 2, n >= 1.

    Equals the one-sided correlation sum_{j>=0} mu(-j) mu(n+j): the second
    power sees ordered pairs of signed summands once each, the subtraction
    removes the pairs with both parts observable, and the half undoes the
    two orderings of a mixed pair.
    """
    if data.horizon < 2:
        raise DomainError("correlation sequence needs horizon >= 2")
    r1 = data.restricted_power(1)
    r2 = data.restricted_power(2)
    length = max(r2.max_index if not r2.is_zero else 0, 1)
    pos = _dense_r1(r1)
    auto = np.convolve(pos, pos)
    out = np.zeros(length)
    for n in range(1, length + 1):
        inner = auto[n] if n < len(auto) else 0.0
        # remove pairs (k, n-k) with k = 0 and k = n: those involve mu(0..n)
        # only through the j = 0 correlation term, which stays
        boundary = 0.0
        if n < len(pos):
            boundary = 2.0 * pos[0] * pos[n]
        out[n - 1] = 0.5 * (r2.mass(n) - (inner - boundary))
    return out


@dataclass(frozen=True)
class CorrelationSolution:
    lags: np.ndarray
    masses: np.ndarray
    residual_sup: float
    residual_l2: float
    rank: int
    rank_deficient: bool
    reg_used: float
    condition_number: float


def _correlation_solve(design, b, deficit: float, reg: float, start_lag: int):
    """Constrained nonnegative solve of one design; escalates reg on failure."""
    n_lags = design.shape[1]
    sv = np.linalg.svd(design, compute_uv=False)
    top = float(sv[0]) if sv.size else 0.0
    rank = int(np.sum(sv > max(top, 1.0) * 1e-10)) if top > 0 else 0
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else float("inf")

    ladder = [reg]
    if reg == 0.0:
        if cond > COND_LIMIT:
            ladder = [1e-10, 1e-8, 1e-6]
        else:
            ladder = [0.0, 1e-10, 1e-8, 1e-6]
    scale = max(top, 1.0)
    mass_row = np.full((1, n_lags), 1e3 * scale)
    x = None
    reg_used = ladder[-1]
    for reg_used in ladder:
        stacked = np.vstack([design, mass_row])
        target = np.concatenate([b, [1e3 * scale * deficit]])
        if reg_used > 0.0:
            stacked = np.vstack([stacked, np.sqrt(reg_used) * np.eye(n_lags)])
            target = np.concatenate([target, np.zeros(n_lags)])
        try:
            x, _ = nnls(stacked, target)
            break
        except RuntimeError:
            continue
    if x is None:
        raise ConditioningError(
            "nonnegative solver failed at every regularization level",
            condition_number=cond,
        )
    total = float(x.sum())
    if deficit > 0.0 and total > 0.0:
        x = x * (deficit / total)
    fit = design @ x - b
    return CorrelationSolution(
        lags=np.arange(start_lag, start_lag + n_lags),
        masses=x,
        residual_sup=float(np.abs(fit).max()),
        residual_l2=float(np.linalg.norm(fit)),
        rank=rank,
        rank_deficient=rank < n_lags,
        reg_used=reg_used,
        condition_number=cond,
    )


def correlation_inverse(
    kernel: LatticeDist,
    b,
    deficit: float,
    reg: float = 0.0,
    max_lag: int | None = None,
    start_lag: int = 1,
) -> CorrelationSolution:
    """Nonnegative inversion of the one-sided correlation against a kernel.

    Solves b(n) ~ sum_j x_j kernel(n + j) for lags j = start_lag.. under
    x >= 0 and sum x = deficit. With max_lag given, exactly that window is
    solved. Otherwise lag windows grow from 1 and the smallest window that
    explains the data wins, which keeps an underdetermined wide system from
    inventing deep tail mass. The design rank at the reported window comes
    from its singular values; regularization escalates automatically when
    the solve degrades, and is always reported.
    """
    if kernel.is_zero:
        raise DomainError("kernel must be nonzero")
    if kernel.min_index < 0:
        raise DomainError("kernel must live on the nonnegative lattice")
    if deficit < -MASS_TOL:
        raise DataInconsistencyError("negative mass deficit %g" % deficit)
    deficit = max(deficit, 0.0)
    b = np.asarray(b, dtype=float)
    n_rows = len(b)
    if n_rows == 0:
        raise DomainError("empty correlation sequence")
    widest = max_lag if max_lag is not None else min(n_rows, 16)
    if widest < 1:
        raise DomainError("max_lag must be at least 1")
    full = np.zeros((n_rows, widest))
    for n in range(1, n_rows + 1):
        for j in range(widest):
            full[n - 1, j] = kernel.mass(n + start_lag + j)

    if max_lag is not None:
        return _correlation_solve(full, b, deficit, reg, start_lag)

    b_scale = max(1.0, float(np.abs(b).max()))
    best = None
    for w in range(1, widest + 1):
        sol = _correlation_solve(full[:, :w], b, deficit, reg, start_lag)
        if best is None or sol.residual_sup < best.residual_sup:
            best = sol
        if sol.residual_sup <= FIT_TOL * b_scale:
            return sol
    return best


# -- discrete completely monotone recovery -----------------------------------


def _cm_test(seq: np.ndarray, eps: float = EPS_CM, max_order: int = 16):
    """Alternating finite differences of the zero-padded sequence.

    Returns (passes, first failing order or None). The per-order tolerance
    grows with the binomial weight 2^k to absorb roundoff on long inputs.
    """
    scale = float(np.abs(seq).max()) if seq.size else 0.0
    work = np.concatenate([seq, np.zeros(max_order + 1)])
    sign = 1.0
    for order in range(max_order + 1):
        tol = eps + (2.0**order) * 1e-15 * max(1.0, scale)
        if np.any(sign * work < -tol):
            return False, order
        work = np.diff(work)
        sign = -sign
    return True, None


def _fit_geometric_atoms(pos: np.ndarray):
    from .expfit import pencil_fit

    head = pos[: min(len(pos), 100)]
    fit = pencil_fit(head, max_atoms=8)
    keep = (fit.nodes > 1e-8) & (fit.nodes < 1.0 - 1e-8) & (fit.weights > 1e-12)
    nodes = fit.nodes[keep]
    weights = fit.weights[keep]
    return nodes, weights, fit.residual


def recover_cm_discrete(
    data: TruncatedData, truth: LatticeDist | None = None
) -> ReconstructionReport:
    """Recovery when restricted(1) is a mixture of geometric sequences.

    The correlation sequence is then a Hausdorff-type moment sequence along
    the mixture atoms: fitting the atoms from restricted(1) turns the
    unknown tail's generating function values at the atoms into a small
    linear system. A direct nonnegative kernel inversion of the same
    correlation runs in parallel and the smaller-residual route wins.
    """
    r1 = data.restricted_power(1)
    if r1.is_zero:
        raise ClassNotDetected("restricted(1) carries no mass")
    pos = _dense_r1(r1)
    if len(pos) < 4:
        raise ClassNotDetected(
            "positive support of width %d cannot identify geometric atoms"
            % len(pos)
        )
    cm_ok, failing = _cm_test(pos)
    if not cm_ok:
        raise ClassNotDetected(
            "restricted(1) is not completely monotone (order %d difference "
            "changes sign)" % failing
        )
    deficit = _deficit(data)
    b_corr = correlation_lhs_from_data(data)
    mu0 = float(pos[0])
    usable = min(len(b_corr), max(1, r1.max_index))
    b_tilde = b_corr[:usable] - mu0 * np.concatenate(
        [pos[1 : usable + 1], np.zeros(max(0, usable - (len(pos) - 1)))]
    )

    nodes, node_weights, pencil_residual = _fit_geometric_atoms(pos)
    moments = HausdorffMoments(
        b_corr, tuple(zip(nodes.tolist(), node_weights.tolist())) or None
    )

    direct = correlation_inverse(r1, b_tilde, deficit, reg=0.0)
    routes: dict[str, tuple[np.ndarray, float]] = {
        "direct": (direct.masses, direct.residual_sup)
    }

    atom_diag: dict[str, object] = {
        "atoms": list(zip(nodes.tolist(), node_weights.tolist())),
        "pencil_residual": pencil_residual,
    }
    if nodes.size > 0 and pencil_residual <= 1e-6 * max(1.0, pos.max()):
        m_rows = min(len(b_corr), 80)
        vand = nodes[None, :] ** np.arange(1, m_rows + 1)[:, None]
        theta, *_ = np.linalg.lstsq(vand, b_corr[:m_rows], rcond=None)
        targets = theta / node_weights - mu0
        n_unknowns = int(nodes.size)
        gf = nodes[:, None] ** np.arange(1, n_unknowns + 1)[None, :]
        scale = max(1.0, float(np.abs(gf).max()))
        stacked = np.vstack([gf, np.full((1, n_unknowns), 1e3 * scale)])
        target = np.concatenate([targets, [1e3 * scale * deficit]])
        x_m, _ = nnls(stacked, target)
        if deficit > 0.0 and x_m.sum() > 0.0:
            x_m = x_m * (deficit / x_m.sum())
        design = np.zeros((usable, n_unknowns))
        for n in range(1, usable + 1):
            for j in range(1, n_unknowns + 1):
                design[n - 1, j - 1] = r1.mass(n + j)
        moment_res = float(np.abs(design @ x_m - b_tilde).max())
        routes["moment"] = (x_m, moment_res)
        atom_diag["moment_targets"] = targets
    else:
        atom_diag["moment_route_skipped"] = "atom fit unusable"

    chosen = min(routes, key=lambda k: routes[k][1])
    masses, residual = routes[chosen]
    recovered = _assemble(r1, masses)
    residuals = {
        "system_residual": residual,
        "direct_residual": routes["direct"][1],
        "deficit": deficit,
    }
    if "moment" in routes:
        residuals["moment_residual"] = routes["moment"][1]
    if truth is not None:
        residuals["tv_distance"] = tv_distance(recovered, truth)
    diagnostics: dict[str, object] = {
        "route": chosen,
        "moments": moments,
        "direct_rank": direct.rank,
        "direct_rank_deficient": direct.rank_deficient,
        "direct_reg_used": direct.reg_used,
        "direct_window": int(len(direct.masses)),
    }
    diagnostics.update(atom_diag)
    return ReconstructionReport(CLASS_DISCRETE_CM, recovered, residuals, diagnostics)


# -- triangular (gap-pattern) recovery ---------------------------------------


def recover_triangular(
    data: TruncatedData,
    a: int | None = None,
    b: int | None = None,
    truth: LatticeDist | None = None,
) -> ReconstructionReport:
    """Exact solve when the support pattern makes the correlation triangular.

    Requires positive support starting exactly at a+b with no interior
    zeros, and the second power vanishing on 0..a. Under that pattern any
    mass at or below -b would force visible second-power mass in the gap,
    so the negative support is confined to -1..-(b-1) and the correlation
    equations solve one mass at a time, deepest first.
    """
    if data.horizon < 2:
        raise ClassNotDetected("triangular pattern needs horizon >= 2")
    r1 = data.restricted_power(1)
    r2 = data.restricted_power(2)
    start1 = _first_visible(r1)
    start2 = _first_visible(r2)
    if start1 is None or start2 is None:
        raise ClassNotDetected("vanishing restricted powers")
    if a is None:
        a = start2 - 1
    if a < 0 or start2 < a + 1:
        raise ClassNotDetected("second power carries mass within 0..a")
    if b is None:
        b = start1 - a
    if b < 2:
        raise ClassNotDetected("no negative window between the support gaps")
    if start1 != a + b:
        raise ClassNotDetected(
            "positive support starts at %d, not a+b = %d" % (start1, a + b)
        )
    body = r1.weights[start1 - r1.min_index :]
    if np.any(body <= PATTERN_TOL):
        raise ClassNotDetected("positive support has interior zeros")

    deficit = _deficit(data)
    b_corr = correlation_lhs_from_data(data)
    denom = r1.mass(a + b)
    solved = np.zeros(b - 1)  # solved[j-1] = mass at -j
    for m in range(1, b):
        n = a + m
        if n - 1 >= len(b_corr):
            raise ClassNotDetected("correlation sequence too short for the pattern")
        acc = b_corr[n - 1]
        for j in range(b - m + 1, b):
            acc -= solved[j - 1] * r1.mass(n + j)
        value = acc / denom
        if value <= 1e-12:
            raise DataInconsistencyError(
                "triangular solve produced nonpositive mass %g at -%d"
                % (value, b - m)
            )
        solved[b - m - 1] = value

    pred = np.zeros(len(b_corr))
    for j in range(1, b):
        for n in range(1, len(b_corr) + 1):
            pred[n - 1] += solved[j - 1] * r1.mass(n + j)
    system_residual = float(np.abs(pred - b_corr).max())
    unassigned = deficit - float(solved.sum())

    recovered = _assemble(r1, solved)
    residuals = {
        "system_residual": system_residual,
        "unassigned_mass": unassigned,
        "deficit": deficit,
    }
    if truth is not None:
        residuals["tv_distance"] = tv_distance(recovered, truth)
    diagnostics: dict[str, object] = {
        "a": int(a),
        "b": int(b),
        "pivot": denom,
        # the gap pattern itself rules out mass at or below -b
        "zero_tail_forced": True,
    }
    return ReconstructionReport(CLASS_TRIANGULAR, recovered, residuals, diagnostics)


# -- shifting data by a nonpositive factor ------------------------------------


def extend_by_negative(data: TruncatedData, nu: LatticeDist) -> TruncatedData:
    """Half-line data of mu * nu from half-line data of mu and full nu.

    Exact: nu^{*n} only moves mass down, so the nonnegative part of
    (mu * nu)^{*n} never involves the unobserved negative part of mu^{*n}.
    """
    if nu.is_zero:
        raise DomainError("nu must be a proper distribution")
    if nu.max_index > 0:
        raise DomainError("nu must be supported on the nonpositive lattice")
    if not nu.is_proper():
        raise DomainError("nu must be proper")
    out = []
    power = None
    for n in range(1, data.horizon + 1):
        power = nu if power is None else convolve(power, nu)
        out.append(restrict_nonneg(convolve(data.restricted_power(n), power)))
    return TruncatedData(data.horizon, tuple(out))


@dataclass(frozen=True)
class DeconvolvedData:
    """Per-power deconvolution output with its determinability frontier.

    ``determined_from[n-1]`` is the smallest index at which power n is
    recovered; below it the division has no information (this happens iff
    nu(0) = 0, when extension is a lossy shift). For the first power the
    head below the frontier is filled in from the second power's product
    relations whenever the data's support top makes them solvable, after
    which ``determined_from[0]`` drops to 0. ``stable[n-1]`` is False
    when back-substitution noise grew out of the probability range; the
    repeated unit-magnitude root of the divisor amplifies roundoff
    polynomially in the support length, so high powers of spread-out nu
    are flagged and zeroed instead of reported as masses.
    """

    per_power: tuple[LatticeDist, ...]
    determined_from: tuple[int, ...]
    stable: tuple[bool, ...]


def _refine_head(r1: LatticeDist, r2: LatticeDist, gap: int):
    """Recover r1(0..gap-1) from r2 = r1*r1 values above the frontier.

    For j >= 2*gap every product pair in r2(j) has at most one factor
    below the frontier, so rows j = top..top+gap-1 are triangular in the
    missing head. Needs the exact support top, hence untruncated data
    with top >= 2*gap, and a nonvanishing top mass as divisor. Returns
    None when any of that fails; masses outside [0, 1] mean the data was
    not a bounded-support first power and also return None.
    """
    if r1.is_zero or r2.is_zero:
        return None
    top = r1.max_index
    if top < 2 * gap or r1.mass(top) < 1e-12:
        return None
    if r2.max_index < top + gap - 1:
        return None
    head = np.zeros(gap)
    for i in range(gap - 1, -1, -1):
        j = top + i
        acc = r2.mass(j)
        for m in range(gap, j - gap + 1):
            acc -= r1.mass(m) * r1.mass(j - m)
        for m in range(i + 1, gap):
            acc -= 2.0 * head[m] * r1.mass(j - m)
        head[i] = acc / (2.0 * r1.mass(top))
    if head.min() < -1e-8 or head.max() > 1.0 + 1e-8:
        return None
    head = np.clip(head, 0.0, None)
    full = np.concatenate([head, [r1.mass(k) for k in range(gap, top + 1)]])
    return lattice(0, full)


def deconvolve_extension(extended: TruncatedData, nu: LatticeDist) -> DeconvolvedData:
    """Invert :func:`extend_by_negative` by long division from the top.

    With w = nu^{*n} supported on [-L, 0], ext(k) = sum_j r(k+j) w(-j) is
    upper triangular in r read from the highest index down, so r follows by
    back-substitution whenever w(0) > 0; otherwise the recoverable range
    starts at n times the top gap of nu.
    """
    if nu.is_zero or nu.max_index > 0:
        raise DomainError("nu must be nonzero on the nonpositive lattice")
    gap = -nu.max_index
    out = []
    starts = []
    flags = []
    power = None
    for n in range(1, extended.horizon + 1):
        power = nu if power is None else convolve(power, nu)
        ext = extended.restricted_power(n)
        start = n * gap
        if gap > 0:
            # pure shift component: ext(k) = sum r(k + n*gap + ...) with the
            # shifted kernel's top weight at zero offset
            shifted = lattice(power.offset + n * gap, power.weights.copy())
        else:
            shifted = power
        w0 = shifted.mass(0)
        depth = -shifted.min_index if not shifted.is_zero else 0
        top = ext.max_index if not ext.is_zero else -1
        if top < 0:
            out.append(lattice(0, np.zeros(1)))
            starts.append(start)
            flags.append(True)
            continue
        rec = np.zeros(top + 1)
        for k in range(top, -1, -1):
            acc = ext.mass(k)
            for j in range(1, min(depth, top - k) + 1):
                acc -= rec[k + j] * shifted.mass(-j)
            rec[k] = acc / w0
        rec[np.abs(rec) < 1e-15] = 0.0
        ok = bool(
            np.all(np.isfinite(rec))
            and rec.min() >= -1e-8
            and rec.max() <= 1.0 + 1e-8
        )
        starts.append(start)
        flags.append(ok)
        if ok:
            out.append(lattice(start, np.clip(rec, 0.0, None)))
        else:
            out.append(lattice(0, np.zeros(1)))
    if gap > 0 and len(out) >= 2 and flags[0] and flags[1]:
        untruncated = (
            extended.restricted_power(1).truncated_mass == 0.0
            and extended.restricted_power(2).truncated_mass == 0.0
        )
        if untruncated:
            refined = _refine_head(out[0], out[1], gap)
            if refined is not None:
                out[0] = refined
                starts[0] = 0
    return DeconvolvedData(tuple(out), tuple(starts), tuple(flags))


# -- dispatcher ---------------------------------------------------------------


def _run_detector(name: str, data: TruncatedData, truth):
    if name == "exponential":
        return recover_exponential(data, truth=truth)
    if name == "skip_free":
        return recover_skipfree(data, truth=truth)
    if name == "triangular":
        return recover_triangular(data, truth=truth)
    if name == "discrete_cm":
        return recover_cm_discrete(data, truth=truth)
    raise DomainError("unknown detector %r" % name)


def auto_reconstruct(
    data: TruncatedData,
    detectors=None,
    truth: LatticeDist | None = None,
) -> ReconstructionReport:
    """Run the class detectors and return the highest-precedence hit.

    All enabled detectors run and their verdicts are attached; among the
    successful ones the exact classes (skip_free, triangular) outrank the
    transform and moment routes. With no hit the generic correlation
    inversion is reported as diagnostics only, never as a recovery.
    """
    enabled = DETECTOR_ORDER if detectors is None else tuple(detectors)
    for name in enabled:
        if name not in DETECTOR_ORDER:
            raise DomainError("unknown detector %r" % name)
    verdicts: dict[str, str] = {}
    hits: list[ReconstructionReport] = []
    for name in DETECTOR_ORDER:
        if name not in enabled:
            verdicts[name] = "disabled"
            continue
        try:
            report = _run_detector(name, data, truth)
        except ClassNotDetected as exc:
            verdicts[name] = "not_detected: %s" % exc
            continue
        except (ConditioningError, DataInconsistencyError) as exc:
            verdicts[name] = "failed: %s" % exc
            continue
        if report.detected_class == CLASS_NONE:
            reason = report.diagnostics.get("reject_reason", "no class structure")
            verdicts[name] = "not_detected: %s" % reason
            continue
        verdicts[name] = "detected: %s" % report.detected_class
        hits.append(report)

    for label in LABEL_PRECEDENCE:
        for report in hits:
            if report.detected_class == label:
                diagnostics = dict(report.diagnostics)
                diagnostics["detector_verdicts"] = verdicts
                return ReconstructionReport(
                    report.detected_class, report.recovered, report.residuals, diagnostics
                )

    diagnostics = {"detector_verdicts": verdicts}
    residuals: dict[str, float] = {}
    try:
        r1 = data.restricted_power(1)
        if not r1.is_zero and data.horizon >= 2:
            pos = _dense_r1(r1)
            b_corr = correlation_lhs_from_data(data)
            usable = min(len(b_corr), max(1, r1.max_index))
            b_tilde = b_corr[:usable] - pos[0] * np.concatenate(
                [pos[1 : usable + 1], np.zeros(max(0, usable - (len(pos) - 1)))]
            )
            generic = correlation_inverse(r1, b_tilde, _deficit(data), reg=0.0)
            diagnostics["generic_inverse"] = {
                "masses": generic.masses,
                "lags": generic.lags,
                "rank": generic.rank,
                "rank_deficient": generic.rank_deficient,
                "residual_sup": generic.residual_sup,
                "reg_used": generic.reg_used,
            }
            residuals["generic_residual"] = generic.residual_sup
    except (DomainError, DataInconsistencyError):
        pass
    return ReconstructionReport(CLASS_NONE, None, residuals, diagnostics)
