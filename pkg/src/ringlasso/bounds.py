"""Closed-form oracle, sparsity and persistence bounds.

Every evaluator is a pure function returning a :class:`BoundReport`.  Inputs
that fall outside a theorem's hypotheses but still give a finite value are
evaluated and flagged (``within_theorem=False`` plus a note); inputs for
which the formula itself breaks down raise :class:`InvalidInputs`.
"""

import math
from dataclasses import dataclass, field

from .exceptions import InvalidInputs


@dataclass(frozen=True)
class BoundReport:
    name: str
    inputs: dict
    parts: dict
    observed: dict = field(default_factory=dict)
    satisfied: dict = field(default_factory=dict)
    within_theorem: bool = True
    notes: tuple = ()

    def __post_init__(self):
        for key, v in self.parts.items():
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputs(f"bound part {key!r} evaluated to {v}")

    @property
    def value(self):
        """The first (headline) part."""
        return next(iter(self.parts.values()))

    def to_dict(self):
        return {"name": self.name, "inputs": dict(self.inputs), "parts": dict(self.parts),
                "observed": dict(self.observed), "satisfied": dict(self.satisfied),
                "within_theorem": self.within_theorem, "notes": list(self.notes)}


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise InvalidInputs(f"{k} must be positive, got {v}")


def _compare(parts, observed):
    return {k: bool(observed[k] <= parts[k]) for k in observed if k in parts}


def bound_lassoes_theorem1(risk0, lam, m, delta_n, norms0, norms_hat, observed=None):
    """Risk bound for the lassoes fit.

    ``risk0 = sum_i b0_i' Sigma_i b0_i`` is the population risk of the
    comparison vectors (``n * C_n``), ``norms0`` and ``norms_hat`` the sums of
    squared augmented l1 norms of the comparison vectors and of the fit.
    ``observed`` is the fit's population risk.
    """
    if m <= 0:
        raise InvalidInputs("m must be positive")
    if min(risk0, lam, delta_n, norms0, norms_hat) < 0:
        raise InvalidInputs("risk, lambda, delta_n and norms must be nonnegative")
    rhs = risk0 + (lam / m + delta_n) * norms0 - (lam / m - delta_n) * norms_hat
    notes = ()
    if rhs < 0:
        notes = ("right-hand side is negative: the inputs are inconsistent",)
        rhs = 0.0
    inputs = dict(risk0=risk0, lam=lam, m=m, delta_n=delta_n, norms0=norms0,
                  norms_hat=norms_hat)
    obs = {} if observed is None else {"risk": float(observed)}
    return BoundReport("lassoes_theorem1", inputs, {"risk": float(rhs)}, obs,
                       _compare({"risk": rhs}, obs), notes=notes)


def lassoes_lambda_min(sigma, A, m, n, p, alpha, Bcap, Bhat_cap):
    """Smallest lambda allowed by the l1-power oracle inequality."""
    top = max(Bcap ** (alpha - 1), Bhat_cap ** (alpha - 1))
    return 4 * A * sigma * math.sqrt(m * math.log(n * p)) / (alpha * top)


def bound_lassoL1p(s, kappa, m, n, p, sigma, A, alpha, lam, Bcap, Bhat_cap, phi_max=None,
                   task_errors=None, task_norms=None, observed=None):
    """Prediction (a), l1 estimation (b) and per-task sparsity (c) bounds
    for the penalty ``lam * sum_i ||beta_i||_1 ** alpha``.

    (a) bounds ``||X'(B_hat - B)||_2 / sqrt(nm)``; (b) bounds
    ``||B - B_hat||_1 / n``.  Part (c) is evaluated per task when
    ``task_errors`` (``||X_i(beta_i - beta_hat_i)||^2``), ``task_norms``
    (``||beta_hat_i||_1``) and ``phi_max`` are given; tasks whose
    denominator is not positive get no bound (``inf`` is not reported).
    """
    if not kappa > 0:
        raise InvalidInputs("kappa must be positive")
    _positive(m=m, n=n, p=p, alpha=alpha)
    if alpha < 1:
        raise InvalidInputs("alpha must be >= 1")
    if sigma < 0 or lam < 0 or Bcap < 0 or Bhat_cap < 0:
        raise InvalidInputs("sigma, lambda and the l1 caps must be nonnegative")
    if max(Bcap, Bhat_cap) <= 0:
        raise InvalidInputs("max(B, B_hat) must be positive")
    L = math.log(n * p)
    top = max(Bcap ** (alpha - 1), Bhat_cap ** (alpha - 1))
    pen = 1.5 * alpha * lam * top
    a = math.sqrt(s) / (kappa * math.sqrt(m)) * (pen / math.sqrt(m) + 2 * A * sigma * math.sqrt(L))
    b = 4 * s / (m * kappa**2) * (pen + 2 * A * sigma * math.sqrt(m * L))
    parts = {"prediction": a, "l1_error": b}
    notes = []
    lam_min = lassoes_lambda_min(sigma, A, m, n, p, alpha, Bcap, Bhat_cap)
    if A <= math.sqrt(2):
        notes.append("A <= sqrt(2) is outside the theorem")
    if lam < lam_min * (1 - 1e-12):
        notes.append(f"lambda below the theorem's minimum {lam_min:.6g}")
    if task_errors is not None:
        if phi_max is None or task_norms is None:
            raise InvalidInputs("part (c) needs phi_max and task_norms")
        for i, (err, nb) in enumerate(zip(task_errors, task_norms, strict=True)):
            den = lam * alpha * nb ** (alpha - 1) / 2 - A * sigma * math.sqrt(m * L)
            if den > 0:
                parts[f"sparsity_{i}"] = err * m * phi_max / den**2
    inputs = dict(s=s, kappa=kappa, m=m, n=n, p=p, sigma=sigma, A=A, alpha=alpha,
                  lam=lam, Bcap=Bcap, Bhat_cap=Bhat_cap, phi_max=phi_max)
    obs = dict(observed or {})
    return BoundReport("lassoL1p", inputs, parts, obs, _compare(parts, obs),
                       within_theorem=not notes, notes=tuple(notes))


def merge_bracket(C, b, eta, exponent):
    return 1 + 3 * C * (b / math.sqrt(eta)) ** exponent


def bound_L12merge2(s, kappa, n, m, p, sigma, A, b, eta, alpha, C=1.0, phi_max=1.0,
                    delta=1.0, observed=None):
    """Prediction, l1 and average-sparsity bounds with the lambda tied to
    the l1 radius ``b``.  ``C`` is an unspecified absolute constant; the
    default ``1`` is a placeholder, not a known value."""
    if alpha <= 2:
        raise InvalidInputs("alpha must exceed 2")
    if not 0 < eta < 1:
        raise InvalidInputs("eta must lie in (0, 1)")
    if not kappa > 0:
        raise InvalidInputs("kappa must be positive")
    _positive(n=n, m=m, p=p, b=b, delta=delta)
    if C < 0 or sigma < 0:
        raise InvalidInputs("C and sigma must be nonnegative")
    L = math.log(n * p)
    br = merge_bracket(C, b, eta, (alpha - 1) / (alpha - 2))
    br_c = merge_bracket(C, b, eta, 1 + 1 / (alpha - 2))
    parts = {
        "prediction": 4 * A**2 * sigma**2 * s * n * L / kappa**2 * br**2,
        "l1_error": 2 * A * sigma * s * n * math.sqrt(L) / (kappa**2 * math.sqrt(m)) * br,
        "avg_sparsity": s * 4 * phi_max / (kappa**2 * delta**2) * br_c**2,
    }
    notes = ["C is a placeholder constant"]
    if A <= math.sqrt(2):
        notes.append("A <= sqrt(2) is outside the theorem")
    inputs = dict(s=s, kappa=kappa, n=n, m=m, p=p, sigma=sigma, A=A, b=b, eta=eta,
                  alpha=alpha, C=C, phi_max=phi_max, delta=delta,
                  lam=4 * A * sigma / (alpha * b ** (alpha - 1)) * math.sqrt(m * L),
                  bracket=br)
    obs = dict(observed or {})
    return BoundReport("L12merge2", inputs, parts, obs, _compare(parts, obs),
                       within_theorem=A > math.sqrt(2), notes=tuple(notes))


def ring_lambda(sigma, A, m, n, p):
    return 4 * sigma * math.sqrt((A + 1) * m * n * p)


def bound_ring(s, p, n, m, sigma, A, kappa, phi_max=1.0, observed=None):
    """Prediction ``||X'(B - B_hat)||^2 / (mn)``, trace-norm error
    ``|||B - B_hat|||_1 / n`` and rank bounds, at
    ``lambda = 4 sigma sqrt((A+1) m n p)`` (reported in ``inputs``).

    The theorem asks for ``A > 1``; smaller nonnegative ``A`` is evaluated
    and flagged.
    """
    if not kappa > 0:
        raise InvalidInputs("kappa must be positive")
    if A < 0 or sigma < 0:
        raise InvalidInputs("A and sigma must be nonnegative")
    _positive(p=p, n=n, m=m)
    parts = {
        "prediction": 64 * (A + 1) * sigma**2 * s * p / (kappa**2 * m),
        "trace_error": 32 * sigma * math.sqrt(1 + A) * s * math.sqrt(p) / (kappa**2 * math.sqrt(m * n)),
        "rank": 64 * s * phi_max / kappa**2,
    }
    notes = () if A > 1 else ("A <= 1 is outside the theorem",)
    inputs = dict(s=s, p=p, n=n, m=m, sigma=sigma, A=A, kappa=kappa, phi_max=phi_max,
                  lam=ring_lambda(sigma, A, m, n, p))
    obs = dict(observed or {})
    return BoundReport("ring", inputs, parts, obs, _compare(parts, obs),
                       within_theorem=A > 1, notes=notes)


def persistence_deviation(V, n, p, m, eta):
    """``sqrt(2 e V log(n (p+1)^2) / (m eta))``: with probability at least
    ``1 - eta`` no entry of any task's second-moment matrix deviates more."""
    return math.sqrt(2 * math.e * V * math.log(n * (p + 1) ** 2) / (m * eta))


def bound_persistence(V, n, p, m, eta, b=1.0, l1_sq_sum=None, observed=None):
    """Moment-deviation (``deviation``), risk-gap (``risk_gap``, needs
    ``l1_sq_sum = sum_i ||beta_i||_1^2``) and trace-ball persistence
    (``persistence``) bounds."""
    if not 0 < eta < 1:
        raise InvalidInputs("eta must lie in (0, 1)")
    _positive(V=V, n=n, p=p, m=m)
    if b < 0:
        raise InvalidInputs("b must be nonnegative")
    dev = persistence_deviation(V, n, p, m, eta)
    parts = {"deviation": dev}
    if l1_sq_sum is not None:
        parts["risk_gap"] = dev * (n + l1_sq_sum) / (n * m)
    parts["persistence"] = ((1 / m + p * b**2 / (n * m))
                            * math.sqrt(16 * math.e * V * math.log(n * p) / (m * eta)))
    inputs = dict(V=V, n=n, p=p, m=m, eta=eta, b=b, l1_sq_sum=l1_sq_sum)
    obs = dict(observed or {})
    return BoundReport("persistence", inputs, parts, obs, _compare(parts, obs))
