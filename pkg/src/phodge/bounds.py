"""Closed-form eigenvalue lower bounds and certification reports."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

__all__ = [
    "BoundReport",
    "constant_C",
    "lower_bound",
    "gallot_meyer_bound",
    "weitzenbock_constant",
    "compare",
    "bound_report",
    "DEFAULT_SLACK",
]

DEFAULT_SLACK = 0.05


def _check_nk(n: int, k: int):
    if n < 2 or not 1 <= k <= n - 1:
        raise ValueError(f"need n >= 2 and 1 <= k <= n-1, got n={n}, k={k}")


def constant_C(n: int, k: int) -> float:
    """``max(k/(k+1), (n-k)/(n-k+1))``."""
    _check_nk(n, k)
    return max(k / (k + 1), (n - k) / (n - k + 1))


def lower_bound(n: int, k: int, p: float, H: float) -> float:
    """Lower bound on lambda_1 of the p-Hodge Laplacian for curvature operator >= H.

    ``(k(n-k) H / (2^(2/p - 1) (C + (p-2)/2)))^(p/2)``.  For ``H <= 0`` the
    bound carries no information and 0.0 is returned.
    """
    _check_nk(n, k)
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if H <= 0:
        return 0.0
    base = k * (n - k) * H / (2.0 ** (2.0 / p - 1.0) * (constant_C(n, k) + (p - 2.0) / 2.0))
    return base ** (p / 2.0)


def gallot_meyer_bound(n: int, k: int, H: float) -> float:
    """``k(n-k+1) H``, stated for 1 <= k <= n/2."""
    if n < 2 or not 1 <= k <= n / 2:
        raise ValueError(f"Gallot-Meyer bound is stated for 1 <= k <= n/2, got n={n}, k={k}")
    return k * (n - k + 1) * H


def weitzenbock_constant(n: int, k: int, H: float) -> float:
    """Pointwise lower-bound coefficient ``k(n+1-k) H`` of the Weitzenbock term."""
    _check_nk(n, k)
    return k * (n + 1 - k) * H


@dataclass(frozen=True)
class BoundReport:
    n: int
    k: int
    p: float
    H: float
    bound_value: float
    gallot_meyer_value: float | None
    weitzenbock_constant: float
    computed_lambda1: float | None
    margin: float | None
    slack: float
    satisfied: bool | None
    vacuous: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> BoundReport:
        return cls(**{f: d[f] for f in cls.__dataclass_fields__})

    @classmethod
    def from_json(cls, text: str) -> BoundReport:
        return cls.from_dict(json.loads(text))


def bound_report(n: int, k: int, p: float, H: float, lambda1: float | None = None,
                 slack: float = DEFAULT_SLACK) -> BoundReport:
    """Evaluate every constant at (n, k, p, H) and, if given, certify ``lambda1``."""
    if not 0 <= slack < 1:
        raise ValueError("slack must lie in [0, 1)")
    t1 = lower_bound(n, k, p, H)
    gm = gallot_meyer_bound(n, k, H) if (p == 2 and 1 <= k <= n / 2) else None
    vacuous = t1 <= 0
    margin = satisfied = None
    if lambda1 is not None:
        if not math.isfinite(lambda1):
            raise ValueError("computed eigenvalue must be finite")
        satisfied = bool(lambda1 >= t1 * (1.0 - slack))
        margin = float(lambda1 / t1) if t1 > 0 else None
    return BoundReport(
        n=n, k=k, p=float(p), H=float(H), bound_value=t1, gallot_meyer_value=gm,
        weitzenbock_constant=weitzenbock_constant(n, k, H),
        computed_lambda1=None if lambda1 is None else float(lambda1),
        margin=margin, slack=float(slack), satisfied=satisfied, vacuous=vacuous,
    )


def compare(result, n: int, k: int, p: float, H: float, slack: float = DEFAULT_SLACK) -> BoundReport:
    """Certify a converged :class:`~phodge.spectrum.SpectrumResult` against the bound."""
    if not result.converged:
        raise ValueError("cannot certify an unconverged spectrum result")
    if result.k != k or abs(result.p - p) > 1e-12:
        raise ValueError("result degree/exponent do not match the requested bound")
    return bound_report(n, k, p, H, result.lambda1, slack)
