"""Robust frequency estimation by interval shrinking.

Given noisy estimates ``X(t) ~ cos(theta t)`` and ``Y(t) ~ sin(theta t)`` the
estimator keeps an interval ``[a, b]`` that contains ``theta`` and, at each
round, keeps either its lower or upper two thirds.  Round ``j`` probes at
``t_j = kappa / w_j`` with ``w_j = phi_max * (2/3)**j``, so the schedule of
evolution times does not depend on the measured data.

Decision rule: the two candidate sub-intervals have midpoints whose predicted
phases differ by ``kappa / 3``.  The candidate whose predicted phase is
circularly closer to ``atan2(Y, X)`` wins the vote.  A decision is guaranteed
correct whenever the angular error is below ``min(kappa/6, pi - kappa/2)``,
which ``kappa = 3 pi / 2`` maximises at ``pi / 4``.  Quadrature errors below
``1/sqrt(8)`` each keep the angular error below ``asin(1/2) = pi/6``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_KAPPA = 1.5 * math.pi
_SHRINK = 2.0 / 3.0


@dataclass(frozen=True)
class RfeConfig:
    phi_max: float
    epsilon: float
    shots_per_quadrature: int = 96
    votes: int = 5
    medians: int = 5
    kappa: float = DEFAULT_KAPPA
    max_rounds: int = 500

    def __post_init__(self):
        if not self.phi_max > 0:
            raise ValueError(f"phi_max must be positive, got {self.phi_max}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.shots_per_quadrature < 1:
            raise ValueError("shots_per_quadrature must be >= 1")
        if self.votes < 1 or self.medians < 1:
            raise ValueError("votes and medians must be >= 1")
        if not 0 < self.kappa < 2 * math.pi:
            raise ValueError("kappa must lie in (0, 2 pi)")

    @property
    def rounds(self):
        """Number of shrinking rounds needed to reach width ``2 epsilon``."""
        ratio = self.phi_max / (2 * self.epsilon)
        if ratio <= 1:
            return 0
        return math.ceil(math.log(ratio) / math.log(1 / _SHRINK) - 1e-12)

    def times(self):
        return [self.kappa / (self.phi_max * _SHRINK ** j) for j in range(self.rounds)]


class QuadratureOracle:
    """Source of cos/sin estimates with total-evolution-time bookkeeping.

    Each call with ``size`` repetitions of ``shots`` single-shot runs at time
    ``t`` adds ``size * shots * t`` to :attr:`T_used`.
    """

    shots = 1

    def __init__(self):
        self.T_used = 0.0
        self.calls = 0
        self.trace = []

    def __call__(self, t, quadrature, size=None):
        if t < 0:
            raise ValueError("evolution time must be non-negative")
        if quadrature not in ("c", "s"):
            raise ValueError(f"quadrature must be 'c' or 's', got {quadrature!r}")
        value = self._estimate(float(t), quadrature, size)
        reps = 1 if size is None else int(size)
        self.calls += reps
        self.T_used += reps * self.shots * float(t)
        self.trace.append((float(t), quadrature, reps, self.shots))
        return value

    def _estimate(self, t, quadrature, size):
        raise NotImplementedError

    def traced_time(self):
        """Total evolution time recomputed from the call trace."""
        return math.fsum(t * reps * shots for t, _, reps, shots in self.trace)


class FunctionOracle(QuadratureOracle):
    """Wrap ``fn(t, quadrature, rng) -> float`` as an oracle."""

    def __init__(self, fn, rng=None, shots=1):
        super().__init__()
        self.fn = fn
        self.rng = np.random.default_rng(rng)
        self.shots = shots

    def _estimate(self, t, quadrature, size):
        if size is None:
            return float(self.fn(t, quadrature, self.rng))
        return np.array([self.fn(t, quadrature, self.rng) for _ in range(size)])


def exact_oracle(theta, bias=0.0):
    """Noiseless ``cos``/``sin`` of ``theta t`` shifted by a constant phase ``bias``."""

    def fn(t, q, rng):
        ph = theta * t + bias
        return math.cos(ph) if q == "c" else math.sin(ph)

    return FunctionOracle(fn)


def _circular_distance(x, y):
    d = np.mod(x - y, 2 * math.pi)
    return np.minimum(d, 2 * math.pi - d)


@dataclass
class RfeResult:
    theta_hat: float
    T_used: float
    calls: int
    rounds: int


def rfe_estimate(oracle, cfg, trace=None):
    """Estimate ``theta in [0, phi_max]`` to within ``cfg.epsilon``.

    ``trace``, if a list, receives one dict per round.
    """
    a = 0.0
    T0, calls0 = oracle.T_used, oracle.calls
    rounds = cfg.rounds
    if rounds > cfg.max_rounds:
        raise RuntimeError(f"{rounds} rounds exceed max_rounds={cfg.max_rounds}")
    # widths and times depend only on the round index
    for j, t in enumerate(cfg.times()):
        w = cfg.phi_max * _SHRINK ** j
        b = a + w
        xs = np.atleast_1d(oracle(t, "c", size=cfg.votes))
        ys = np.atleast_1d(oracle(t, "s", size=cfg.votes))
        phase = np.arctan2(ys, xs)
        # reduce predicted phases mod 2 pi before comparing; a * t can be ~1e8
        lower = math.fmod((a + w / 3) * t, 2 * math.pi)
        upper = math.fmod((a + 2 * w / 3) * t, 2 * math.pi)
        lower_votes = int(np.sum(_circular_distance(phase, lower) <= _circular_distance(phase, upper)))
        keep_lower = 2 * lower_votes > cfg.votes
        if trace is not None:
            trace.append(
                {
                    "round": j,
                    "a": a,
                    "b": b,
                    "t": t,
                    "x_hat": float(np.mean(xs)),
                    "y_hat": float(np.mean(ys)),
                    "decision": "lower" if keep_lower else "upper",
                }
            )
        if not keep_lower:
            a = a + w / 3
    w = cfg.phi_max * _SHRINK ** rounds
    return RfeResult(a + 0.5 * w, oracle.T_used - T0, oracle.calls - calls0, rounds)


def median_boost(estimates):
    """Median of an odd number of independent estimates."""
    estimates = np.asarray(list(estimates), dtype=float)
    if estimates.size == 0:
        raise ValueError("median of an empty list")
    if estimates.size % 2 == 0:
        raise ValueError("median boosting expects an odd number of estimates")
    return float(np.median(estimates))


def robust_estimate(oracles, cfg):
    """Median over ``cfg.medians`` independent runs, one oracle per run.

    Returns ``(theta_hat, T_used, calls, per_run_estimates)``.
    """
    runs = [rfe_estimate(next(oracles), cfg) for _ in range(cfg.medians)]
    estimates = [r.theta_hat for r in runs]
    return (
        median_boost(estimates),
        math.fsum(r.T_used for r in runs),
        sum(r.calls for r in runs),
        estimates,
    )


def required_nu_and_shots(h_norm_bound):
    """Sufficient field strength and shots per quadrature: ``(96 * bound, 96)``."""
    if not h_norm_bound > 0:
        raise ValueError("norm bound must be positive")
    return 96.0 * h_norm_bound, 96


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        fh.write("# hamlearn-csv v1 rfe-trace\n")
        w = csv.DictWriter(fh, fieldnames=["round", "a", "b", "t", "x_hat", "y_hat", "decision"], lineterminator="\n")
        w.writeheader()
        w.writerows(trace)
