"""Exact simulation of the single-config phase-estimation experiment.

The system starts in ``Phi_+``, evolves under ``H_tot`` for time ``t`` and the
signed Pauli ``O_c`` or ``O_s`` on qubit k is measured.  SPAM noise flips the
recorded bit with probability ``eta``; only the measured qubit's flip matters.
"""

from dataclasses import dataclass

import numpy as np

from .model import build_total, product_states, select_observables
from .rfe import QuadratureOracle

QUADRATURES = ("c", "s")


@dataclass(frozen=True)
class NoiseModel:
    eta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta < 0.5:
            raise ValueError(f"bit-flip rate must lie in [0, 0.5), got {self.eta}")

    def apply(self, p0):
        return (1 - self.eta) * p0 + self.eta * (1 - p0)


@dataclass(frozen=True)
class ExperimentOutcome:
    cfg: object
    t: float
    quadrature: str
    bit: int
    seed_path: tuple = ()


def _check_quadrature(q):
    if q not in QUADRATURES:
        raise ValueError(f"quadrature must be 'c' or 's', got {q!r}")
    return q


class ExperimentKernel:
    """Spectral decomposition of one ``(mu, cfg)`` experiment, reusable across times."""

    def __init__(self, mu, cfg):
        self.cfg = cfg
        H = build_total(mu, cfg)
        self.energies, vecs = np.linalg.eigh(H)
        self.vectors = vecs
        _, _, phi_plus = product_states(cfg)
        self._amps = vecs.conj().T @ phi_plus
        n = cfg.n
        oc, os_ = select_observables(cfg)
        self.observables = {"c": oc, "s": os_}
        self._elements = {
            q: vecs.conj().T @ o.matrix(n) @ vecs for q, o in self.observables.items()
        }

    def expectation_of(self, matrix_in_eigenbasis, t):
        t = np.asarray(t, dtype=float)
        phases = np.exp(-1j * np.multiply.outer(t, self.energies)) * self._amps
        val = np.einsum("...i,ij,...j->...", phases.conj(), matrix_in_eigenbasis, phases)
        if np.max(np.abs(val.imag), initial=0.0) > 1e-10:
            raise ArithmeticError("expectation of a Hermitian observable has an imaginary part")
        return val.real

    def expectation(self, t, quadrature):
        return self.expectation_of(self._elements[_check_quadrature(quadrature)], t)

    def prob_bit0(self, t, quadrature, noise=NoiseModel()):
        return noise.apply(0.5 * (1 + self.expectation(t, quadrature)))


def evolved_expectation(mu, cfg, t, O):
    """``<Phi_+| e^{iHt} O e^{-iHt} |Phi_+>`` for a :class:`SignedPauli` ``O``."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    kernel = ExperimentKernel(mu, cfg)
    vecs = kernel.vectors
    return float(kernel.expectation_of(vecs.conj().T @ O.matrix(cfg.n) @ vecs, t))


def signal_error(mu, cfg, t):
    """``|<O_c(t)> + i <O_s(t)> - exp(i E_gap t)|`` without noise; vectorised over ``t``."""
    kernel = ExperimentKernel(mu, cfg)
    gap = kernel.energies[1] - kernel.energies[0]
    signal = kernel.expectation(t, "c") + 1j * kernel.expectation(t, "s")
    return np.abs(signal - np.exp(1j * gap * np.asarray(t, dtype=float)))


def prob_bit0(mu, cfg, t, quadrature, noise=NoiseModel()):
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    return float(ExperimentKernel(mu, cfg).prob_bit0(t, quadrature, noise))


def sample_fraction(p0, shots, rng, size=None):
    """Fraction of zeros among ``shots`` Bernoulli(p0) bits."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p0 = float(np.clip(p0, 0.0, 1.0))
    return rng.binomial(shots, p0, size=size) / shots


def sample(mu, cfg, t, quadrature, noise, shots, rng):
    return float(sample_fraction(prob_bit0(mu, cfg, t, quadrature, noise), shots, rng))


def sample_outcomes(mu, cfg, t, quadrature, noise, shots, rng, seed_path=()):
    """Individual measured bits as :class:`ExperimentOutcome` records."""
    p0 = prob_bit0(mu, cfg, t, quadrature, noise)
    bits = (rng.random(shots) >= p0).astype(int)
    return [ExperimentOutcome(cfg, float(t), quadrature, int(b), tuple(seed_path)) for b in bits]


def quadrature_estimate(fraction):
    """``2 * fraction - 1``: estimate of cos or sin of ``E_gap * t``."""
    fraction = np.asarray(fraction, dtype=float)
    if np.any((fraction < 0) | (fraction > 1)):
        raise ValueError("fraction must lie in [0, 1]")
    out = 2 * fraction - 1
    return float(out) if out.ndim == 0 else out


class SimulatedOracle(QuadratureOracle):
    """Quadrature estimates ``2 B - 1`` from ``shots`` simulated runs per call."""

    def __init__(self, kernel, noise=NoiseModel(), shots=96, rng=None):
        super().__init__()
        if shots < 1:
            raise ValueError("shots must be >= 1")
        self.kernel = kernel
        self.noise = noise
        self.shots = int(shots)
        self.rng = np.random.default_rng(rng)

    def _estimate(self, t, quadrature, size):
        p0 = float(self.kernel.prob_bit0(t, quadrature, self.noise))
        return quadrature_estimate(sample_fraction(p0, self.shots, self.rng, size=size))


class ExpectationOracle(QuadratureOracle):
    """Infinite-shot limit: returns the noisy expectation value itself."""

    def __init__(self, kernel, noise=NoiseModel()):
        super().__init__()
        self.kernel = kernel
        self.noise = noise

    def _estimate(self, t, quadrature, size):
        value = 2 * float(self.kernel.prob_bit0(t, quadrature, self.noise)) - 1
        return value if size is None else np.full(size, value)
