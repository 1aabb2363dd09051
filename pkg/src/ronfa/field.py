"""Difference-of-Gaussians receptive-field classifier with scale adaptation.

Each category neuron responds to a query through a Mexican-hat kernel centered
at its class prototype:

    phi_sigma(rho) = A * exp(-rho^2 / (2 sigma^2)) - B * exp(-rho^2 / (18 sigma^2))

where rho is the Euclidean distance to the prototype. The neuron activates
when the kernel value exceeds the resting level h_u, so for a given sigma the
activated set is exactly the prototypes within a ball of radius sigma * r_h
around the query (r_h being the kernel's h_u-crossing). Prediction searches
over sigma until exactly one neuron activates: shrink when several respond,
grow when none does, bracketing the transition like a bisection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clustering import PrototypeSet
from .errors import ConfigError

SCALE_MODES = ("adaptive", "fixed")

SINGLE_ACTIVATION = "single_activation"
FALLBACK_NEAREST = "fallback_nearest"


@dataclass(frozen=True)
class FieldConfig:
    excite: float = 1.5          # A, central lobe gain
    inhibit: float = 0.5         # B, surround gain
    resting_level: float = 0.5   # h_u, activation threshold
    tuning_ratio: float = 0.5    # lambda, bracket interpolation ratio
    sigma0: Optional[float] = None  # None: per-query mean prototype distance
    max_adapt_iters: int = 100
    scale_mode: str = "adaptive"

    def __post_init__(self) -> None:
        if not (self.excite > self.inhibit > 0):
            raise ConfigError("need excite > inhibit > 0 for a positive central lobe")
        if not (0 < self.resting_level < self.excite - self.inhibit):
            raise ConfigError(
                f"resting_level must lie in (0, {self.excite - self.inhibit}) "
                f"so activation at distance 0 is possible"
            )
        if not (0 < self.tuning_ratio < 1):
            raise ConfigError("tuning_ratio must lie in (0, 1)")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ConfigError("sigma0 must be positive")
        if self.max_adapt_iters < 1:
            raise ConfigError("max_adapt_iters must be at least 1")
        if self.scale_mode not in SCALE_MODES:
            raise ConfigError(f"unknown scale mode {self.scale_mode!r}")


@dataclass(frozen=True)
class ActivationState:
    sigma: float
    u: np.ndarray          # per-class responses in [0, 1)
    n_active: int          # count of strictly positive responses


@dataclass(frozen=True)
class PredictionResult:
    predicted: int
    sigma_final: Optional[float]
    terminated: str        # SINGLE_ACTIVATION or FALLBACK_NEAREST
    trace: tuple[tuple[float, int], ...]


def dog_kernel(
    x: np.ndarray,
    center: np.ndarray,
    sigma: float,
    excite: float = 1.5,
    inhibit: float = 0.5,
) -> float:
    """Mexican-hat response at distance ||x - center||; range (-inhibit, excite - inhibit]."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d2 = float(np.sum((np.asarray(x, dtype=np.float64) - np.asarray(center, dtype=np.float64)) ** 2))
    return float(_dog_from_sq(np.asarray(d2), sigma, excite, inhibit))


def _dog_from_sq(d2: np.ndarray, sigma: float, excite: float, inhibit: float) -> np.ndarray:
    return excite * np.exp(-d2 / (2.0 * sigma * sigma)) - inhibit * np.exp(
        -d2 / (18.0 * sigma * sigma)
    )


def activation(v) -> np.ndarray | float:
    """Saturating rectifier 1 - exp(-v) for v >= 0, zero otherwise; range [0, 1)."""
    arr = np.asarray(v, dtype=np.float64)
    out = np.where(arr > 0, -np.expm1(-arr), 0.0)
    return float(out) if np.isscalar(v) or arr.ndim == 0 else out


def field_response(
    x: np.ndarray,
    protos: PrototypeSet,
    sigma: float,
    config: FieldConfig = FieldConfig(),
) -> ActivationState:
    """Per-class neuron responses u_c = activation(kernel(x, center_c) - h_u)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if protos.m < 1:
        raise ConfigError("prototype set is empty")
    diff = np.asarray(x, dtype=np.float64)[None, :] - protos.centers
    d2 = np.einsum("md,md->m", diff, diff)
    phi = _dog_from_sq(d2, sigma, config.excite, config.inhibit)
    u = np.asarray(activation(phi - config.resting_level))
    u.setflags(write=False)
    return ActivationState(sigma=float(sigma), u=u, n_active=int(np.count_nonzero(u > 0)))


def _initial_sigma(dists: np.ndarray, config: FieldConfig) -> float:
    if config.sigma0 is not None:
        return config.sigma0
    mean = float(dists.mean())
    return mean if mean > 0 else 1.0


def adapt_scale(
    x: np.ndarray,
    protos: PrototypeSet,
    config: FieldConfig = FieldConfig(),
) -> PredictionResult:
    """Search over sigma until exactly one category neuron activates.

    Maintains a (sigma_min, sigma_max) bracket, both starting at 0. Too many
    activations shrink sigma toward the bracket interior; none grow it (or
    bisect once an upper bound exists). If the iteration cap is hit (possible
    only under distance ties), falls back to the nearest prototype with
    lowest-index tie-break, so the result is always a class.
    """
    if protos.m < 2:
        raise ConfigError("scale adaptation needs at least 2 prototypes")
    x = np.asarray(x, dtype=np.float64)
    diff = x[None, :] - protos.centers
    dists = np.sqrt(np.einsum("md,md->m", diff, diff))

    sigma = _initial_sigma(dists, config)
    sigma_min = 0.0
    sigma_max = 0.0
    trace: list[tuple[float, int]] = []
    for _ in range(config.max_adapt_iters):
        state = field_response(x, protos, sigma, config)
        trace.append((float(sigma), state.n_active))
        if state.n_active == 1:
            return PredictionResult(
                predicted=int(np.argmax(state.u)),
                sigma_final=float(sigma),
                terminated=SINGLE_ACTIVATION,
                trace=tuple(trace),
            )
        if state.n_active > 1:
            sigma_max = sigma
            sigma = sigma_max - config.tuning_ratio * (sigma_max - sigma_min)
        elif sigma_max == 0.0:
            sigma = sigma / config.tuning_ratio
        else:
            sigma_min = sigma
            sigma = sigma_max - config.tuning_ratio * (sigma_max - sigma_min)
    return PredictionResult(
        predicted=int(np.argmin(dists)),
        sigma_final=None,
        terminated=FALLBACK_NEAREST,
        trace=tuple(trace),
    )


def predict(
    x: np.ndarray,
    protos: PrototypeSet,
    config: FieldConfig = FieldConfig(),
) -> PredictionResult:
    """Classify one query; total over both scale modes.

    Adaptive mode delegates to adapt_scale. Fixed mode evaluates the field
    once at sigma0 and takes the strongest activation; when nothing activates
    it falls back to the raw kernel argmax (reported as FALLBACK_NEAREST).
    """
    if config.scale_mode == "adaptive":
        return adapt_scale(x, protos, config)
    if protos.m < 2:
        raise ConfigError("prediction needs at least 2 prototypes")
    x = np.asarray(x, dtype=np.float64)
    diff = x[None, :] - protos.centers
    d2 = np.einsum("md,md->m", diff, diff)
    sigma = _initial_sigma(np.sqrt(d2), config)
    state = field_response(x, protos, sigma, config)
    if state.n_active > 0:
        return PredictionResult(
            predicted=int(np.argmax(state.u)),
            sigma_final=float(sigma),
            terminated=SINGLE_ACTIVATION,
            trace=((float(sigma), state.n_active),),
        )
    phi = _dog_from_sq(d2, sigma, config.excite, config.inhibit)
    return PredictionResult(
        predicted=int(np.argmax(phi)),
        sigma_final=float(sigma),
        terminated=FALLBACK_NEAREST,
        trace=((float(sigma), state.n_active),),
    )
