"""Simulated monocular metric depth backends.

Stands in for a slow neural metric-depth model: metric output, a hard range
cap (5 m), and multi-second per-frame latency.  The default "oracle" backend
perturbs the renderer's ground truth with multiplicative log-normal noise
(depth error grows with range and stays positive) and invalidates pixels the
real model could not produce (beyond the range cap).

Backends never sleep; they stamp ``ready_timestamp = capture + latency`` and
the pipeline scheduler enacts the delay.  Noise is seeded per
(seed, frame timestamp), so a frame re-estimated with the same config is
bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from deskrover.stereo import INVALID, DepthMap


class BackendError(KeyError):
    """Unknown or duplicate monodepth backend id."""


@dataclass(frozen=True)
class MonoDepthConfig:
    backend: str = "oracle"
    max_range: float = 5.0     # meters
    latency: float = 7.0       # seconds per frame
    noise_sigma: float = 0.05  # stddev of log-depth noise
    seed: int = 0

    def __post_init__(self):
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")
        if self.latency < 0 or self.noise_sigma < 0:
            raise ValueError("latency and noise_sigma must be >= 0")


@dataclass(frozen=True)
class MonoDepthResult:
    depth: DepthMap            # meters
    capture_timestamp: float
    ready_timestamp: float
    backend_id: str

    def __post_init__(self):
        if self.ready_timestamp < self.capture_timestamp:
            raise ValueError("ready_timestamp precedes capture_timestamp")


class Backend(Protocol):
    def __call__(self, config: MonoDepthConfig, gt_depth_m: np.ndarray,
                 capture_timestamp: float,
                 frame: np.ndarray | None = None) -> MonoDepthResult: ...


_BACKENDS: dict[str, Backend] = {}


def register_backend(backend_id: str, backend: Backend) -> None:
    """Register an estimator under a unique id (extension point for plugging
    in a real model process later)."""
    if backend_id in _BACKENDS:
        raise BackendError(f"backend id already registered: {backend_id!r}")
    _BACKENDS[backend_id] = backend


def get_backend(backend_id: str) -> Backend:
    try:
        return _BACKENDS[backend_id]
    except KeyError:
        raise BackendError(
            f"unknown monodepth backend {backend_id!r}; "
            f"registered: {sorted(_BACKENDS)}") from None


def registered_backends() -> list[str]:
    return sorted(_BACKENDS)


def _noise_rng(config: MonoDepthConfig, capture_timestamp: float) -> np.random.Generator:
    ts_key = int(np.float64(capture_timestamp).view(np.int64))
    return np.random.default_rng([config.seed & 0xFFFFFFFF, ts_key & 0xFFFFFFFFFFFF])


def oracle_backend(config: MonoDepthConfig, gt_depth_m: np.ndarray,
                   capture_timestamp: float,
                   frame: np.ndarray | None = None) -> MonoDepthResult:
    """Ground truth times exp(N(0, sigma^2)) noise, capped at max_range.

    ``gt_depth_m`` must be in meters; non-finite entries (sky) are invalid.
    Pixels whose perturbed depth exceeds the range cap are invalidated, not
    clamped: a clamped value would silently poison error metrics and range
    estimates downstream.  The image frame is unused here; it exists so an
    image-consuming model backend can register through the same interface.
    """
    gt = np.asarray(gt_depth_m, dtype=np.float64)
    finite = np.isfinite(gt) & (gt > 0)
    if config.noise_sigma > 0:
        rng = _noise_rng(config, capture_timestamp)
        noisy = gt * np.exp(rng.normal(0.0, config.noise_sigma, size=gt.shape))
    else:
        noisy = gt.copy()
    valid = finite & (noisy <= config.max_range)
    values = np.where(valid, noisy, INVALID).astype(np.float32)
    return MonoDepthResult(
        depth=DepthMap(values=values, valid=valid),
        capture_timestamp=capture_timestamp,
        ready_timestamp=capture_timestamp + config.latency,
        backend_id="oracle",
    )


def estimate(config: MonoDepthConfig, gt_depth_m: np.ndarray,
             capture_timestamp: float,
             frame: np.ndarray | None = None) -> MonoDepthResult:
    """Run the configured backend on a frame's ground-truth depth (meters)."""
    if gt_depth_m is None:
        raise ValueError("monodepth estimation requires ground-truth depth")
    return get_backend(config.backend)(config, gt_depth_m, capture_timestamp,
                                       frame)


register_backend("oracle", oracle_backend)
