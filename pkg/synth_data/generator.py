"""
Synthetic frame-feature tracklets and a toy re-identification benchmark.

Frame t of a tracklet is ``appearance + amplitude·sin(2π·f·t + φ)·direction``
plus Gaussian noise; frames inside occlusion windows are replaced by the
occluder plus noise. Look-alike identity pairs share appearance, direction
and amplitude, so their per-frame distributions coincide and only the
temporal pattern (frequency) tells them apart.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from shared import rng as rng_streams
from shared.exceptions import DegenerateDatasetError

from .config import BenchmarkConfig
from .core.models import MotionPattern, Occlusion, SequenceRecord, TrackletSpec

logger = logging.getLogger(__name__)


def render_tracklet(tracklet: TrackletSpec, rng: np.random.Generator) -> np.ndarray:
    """
    Render the d×T feature sequence a tracklet description defines.

    Args:
        tracklet: Validated tracklet description
        rng: Noise stream; the same stream state gives the same output

    Returns:
        d×T float64 matrix
    """
    appearance = np.asarray(tracklet.appearance, dtype=np.float64)
    direction = np.asarray(tracklet.motion.direction, dtype=np.float64)
    t = np.arange(tracklet.length, dtype=np.float64)
    signal = tracklet.motion.amplitude * np.sin(2.0 * np.pi * tracklet.motion.frequency * t + tracklet.motion.phase)
    frames = appearance[:, None] + direction[:, None] * signal[None, :]
    noise = rng.normal(0.0, tracklet.noise_sigma, size=frames.shape)
    frames = frames + noise
    for window in tracklet.occlusions:
        occluder = np.asarray(window.occluder, dtype=np.float64)
        frames[:, window.start:window.end] = occluder[:, None] + noise[:, window.start:window.end]
    return frames


def marginal_statistics(tracklet: TrackletSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-frame mean and covariance of a clean frame, marginalized over a uniform phase.

    Returns:
        Tuple of (mean vector, d×d covariance)
    """
    appearance = np.asarray(tracklet.appearance, dtype=np.float64)
    direction = np.asarray(tracklet.motion.direction, dtype=np.float64)
    amplitude = tracklet.motion.amplitude if tracklet.motion.frequency > 0 else 0.0
    covariance = 0.5 * amplitude ** 2 * np.outer(direction, direction)
    covariance += tracklet.noise_sigma ** 2 * np.eye(len(appearance))
    return appearance.copy(), covariance


def temporal_autocovariance(tracklet: TrackletSpec, lag: int) -> np.ndarray:
    """
    Covariance between frames t and t+lag of a clean tracklet, over a uniform phase.

    Returns:
        d×d matrix
    """
    direction = np.asarray(tracklet.motion.direction, dtype=np.float64)
    amplitude = tracklet.motion.amplitude if tracklet.motion.frequency > 0 else 0.0
    cov = 0.5 * amplitude ** 2 * np.cos(2.0 * np.pi * tracklet.motion.frequency * lag) * np.outer(direction, direction)
    if lag == 0:
        cov += tracklet.noise_sigma ** 2 * np.eye(len(direction))
    return cov


@dataclass
class IdentityProfile:
    """Per-identity generation parameters."""

    person_id: int
    appearance: np.ndarray
    direction: np.ndarray
    frequency: float
    pair_id: Optional[int] = None


@dataclass
class Benchmark:
    """Labeled train/query/gallery tracklet sets."""

    train: List[SequenceRecord] = field(default_factory=list)
    query: List[SequenceRecord] = field(default_factory=list)
    gallery: List[SequenceRecord] = field(default_factory=list)
    identities: List[IdentityProfile] = field(default_factory=list)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _similar_appearance(base: np.ndarray, similarity: float, rng: np.random.Generator) -> np.ndarray:
    """Vector with the norm of ``base`` and the given cosine similarity to it."""
    orthogonal = rng.normal(size=base.shape)
    if similarity >= 1.0:
        return base.copy()
    base_unit = _unit(base)
    orthogonal = _unit(orthogonal - (orthogonal @ base_unit) * base_unit)
    return np.linalg.norm(base) * (similarity * base_unit + np.sqrt(1.0 - similarity ** 2) * orthogonal)


def build_identities(config: BenchmarkConfig, seed: int) -> List[IdentityProfile]:
    """Draw appearance, direction and frequency for every identity."""
    rng = rng_streams.stream(seed, rng_streams.BENCHMARK, 0)
    d = config.frame_dim
    num_pairs = int(round(config.lookalike_fraction * config.num_identities / 2))
    profiles: List[IdentityProfile] = []
    for pair in range(num_pairs):
        appearance = rng.normal(0.0, config.appearance_scale, size=d)
        twin = _similar_appearance(appearance, config.appearance_similarity, rng)
        direction = _unit(rng.normal(size=d))
        slow = rng.uniform(*config.low_frequency_band)
        fast = rng.uniform(*config.high_frequency_band)
        profiles.append(IdentityProfile(2 * pair, appearance, direction, slow, pair))
        profiles.append(IdentityProfile(2 * pair + 1, twin, direction.copy(), fast, pair))
    low = config.low_frequency_band[0]
    high = config.high_frequency_band[1]
    for person_id in range(2 * num_pairs, config.num_identities):
        profiles.append(IdentityProfile(
            person_id,
            rng.normal(0.0, config.appearance_scale, size=d),
            _unit(rng.normal(size=d)),
            rng.uniform(low, high),
        ))
    return profiles


def _tracklet_spec(profile: IdentityProfile, camera_id: int, camera_bias: np.ndarray,
                   occluder: np.ndarray, config: BenchmarkConfig,
                   rng: np.random.Generator) -> TrackletSpec:
    phase = rng.uniform(0.0, 2.0 * np.pi)
    occlusions: List[Occlusion] = []
    if rng.uniform() < config.occlusion_probability:
        span = max(1, int(round(config.occlusion_length_fraction * config.length)))
        start = int(rng.integers(0, config.length - span + 1))
        if not config.shared_occluders:
            occluder = rng.normal(0.0, config.occluder_scale, size=config.frame_dim)
        occlusions.append(Occlusion(start=start, end=start + span, occluder=occluder.tolist()))
    return TrackletSpec(
        person_id=profile.person_id,
        camera_id=camera_id,
        length=config.length,
        appearance=(profile.appearance + camera_bias).tolist(),
        motion=MotionPattern(frequency=profile.frequency, phase=phase, amplitude=config.amplitude,
                             direction=profile.direction.tolist()),
        noise_sigma=config.noise_sigma,
        occlusions=occlusions,
    )


def generate_benchmark(config: BenchmarkConfig, seed: int, threads: int = 1) -> Benchmark:
    """
    Generate a toy re-identification benchmark.

    Every identity appears in every camera. The query set holds one tracklet
    per identity from camera 1; the gallery holds the remaining evaluation
    tracklets; the training set holds separate tracklets of the same
    identities, cycling through the cameras.

    Args:
        config: Benchmark parameters
        seed: Generation seed
        threads: Worker threads for rendering (output does not depend on it)

    Returns:
        Benchmark with train, query and gallery records
    """
    if config.num_identities < 2 or config.cameras < 2:
        raise DegenerateDatasetError("a benchmark needs at least two identities and two cameras",
                                     num_identities=config.num_identities)
    profiles = build_identities(config, seed)
    shared = rng_streams.stream(seed, rng_streams.BENCHMARK, 1)
    camera_biases = shared.normal(0.0, config.camera_bias_scale, size=(config.cameras, config.frame_dim))
    occluders = shared.normal(0.0, config.occluder_scale, size=(config.cameras, config.frame_dim))

    jobs: List[Tuple[str, IdentityProfile, int]] = []
    for profile in profiles:
        for camera in range(config.cameras):
            for _ in range(config.tracklets_per_id_per_cam):
                jobs.append(("eval", profile, camera))
        for k in range(config.train_tracklets_per_id):
            jobs.append(("train", profile, k % config.cameras))

    def render(index: int) -> Tuple[str, SequenceRecord]:
        split, profile, camera = jobs[index]
        rng = rng_streams.stream(seed, rng_streams.TRACKLET, index)
        tracklet = _tracklet_spec(profile, camera + 1, camera_biases[camera], occluders[camera], config, rng)
        record = SequenceRecord(
            person_id=tracklet.person_id,
            camera_id=tracklet.camera_id,
            features=render_tracklet(tracklet, rng),
            metadata={"frequency": tracklet.motion.frequency, "occlusion_mask": tracklet.occlusion_mask()},
        )
        return split, record

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rendered = list(pool.map(render, range(len(jobs))))

    benchmark = Benchmark(identities=profiles)
    seen_query: set[int] = set()
    for split, record in rendered:
        if split == "train":
            benchmark.train.append(record)
        elif record.camera_id == 1 and record.person_id not in seen_query:
            seen_query.add(record.person_id)
            benchmark.query.append(record)
        else:
            benchmark.gallery.append(record)

    logger.info(f"Generated benchmark: {len(benchmark.train)} train, {len(benchmark.query)} query, "
                f"{len(benchmark.gallery)} gallery tracklets")
    return benchmark


def lookalike_pair(frame_dim: int, length: int, frequencies: Tuple[float, float] = (0.05, 0.15),
                   noise_sigma: float = 0.0, seed: int = 0) -> Tuple[TrackletSpec, TrackletSpec]:
    """Two specs with identical appearance and direction but different motion frequency."""
    rng = rng_streams.stream(seed, rng_streams.BENCHMARK, 3)
    appearance = rng.normal(size=frame_dim).tolist()
    direction = _unit(rng.normal(size=frame_dim)).tolist()
    return tuple(  # type: ignore[return-value]
        TrackletSpec(person_id=i, camera_id=1, length=length, appearance=appearance,
                     motion=MotionPattern(frequency=freq, phase=0.0, amplitude=1.0, direction=direction),
                     noise_sigma=noise_sigma)
        for i, freq in enumerate(frequencies)
    )
