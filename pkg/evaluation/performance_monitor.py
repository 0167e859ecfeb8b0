"""
Resource monitoring for command runs.

A background thread samples CPU and resident memory of the current process
while a command runs. Commands mark named phases (generation, training,
embedding, ranking) so the summary reports where the wall time went.
"""

import logging
import threading
import time
from contextlib import contextmanager, nullcontext
from pathlib import Path
from typing import ContextManager, Dict, Iterator, List, Optional, Union

import pandas as pd
import psutil
from pydantic import BaseModel, Field, model_validator

logger = logging.getLogger(__name__)

_MB = 1024.0 * 1024.0


class ResourceSample(BaseModel):
    """Process usage at one instant."""

    elapsed_s: float = Field(..., ge=0.0, description="Seconds since monitoring started")
    phase: str = Field(default="", description="Phase active when the sample was taken")
    cpu_percent: float = Field(..., ge=0.0, description="CPU usage percentage (may exceed 100 on several cores)")
    rss_mb: float = Field(..., ge=0.0, description="Resident memory in MB")


class RunMetrics(BaseModel):
    """
    Summary of one monitored command.
    """

    command: str = Field(default="", description="Name of the monitored command")
    wall_time_s: float = Field(..., ge=0.0, description="Total wall time in seconds")
    peak_rss_mb: float = Field(..., ge=0.0, description="Peak resident memory in MB")
    mean_rss_mb: float = Field(..., ge=0.0, description="Mean resident memory in MB")
    peak_cpu_percent: float = Field(..., ge=0.0, description="Peak CPU usage percentage")
    mean_cpu_percent: float = Field(..., ge=0.0, description="Mean CPU usage percentage")
    phases: Dict[str, float] = Field(default_factory=dict, description="Wall seconds spent in each named phase")
    num_samples: int = Field(default=0, ge=0, description="Number of resource samples")
    samples: List[ResourceSample] = Field(default_factory=list, description="Raw samples, excluded from saved summaries")

    @model_validator(mode='after')
    def validate_means(self) -> 'RunMetrics':
        """Ensure means do not exceed peaks."""
        if self.mean_rss_mb > self.peak_rss_mb:
            raise ValueError('mean memory cannot exceed peak memory')
        if self.mean_cpu_percent > self.peak_cpu_percent:
            raise ValueError('mean CPU cannot exceed peak CPU')
        return self


class RunMonitor:
    """
    Context manager sampling the current process while a command runs.
    """

    def __init__(self, command: str = "", sampling_interval: float = 0.5,
                 process_id: Optional[int] = None):
        """
        Initialize the monitor.

        Args:
            command: Label stored with the metrics
            sampling_interval: Seconds between samples
            process_id: Process to watch (defaults to the current process)
        """
        self.command = command
        self.sampling_interval = sampling_interval
        self.process = psutil.Process(process_id) if process_id else psutil.Process()

        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._samples: List[ResourceSample] = []
        self._phases: Dict[str, float] = {}
        self._current_phase = ""
        self._start: Optional[float] = None
        self._end: Optional[float] = None

    @property
    def running(self) -> bool:
        return self._thread is not None and not self._stop.is_set()

    def __enter__(self) -> 'RunMonitor':
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.stop()

    def start(self) -> None:
        """Start sampling in a daemon thread."""
        if self.running:
            return
        self._samples.clear()
        self._phases.clear()
        self._stop.clear()
        self._start = time.perf_counter()
        self._end = None
        self._thread = threading.Thread(target=self._sample_loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        """Stop sampling and fix the end time."""
        if not self.running:
            return
        self._stop.set()
        self._end = time.perf_counter()
        if self._thread is not None:
            self._thread.join(timeout=max(1.0, 2 * self.sampling_interval))

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        """Attribute the enclosed wall time (and samples) to ``name``; re-entering a phase accumulates."""
        previous = self._current_phase
        self._current_phase = name
        started = time.perf_counter()
        try:
            yield
        finally:
            self._phases[name] = self._phases.get(name, 0.0) + time.perf_counter() - started
            self._current_phase = previous

    def _sample_loop(self) -> None:
        while not self._stop.is_set():
            try:
                self._samples.append(self._capture_sample())
            except (psutil.NoSuchProcess, psutil.AccessDenied):
                break
            except Exception as e:
                logger.debug(f"Resource sample failed: {e}")
            self._stop.wait(self.sampling_interval)

    def _capture_sample(self) -> ResourceSample:
        elapsed = time.perf_counter() - (self._start or time.perf_counter())
        return ResourceSample(
            elapsed_s=max(0.0, elapsed),
            phase=self._current_phase,
            cpu_percent=self.process.cpu_percent(),
            rss_mb=self.process.memory_info().rss / _MB,
        )

    def metrics(self) -> RunMetrics:
        """Aggregate the samples taken so far."""
        if self._start is None:
            return RunMetrics(command=self.command, wall_time_s=0.0, peak_rss_mb=0.0, mean_rss_mb=0.0,
                              peak_cpu_percent=0.0, mean_cpu_percent=0.0)

        end = self._end if self._end is not None else time.perf_counter()
        samples = list(self._samples)
        frame = self.samples_frame(samples)
        if frame.empty:
            peak_rss = mean_rss = peak_cpu = mean_cpu = 0.0
        else:
            peak_rss, peak_cpu = float(frame["rss_mb"].max()), float(frame["cpu_percent"].max())
            mean_rss = min(peak_rss, float(frame["rss_mb"].mean()))
            mean_cpu = min(peak_cpu, float(frame["cpu_percent"].mean()))

        return RunMetrics(
            command=self.command,
            wall_time_s=end - self._start,
            peak_rss_mb=peak_rss,
            mean_rss_mb=mean_rss,
            peak_cpu_percent=peak_cpu,
            mean_cpu_percent=mean_cpu,
            phases=dict(self._phases),
            num_samples=len(samples),
            samples=samples,
        )

    def samples_frame(self, samples: Optional[List[ResourceSample]] = None) -> pd.DataFrame:
        """One row per sample."""
        rows = [s.model_dump() for s in (self._samples if samples is None else samples)]
        return pd.DataFrame(rows, columns=list(ResourceSample.model_fields))

    def save(self, path: Union[str, Path], samples_csv: Optional[Union[str, Path]] = None) -> Path:
        """
        Write the JSON summary to ``path`` and optionally the raw samples as CSV.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        metrics = self.metrics()
        path.write_text(metrics.model_dump_json(indent=2, exclude={"samples"}))
        if samples_csv is not None:
            self.samples_frame(metrics.samples).to_csv(samples_csv, index=False)
        self.log_summary(metrics)
        return path

    def log_summary(self, metrics: Optional[RunMetrics] = None) -> RunMetrics:
        """Log wall time and peak memory without writing anything."""
        metrics = metrics or self.metrics()
        logger.info(f"{self.command or 'run'} took {metrics.wall_time_s:.2f}s, "
                    f"peak memory {metrics.peak_rss_mb:.1f} MB")
        return metrics


def in_phase(monitor: Optional[RunMonitor], name: str) -> ContextManager[None]:
    """``monitor.phase(name)``, or a no-op without a monitor."""
    return monitor.phase(name) if monitor is not None else nullcontext()


@contextmanager
def monitor_run(command: str = "", sampling_interval: float = 0.5) -> Iterator[RunMonitor]:
    """
    Monitor the enclosed block.

    Example:
        with monitor_run("train") as monitor:
            with monitor.phase("train"):
                run_training()
        print(monitor.metrics().wall_time_s)
    """
    with RunMonitor(command=command, sampling_interval=sampling_interval) as monitor:
        yield monitor
