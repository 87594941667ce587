"""Training metrics: CSV persistence, reward transform, learning curves.

Files are plain CSV with a fixed column order so runs from different
algorithms can be concatenated and compared. Floats are written with
str(float) so a rerun with the same seed is byte-identical.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

METRICS_VERSION_LINE = "# scenecast-metrics-v1"
CSV_COLUMNS = ("seed", "episode", "algorithm", "total_reward",
               "transformed_reward", "steps_taken", "waste_count_total",
               "wall_time_s")

# raw returns are large negatives; the log compresses them for plotting
TRANSFORM_FLOOR = 1e-9


def transformed_reward(total_reward: float) -> float:
    """-log|R| with a floor so R == 0 stays finite."""
    return -math.log(max(abs(total_reward), TRANSFORM_FLOOR))


@dataclass(frozen=True)
class MetricRow:
    seed: int
    episode: int
    algorithm: str
    total_reward: float
    transformed_reward: float
    steps_taken: int
    waste_count_total: int
    wall_time_s: float

    @classmethod
    def build(cls, seed, episode, algorithm, total_reward, steps_taken,
              waste_count_total, wall_time_s):
        return cls(seed=int(seed), episode=int(episode),
                   algorithm=str(algorithm),
                   total_reward=float(total_reward),
                   transformed_reward=transformed_reward(total_reward),
                   steps_taken=int(steps_taken),
                   waste_count_total=int(waste_count_total),
                   wall_time_s=float(wall_time_s))


class MetricsWriter:
    """Append-only metrics file: header first, then one line per row.

    Rows are flushed as they arrive so a killed run keeps everything
    recorded up to that point.  Failure annotations are comment lines.
    """

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._fh.write(METRICS_VERSION_LINE + "\n")
        self._fh.write(",".join(CSV_COLUMNS) + "\n")
        self._fh.flush()
        self.rows_written = 0

    def write_row(self, row: MetricRow) -> None:
        self._fh.write(",".join(str(getattr(row, c))
                                for c in CSV_COLUMNS) + "\n")
        self._fh.flush()
        self.rows_written += 1

    def write_failure(self, seed, reason: str) -> None:
        self._fh.write(f"# seed {seed} failed: {reason}\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_metrics(path, rows) -> None:
    """Write rows (any iterable of MetricRow) with the version header."""
    with MetricsWriter(path) as writer:
        for row in rows:
            writer.write_row(row)


def read_metrics(path):
    """Read and validate a metrics CSV; returns a list of MetricRow."""
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != METRICS_VERSION_LINE:
            raise InvalidParameterError(
                f"{path}: expected header {METRICS_VERSION_LINE!r}, "
                f"got {first!r}")
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise InvalidParameterError(
                f"{path}: column mismatch {header} != {CSV_COLUMNS}")
        out = []
        for rec in reader:
            if not rec or rec[0].startswith("#"):
                continue  # per-seed failure annotations
            if len(rec) != len(CSV_COLUMNS):
                raise InvalidParameterError(
                    f"{path}: bad record length {len(rec)}: {rec}")
            out.append(MetricRow(
                seed=int(rec[0]), episode=int(rec[1]), algorithm=rec[2],
                total_reward=float(rec[3]), transformed_reward=float(rec[4]),
                steps_taken=int(rec[5]), waste_count_total=int(rec[6]),
                wall_time_s=float(rec[7])))
        return out


def rows_as_arrays(rows):
    """Column-major view of a row list for numeric work."""
    return {
        "seed": np.array([r.seed for r in rows], dtype=np.int64),
        "episode": np.array([r.episode for r in rows], dtype=np.int64),
        "algorithm": np.array([r.algorithm for r in rows]),
        "total_reward": np.array([r.total_reward for r in rows]),
        "transformed_reward": np.array(
            [r.transformed_reward for r in rows]),
        "steps_taken": np.array([r.steps_taken for r in rows],
                                dtype=np.int64),
        "waste_count_total": np.array(
            [r.waste_count_total for r in rows], dtype=np.int64),
        "wall_time_s": np.array([r.wall_time_s for r in rows]),
    }


@dataclass(frozen=True)
class Curve:
    """Per-episode cross-seed mean with a 95% normal band."""
    episodes: np.ndarray
    mean: np.ndarray
    band: np.ndarray      # 1.96 * stderr; zero when only one seed
    num_seeds: int


def aggregate_curve(rows, metric: str, algorithm=None) -> Curve:
    """Average a metric across seeds at each recorded episode.

    Episodes present for only a subset of seeds are dropped so the curve
    always averages the same population.
    """
    if metric not in CSV_COLUMNS[3:]:
        raise InvalidParameterError(f"unknown metric {metric!r}")
    if algorithm is not None:
        rows = [r for r in rows if r.algorithm == algorithm]
    if not rows:
        raise InvalidParameterError("no rows to aggregate")
    by_seed = {}
    for r in rows:
        by_seed.setdefault(r.seed, {})[r.episode] = getattr(r, metric)
    seeds = sorted(by_seed)
    common = set(by_seed[seeds[0]])
    for s in seeds[1:]:
        common &= set(by_seed[s])
    episodes = np.array(sorted(common), dtype=np.int64)
    if episodes.size == 0:
        raise InvalidParameterError("seeds share no recorded episodes")
    values = np.array([[by_seed[s][e] for e in episodes] for s in seeds],
                      dtype=np.float64)
    mean = values.mean(axis=0)
    if len(seeds) > 1:
        band = 1.96 * values.std(axis=0, ddof=1) / math.sqrt(len(seeds))
    else:
        band = np.zeros_like(mean)
    return Curve(episodes=episodes, mean=mean, band=band,
                 num_seeds=len(seeds))


def window_stats(rows, metric: str, fraction: float = 0.1, end: bool = True):
    """Mean and stderr of a metric over the first or last fraction of
    episodes, pooled across seeds.

    Uses each seed's own episode ordering so ragged runs still work.
    """
    if not 0.0 < fraction <= 1.0:
        raise InvalidParameterError(f"fraction must be in (0, 1], got "
                                    f"{fraction}")
    by_seed = {}
    for r in rows:
        by_seed.setdefault(r.seed, []).append(r)
    samples = []
    for seed_rows in by_seed.values():
        seed_rows.sort(key=lambda r: r.episode)
        k = max(1, int(round(fraction * len(seed_rows))))
        window = seed_rows[-k:] if end else seed_rows[:k]
        samples.extend(getattr(r, metric) for r in window)
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise InvalidParameterError("no rows in window")
    stderr = (values.std(ddof=1) / math.sqrt(values.size)
              if values.size > 1 else 0.0)
    return float(values.mean()), float(stderr)


def plot_curves(curves: dict, path: str, metric: str, title=None) -> None:
    """Render labeled learning curves with shaded bands to an SVG/PNG file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for label, curve in sorted(curves.items()):
        ax.plot(curve.episodes, curve.mean, label=label, linewidth=1.4)
        if curve.num_seeds > 1:
            ax.fill_between(curve.episodes, curve.mean - curve.band,
                            curve.mean + curve.band, alpha=0.2)
    ax.set_xlabel("episode")
    ax.set_ylabel(metric.replace("_", " "))
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
