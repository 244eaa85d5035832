import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable
import pandas as pd
from loguru import logger
from pydantic import BaseModel
from . import __version__
from .analytics import Report
from .dataset import expand_input_paths
from .models import CATEGORY_ORDER
from .pipeline import NetworkResult
from .textpipe import sha256_file

SCORED_COLUMNS = ["tweet_id", "category", "score", "best_match_id", "window_size"]
WINDOW_COLUMNS = ["target_tweet_id", "member_rank", "member_tweet_id", "member_created_at"]
MANIFEST_NAME = "run_manifest.json"
TRACKED_LIBRARIES = ("numpy", "scipy", "scikit-learn", "nltk", "pandas", "pydantic", "loguru")


def to_json_text(data: Any) -> str:
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="json")
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def library_versions() -> dict[str, str]:
    versions = {"echodetect": __version__, "python": platform.python_version()}
    for name in TRACKED_LIBRARIES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


class OutputWriter:
    """
    Writes run outputs into one directory and keeps the sha256 of each file
    for the run manifest. Nothing written here carries wall-clock data.
    """

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.checksums: dict[str, str] = {}

    def track(self, path: Path) -> Path:
        self.checksums[path.name] = sha256_file(path)
        logger.success(f"Saved: {path}")
        return path

    def write_json(self, name: str, data: Any) -> Path:
        path = self.output_dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(to_json_text(data))
        return self.track(path)

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.output_dir / name
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
        return self.track(path)

    # --- score ---

    def write_scored(self, result: NetworkResult) -> list[Path]:
        rows = [s.model_dump(mode="json") for s in result.tweets]
        frame = pd.DataFrame(rows, columns=SCORED_COLUMNS)
        return [
            self.write_csv(f"{result.ego_user_id}.scored.csv", frame),
            self.write_json(f"{result.ego_user_id}.scored.json", result.model_dump(mode="json", exclude={"window_rows"})),
        ]

    def write_windows(self, result: NetworkResult) -> Path:
        frame = pd.DataFrame(result.window_rows or [], columns=WINDOW_COLUMNS)
        return self.write_csv(f"{result.ego_user_id}.windows.csv", frame)

    # --- report ---

    def write_report(self, report: Report) -> list[Path]:
        paths = [self.write_json("report.json", report)]

        paths.append(self.write_csv("categories.csv", pd.DataFrame(
            [
                {k: getattr(c, k) for k in ("count", "high_scored_count", "mean", "median", "std")}
                | {"category": c.category.value}
                for c in report.categories
            ],
            columns=["category", "count", "high_scored_count", "mean", "median", "std"],
        )))

        paths.append(self.write_csv("histograms.csv", pd.DataFrame(
            [
                {"category": c.category.value, "bin_low": lo, "bin_high": hi, "count": n}
                for c in report.categories
                for lo, hi, n in c.histogram
            ],
            columns=["category", "bin_low", "bin_high", "count"],
        )))

        paths.append(self.write_csv("profiles.csv", pd.DataFrame(
            [p.model_dump() for p in report.profiles],
            columns=["user_id", "total_messages", "tagged", "high_nontagged", "tagged_pct", "high_nontagged_pct"],
        )))

        grid_rows, cdf_rows = [], []
        if report.distributions is not None:
            edges = report.distributions.edges
            for i, row in enumerate(report.distributions.grid):
                for j, count in enumerate(row):
                    grid_rows.append({
                        "tagged_low": edges[i],
                        "tagged_high": edges[i + 1],
                        "nontagged_low": edges[j],
                        "nontagged_high": edges[j + 1],
                        "count": count,
                    })
            cdf_rows = [{"high_nontagged_pct": v, "fraction": f} for v, f in report.distributions.cdf]
        paths.append(self.write_csv("profile_grid.csv", pd.DataFrame(
            grid_rows, columns=["tagged_low", "tagged_high", "nontagged_low", "nontagged_high", "count"]
        )))
        paths.append(self.write_csv("profile_cdf.csv", pd.DataFrame(cdf_rows, columns=["high_nontagged_pct", "fraction"])))

        paths.append(self.write_csv("window_cdf.csv", pd.DataFrame(
            [{"hours": v, "fraction": f} for v, f in report.dataset.window_cdf], columns=["hours", "fraction"]
        )))

        paths.append(self.write_csv("threshold_sweep.csv", pd.DataFrame(
            [
                {"threshold": t, "category": c.value, "high_scored_count": counts[c]}
                for t, counts in report.threshold_sweep.items()
                for c in CATEGORY_ORDER
            ],
            columns=["threshold", "category", "high_scored_count"],
        )))
        return paths

    def write_manifest(self, command: str, config: dict) -> Path:
        """Config echo, versions and the checksum of every other file written by this writer."""
        manifest = {
            "command": command,
            "config": config,
            "versions": library_versions(),
            "outputs": dict(sorted(self.checksums.items())),
        }
        path = self.output_dir / MANIFEST_NAME
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(to_json_text(manifest))
        logger.success(f"Saved: {path}")
        return path


def load_results(paths: Iterable[Path]) -> list[NetworkResult]:
    """Read `*.scored.json` files (directories are searched) back into results."""
    results = []
    for path in expand_input_paths(paths, pattern="*.scored.json"):
        with open(path, "r", encoding="utf-8") as f:
            results.append(NetworkResult.model_validate(json.load(f)))
        logger.debug(f"Loaded {path}")
    return results
