"""
Evaluation reports and run manifests.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

CSV_COLUMNS = ["scene", "n_sequences", "ade_m", "fde_m", "collision_pct"]


@dataclass
class SceneMetrics:
    """ADE/FDE in meters and collision rate in percent for one scene (or an aggregate row)."""
    scene: str
    n_sequences: int
    ade_m: float
    fde_m: float
    collision_pct: float

    def to_row(self) -> List[Any]:
        return [self.scene, self.n_sequences, f"{self.ade_m:.6f}", f"{self.fde_m:.6f}", f"{self.collision_pct:.6f}"]


@dataclass
class EvalReport:
    """
    Metrics of one evaluation run.

    Attributes:
        scenes: Per-scene rows, sorted by scene name
        aggregate: Row pooled over every evaluated sequence
        config: Snapshot of the configuration used
        seed: Seed of the run
        predictor: model | linear | constant_velocity
        label: Fold name in leave-one-out runs
    """
    scenes: List[SceneMetrics] = field(default_factory=list)
    aggregate: Optional[SceneMetrics] = None
    config: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    predictor: str = "model"
    label: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "predictor": self.predictor,
            "seed": self.seed,
            "config": self.config,
            "scenes": [asdict(s) for s in self.scenes],
            "aggregate": asdict(self.aggregate) if self.aggregate else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        rows = list(self.scenes)
        if self.aggregate is not None:
            rows.append(self.aggregate)
        return metrics_to_csv(rows)


def metrics_to_csv(rows: List[SceneMetrics]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.to_row())
    return buffer.getvalue()


@dataclass
class RunManifest:
    """Provenance record written next to every command's outputs."""
    command: str
    config: Dict[str, Any]
    seed: Optional[int]
    input_hashes: Dict[str, str]
    tool_version: str
    started_at: str
    finished_at: Optional[str] = None
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
