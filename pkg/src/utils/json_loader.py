"""JSON configuration loader utilities."""
import json
from pathlib import Path
from typing import Any, Dict


class JSONLoader:
    """Load and save JSON configuration, fold and report files."""

    @staticmethod
    def load(path: Path) -> Dict[str, Any]:
        """Load JSON file."""
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    @staticmethod
    def dumps(data: Any) -> str:
        """Canonical text: sorted keys, two-space indent, trailing newline."""
        return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @staticmethod
    def save(data: Any, path: Path) -> None:
        """Save data to JSON file (canonical form, byte-stable for equal data)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(JSONLoader.dumps(data))
