"""CSV/JSON emission with an embedded run manifest.

Files carry no timestamps or host data, so re-running a manifest
reproduces its file byte for byte.  Floats are written with 17
significant digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .errors import InvalidArgumentError


@dataclass
class RunManifest:
    command: str
    parameters: dict = field(default_factory=dict)
    master_seed: int | None = None
    tool_version: str = __version__
    output_path: str = ""

    def as_dict(self) -> dict:
        return {
            "tool": "outlier-lab",
            "command": self.command,
            "parameters": self.parameters,
            "master_seed": self.master_seed,
            "tool_version": self.tool_version,
            "output_path": self.output_path,
        }


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def write_csv(path: str, manifest: dict, columns: dict[str, Any]) -> None:
    """Manifest as ``# key=value`` lines, then a header row and data rows."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    lengths = {c.shape[0] for c in cols}
    if len(lengths) > 1:
        raise InvalidArgumentError("CSV columns must have equal length")
    lines = [f"# {k}={json.dumps(_jsonable(v), sort_keys=True)}" for k, v in manifest.items()]
    lines.append(",".join(names))
    nrows = lengths.pop() if lengths else 0
    for i in range(nrows):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    manifest: dict = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                key, _, val = line[2:].partition("=")
                manifest[key] = json.loads(val)
            elif header is None:
                header = line.split(",")
            else:
                rows.append([float(x) for x in line.split(",")])
    if header is None:
        raise InvalidArgumentError(f"{path}: no header row")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return manifest, {h: data[:, j] for j, h in enumerate(header)}


def dumps_json(manifest: dict | None, data: Any) -> str:
    obj = _jsonable(data) if manifest is None else {"manifest": _jsonable(manifest), "data": _jsonable(data)}
    return json.dumps(obj, indent=2) + "\n"


def write_json(path: str, manifest: dict, data: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(manifest, data))


def read_json(path: str) -> tuple[dict, Any]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "manifest" not in obj:
        raise InvalidArgumentError(f"{path}: not a file produced by this tool")
    return obj["manifest"], obj["data"]
