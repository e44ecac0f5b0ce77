"""Run configuration and machine-readable reports for the command line.

Reports are meant to be diffed: floating-point values are printed with 17
significant digits (full round-trip precision), keys are sorted, and the
configuration is echoed together with a SHA-256 digest of its math-relevant
fields.  Wall-clock timings live in a separate block so that reruns with the
same seed produce byte-identical math content.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from .errors import ParameterError

PACKAGE_VERSION = "0.1.0"


def fmt17(x) -> str:
    """Full-precision decimal rendering of one float."""
    return format(float(x), ".17g")


def _to_plain(obj):
    """Recursively convert numpy scalars/arrays for serialization."""
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def dumps_17g(obj, indent: int = 2) -> str:
    """JSON text with every float printed via ``fmt17``.

    The standard encoder offers no hook for float formatting, so this walks
    the structure itself.  Output keys are sorted.
    """

    def render(o, depth: int) -> str:
        pad = " " * (indent * depth)
        pad_in = " " * (indent * (depth + 1))
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [
                f"{pad_in}{json.dumps(str(k))}: {render(v, depth + 1)}"
                for k, v in sorted(o.items())
            ]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            items = [pad_in + render(v, depth + 1) for v in o]
            return "[\n" + ",\n".join(items) + "\n" + pad + "]"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, float):
            if not np.isfinite(o):
                return json.dumps(str(o))
            return fmt17(o)
        if isinstance(o, int):
            return str(o)
        if o is None:
            return "null"
        return json.dumps(str(o))

    return render(_to_plain(obj), 0) + "\n"


@dataclass
class RunConfig:
    """Everything a command needs to rerun deterministically."""

    command: str
    model: str = "sl2r"
    seed: int = 0
    resolution: float = 1.0
    k_resolution: float = 1.0
    lambda_max: float = 24.0
    n_lambda: int = 160
    t_min: float = 1.0
    t_max: float = 25.0
    n_t: int = 49
    trials: int = 20
    tolerance: Optional[float] = None
    outdir: str = "."
    workers: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for f in fields(self):
            if f.type not in ("int", "float", "Optional[float]"):
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            try:
                setattr(self, f.name, int(value) if f.type == "int"
                        else float(value))
            except (TypeError, ValueError) as exc:
                raise ParameterError(
                    f"{f.name} must be a number, got {value!r}") from exc
        if self.tolerance is not None and not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")
        for name in ("resolution", "k_resolution", "lambda_max", "t_max"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")

    def math_fields(self) -> dict:
        """The fields that determine numeric output (paths and worker count
        do not)."""
        d = asdict(self)
        d.pop("outdir")
        d.pop("workers")
        return d

    def digest(self) -> str:
        text = json.dumps(_to_plain(self.math_fields()), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def apply_config_file(config: RunConfig, path) -> RunConfig:
    """Overlay a JSON config file onto flag-built config (file wins)."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ParameterError("config file must hold a JSON object")
    known = asdict(config)
    for key, value in data.items():
        if key == "command":
            continue
        if key not in known:
            raise ParameterError(f"unknown config key {key!r}")
        setattr(config, key, value)
    config.__post_init__()
    return config


@dataclass
class CheckResult:
    name: str
    residual: float
    threshold: float
    passed: bool

    @staticmethod
    def below(name: str, residual: float, threshold: float) -> "CheckResult":
        return CheckResult(name, float(residual), float(threshold),
                           bool(residual < threshold))


@dataclass
class Report:
    command: str
    config: RunConfig
    checks: list = field(default_factory=list)
    data_files: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": _to_plain(self.config.math_fields()),
            "config_hash": self.config.digest(),
            "checks": [asdict(c) for c in self.checks],
            "all_passed": self.passed,
            "data_files": list(self.data_files),
            "notes": _to_plain(self.notes),
            "timings": _to_plain(self.timings),
            "versions": {
                "package": PACKAGE_VERSION,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        }

    def to_json(self) -> str:
        return dumps_17g(self.to_dict())


def write_report(report: Report, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = report.command.replace(" ", "-")
    path = outdir / f"{name}_{report.config.model}_report.json"
    path.write_text(report.to_json())
    return path


def write_csv(path, header, rows) -> Path:
    """CSV with every numeric cell at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                fmt17(v) if isinstance(v, (float, np.floating)) else v
                for v in row
            ])
    return path
