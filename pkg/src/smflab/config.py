"""Experiment configuration: TOML (de)serialization, validation, hashing.

A config file holds one ``[scenario]`` table plus an optional free-form
``[metadata]`` table that is copied verbatim into the run manifest (hardware
descriptions, lab notes; nothing in it affects any computed number)::

    [scenario]
    name = "bell"                  # spectrum | tomography | bell | eraser | table_s1
    subspace = [1, -1]             # OAM qubit indices (required except table_s1)
    pairs_per_setting = 10000
    seed = 1
    theta_grid_points = 16
    spectrum_window = 4
    output_dir = "runs/bell"
    werner_p = 0.9                 # or: target_fidelity = 0.925 (not both)
    birefringence = [0.0, 0.0, 0.0]

    [[scenario.rows]]              # table_s1 only
    label = "free-space"
    ell = 1
    target_fidelity = 0.95
    reference = true

The config hash is sha256 over the canonical JSON (sorted keys, compact
separators) of the semantic fields: scenario, subspace, channel, pair budget,
seed, grid sizes and table rows. ``output_dir`` and ``metadata`` do not enter
the hash; everything that changes a computed number does.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .optics import ChannelParams
from .states import SubspaceLabel, werner_p_for_fidelity


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


SCENARIOS = ("spectrum", "tomography", "bell", "eraser", "table_s1")

DEFAULT_PAIRS_PER_SETTING = 10_000
DEFAULT_SEED = 1
DEFAULT_THETA_GRID_POINTS = 16
DEFAULT_SPECTRUM_WINDOW = 4


@dataclass(frozen=True)
class TableRow:
    """One transport condition of the summary table."""

    label: str
    ell: int
    target_fidelity: float
    reference: bool = False

    def __post_init__(self) -> None:
        if self.ell < 1:
            raise ConfigError(f"rows[].ell must be >= 1, got {self.ell!r}")
        if not 0.25 <= self.target_fidelity <= 1.0:
            raise ConfigError(
                f"rows[].target_fidelity must be in [0.25, 1], got {self.target_fidelity!r}"
            )


DEFAULT_TABLE_ROWS = (
    TableRow(label="free-space", ell=1, target_fidelity=0.95, reference=True),
    TableRow(label="smf-2m", ell=1, target_fidelity=0.94),
    TableRow(label="smf-250m", ell=1, target_fidelity=0.90),
    TableRow(label="free-space", ell=2, target_fidelity=0.93, reference=True),
    TableRow(label="smf-250m", ell=2, target_fidelity=0.86),
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated run description."""

    scenario: str
    subspace: SubspaceLabel = SubspaceLabel(1, -1)
    channel: ChannelParams = ChannelParams()
    pairs_per_setting: int = DEFAULT_PAIRS_PER_SETTING
    seed: int = DEFAULT_SEED
    output_dir: Path = Path("runs")
    theta_grid_points: int = DEFAULT_THETA_GRID_POINTS
    spectrum_window: int = DEFAULT_SPECTRUM_WINDOW
    table_rows: tuple = DEFAULT_TABLE_ROWS
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario.name must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.pairs_per_setting < 1:
            raise ConfigError(f"scenario.pairs_per_setting must be >= 1, got {self.pairs_per_setting!r}")
        if self.theta_grid_points < 1:
            raise ConfigError(f"scenario.theta_grid_points must be >= 1, got {self.theta_grid_points!r}")
        if self.scenario in ("bell", "eraser") and self.theta_grid_points < 8:
            raise ConfigError(
                "scenario.theta_grid_points: fringe fits need >= 8 points, got "
                f"{self.theta_grid_points!r}"
            )
        if self.spectrum_window < 0:
            raise ConfigError(f"scenario.spectrum_window must be >= 0, got {self.spectrum_window!r}")
        if self.scenario == "spectrum":
            for ell in (self.subspace.ell_1, self.subspace.ell_2):
                if abs(ell) > self.spectrum_window:
                    raise ConfigError(
                        f"scenario.subspace: index {ell} is outside spectrum_window "
                        f"{self.spectrum_window}"
                    )
        if self.scenario == "table_s1":
            if not self.table_rows:
                raise ConfigError("scenario.rows: table_s1 needs at least one row")
            by_ell = {}
            for row in self.table_rows:
                by_ell.setdefault(row.ell, []).append(row)
            for ell, rows in sorted(by_ell.items()):
                refs = [r for r in rows if r.reference]
                if len(refs) != 1:
                    raise ConfigError(
                        f"scenario.rows: ell={ell} needs exactly one reference row, got {len(refs)}"
                    )
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "table_rows", tuple(self.table_rows))

    def semantic_dict(self) -> dict:
        """The fields that participate in the config hash."""
        return {
            "scenario": self.scenario,
            "subspace": [self.subspace.ell_1, self.subspace.ell_2],
            "werner_p": self.channel.werner_p,
            "birefringence": list(self.channel.birefringence_angles),
            "pairs_per_setting": self.pairs_per_setting,
            "seed": self.seed,
            "theta_grid_points": self.theta_grid_points,
            "spectrum_window": self.spectrum_window,
            "rows": [
                {
                    "label": r.label,
                    "ell": r.ell,
                    "target_fidelity": r.target_fidelity,
                    "reference": r.reference,
                }
                for r in self.table_rows
            ]
            if self.scenario == "table_s1"
            else [],
        }


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 hex digest of the canonical semantic JSON."""
    canonical = json.dumps(cfg.semantic_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _expect(table: dict, key: str, types, where: str):
    value = table[key]
    if not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise ConfigError(f"{where}.{key}: expected {names}, got {type(value).__name__}")
    return value


def config_from_dict(data: dict, scenario_override: str | None = None) -> ExperimentConfig:
    """Build a validated config from a parsed TOML document."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a table, got {type(data).__name__}")
    unknown_top = set(data) - {"scenario", "metadata"}
    if unknown_top:
        raise ConfigError(f"unknown top-level tables: {', '.join(sorted(unknown_top))}")
    scenario_table = data.get("scenario", {})
    if not isinstance(scenario_table, dict):
        raise ConfigError("scenario: expected a table")
    known = {
        "name",
        "subspace",
        "pairs_per_setting",
        "seed",
        "theta_grid_points",
        "spectrum_window",
        "output_dir",
        "werner_p",
        "target_fidelity",
        "birefringence",
        "rows",
    }
    unknown = set(scenario_table) - known
    if unknown:
        raise ConfigError(f"scenario: unknown fields: {', '.join(sorted(unknown))}")

    name = scenario_table.get("name", scenario_override)
    if name is None:
        raise ConfigError("scenario.name: required (or select a scenario on the command line)")
    if scenario_override is not None and name != scenario_override:
        raise ConfigError(
            f"scenario.name: config says {name!r} but the command line selected {scenario_override!r}"
        )

    kwargs: dict = {"scenario": name}

    if "subspace" in scenario_table:
        sub = _expect(scenario_table, "subspace", list, "scenario")
        if len(sub) != 2 or not all(isinstance(v, int) for v in sub):
            raise ConfigError(f"scenario.subspace: expected two integers, got {sub!r}")
        try:
            kwargs["subspace"] = SubspaceLabel(sub[0], sub[1])
        except ValueError as exc:
            raise ConfigError(f"scenario.subspace: {exc}") from exc
    elif name != "table_s1":
        raise ConfigError("scenario.subspace: required for this scenario")

    if "werner_p" in scenario_table and "target_fidelity" in scenario_table:
        raise ConfigError("scenario: give either werner_p or target_fidelity, not both")
    werner_p = 1.0
    if "werner_p" in scenario_table:
        werner_p = float(_expect(scenario_table, "werner_p", (int, float), "scenario"))
    elif "target_fidelity" in scenario_table:
        target = float(_expect(scenario_table, "target_fidelity", (int, float), "scenario"))
        try:
            werner_p = werner_p_for_fidelity(target)
        except ValueError as exc:
            raise ConfigError(f"scenario.target_fidelity: {exc}") from exc
    birefringence = (0.0, 0.0, 0.0)
    if "birefringence" in scenario_table:
        angles = _expect(scenario_table, "birefringence", list, "scenario")
        if len(angles) != 3 or not all(isinstance(a, (int, float)) for a in angles):
            raise ConfigError(f"scenario.birefringence: expected three numbers, got {angles!r}")
        birefringence = tuple(float(a) for a in angles)
    try:
        kwargs["channel"] = ChannelParams(werner_p=werner_p, birefringence_angles=birefringence)
    except ValueError as exc:
        raise ConfigError(f"scenario.werner_p: {exc}") from exc

    for key, caster in (
        ("pairs_per_setting", int),
        ("seed", int),
        ("theta_grid_points", int),
        ("spectrum_window", int),
    ):
        if key in scenario_table:
            value = _expect(scenario_table, key, int, "scenario")
            if isinstance(value, bool):
                raise ConfigError(f"scenario.{key}: expected int, got bool")
            kwargs[key] = caster(value)

    if "output_dir" in scenario_table:
        kwargs["output_dir"] = Path(_expect(scenario_table, "output_dir", str, "scenario"))
    else:
        kwargs["output_dir"] = Path("runs") / name

    if "rows" in scenario_table:
        if name != "table_s1":
            raise ConfigError("scenario.rows: only valid for the table_s1 scenario")
        rows = []
        raw_rows = _expect(scenario_table, "rows", list, "scenario")
        for i, raw in enumerate(raw_rows):
            if not isinstance(raw, dict):
                raise ConfigError(f"scenario.rows[{i}]: expected a table")
            extra = set(raw) - {"label", "ell", "target_fidelity", "reference"}
            if extra:
                raise ConfigError(f"scenario.rows[{i}]: unknown fields: {', '.join(sorted(extra))}")
            try:
                rows.append(
                    TableRow(
                        label=str(raw["label"]),
                        ell=int(raw["ell"]),
                        target_fidelity=float(raw["target_fidelity"]),
                        reference=bool(raw.get("reference", False)),
                    )
                )
            except KeyError as exc:
                raise ConfigError(f"scenario.rows[{i}]: missing field {exc.args[0]!r}") from exc
        kwargs["table_rows"] = tuple(rows)

    metadata = data.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ConfigError("metadata: expected a table")
    kwargs["metadata"] = metadata

    return ExperimentConfig(**kwargs)


def load_config(path, scenario_override: str | None = None) -> ExperimentConfig:
    """Parse and validate a TOML config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, scenario_override=scenario_override)
