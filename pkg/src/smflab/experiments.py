"""Scenario runners: prepare a channel state, simulate, analyze, write files.

Every scenario writes into ``config.output_dir``:

* one or more data files (CSV, schema below, or JSON with complex matrix
  entries encoded as nested ``[re, im]`` pairs),
* a scenario report JSON with the derived metrics,
* ``manifest.json`` with the config hash, an ISO-8601 UTC timestamp, the
  semantic config, the free-form metadata table and the emitted file names.

Coincidence CSV schema (one row per measurement setting)::

    setting_label, theta_a, theta_b_or_mode, counts, total_pairs, seed

``theta_a`` is the OAM analyzer phase (empty for OAM eigenstate settings);
``theta_b_or_mode`` is the polarisation analyzer phase, polarizer label or
eraser mode, depending on the scenario. Re-running a scenario with identical
config and seed reproduces every data file byte for byte; only the manifest
timestamp differs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_hash
from .measurement import (
    BELL_CURVE_POLARIZATIONS,
    MeasurementSetting,
    SPECTRUM_SPIN_SELECTORS,
    bell_curve,
    eraser_scan,
    mode_spectrum,
    simulate_counts,
)
from .metrics import (
    CHSH_OAM_PHASES,
    CHSH_SPIN_PHASES,
    MetricReport,
    chsh_expectation,
    chsh_from_counts,
    concurrence,
    fidelity,
    purity,
    visibility,
)
from .optics import ChannelParams, projector_oam, projector_spin, smf_channel
from .states import HybridState, SubspaceLabel, post_select_hybrid, werner_p_for_fidelity
from .tomography import label_parts, reconstruct_linear, standard_settings

COINCIDENCE_COLUMNS = ("setting_label", "theta_a", "theta_b_or_mode", "counts", "total_pairs", "seed")
SPECTRUM_COLUMNS = (
    "spin_label",
    "ell",
    "probability_exact",
    "counts",
    "total_pairs",
    "probability_estimate",
    "seed",
)
TABLE_COLUMNS = (
    "label",
    "ell",
    "target_fidelity",
    "werner_p",
    "fidelity",
    "concurrence",
    "fidelity_normalized",
    "concurrence_normalized",
)

MANIFEST_NAME = "manifest.json"
HASH_ALGORITHM = (
    "sha256 over canonical JSON (sorted keys, compact separators) of the semantic config fields"
)


def format_value(value) -> str:
    """Deterministic CSV cell: shortest round-trip float repr, plain ints."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with Path(path).open("w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path) -> list:
    """Rows as dicts keyed by the header line."""
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def matrix_to_pairs(m: np.ndarray) -> list:
    """Complex matrix as nested [re, im] pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_pairs(obj) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in obj])


def subseed(seed: int, *indices: int) -> int:
    """Deterministic independent sub-seed for a scan within a run."""
    seq = np.random.SeedSequence([int(seed), *[int(i) for i in indices]])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class RunArtifacts:
    """Paths produced by one scenario run."""

    output_dir: Path
    manifest_path: Path
    data_paths: tuple
    report_path: Path

    def all_paths(self) -> tuple:
        return (self.manifest_path, *self.data_paths, self.report_path)

    def verify(self) -> None:
        """Every artifact exists and parses with the module's own readers."""
        for path in self.all_paths():
            if not Path(path).exists():
                raise FileNotFoundError(f"artifact missing: {path}")
            if str(path).endswith(".csv"):
                read_csv(path)
            else:
                read_json(path)


def _write_manifest(cfg: ExperimentConfig, files: dict) -> Path:
    manifest = {
        "scenario": cfg.scenario,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config_hash": config_hash(cfg),
        "hash_algorithm": HASH_ALGORITHM,
        "config": cfg.semantic_dict(),
        "files": files,
        "metadata": cfg.metadata,
    }
    path = cfg.output_dir / MANIFEST_NAME
    write_json(path, manifest)
    return path


def _prepare_state(cfg: ExperimentConfig) -> HybridState:
    """Ideal hybrid Bell state on the configured subspace, sent through the link."""
    return smf_channel(post_select_hybrid(cfg.subspace), cfg.channel)


def _theta_grid(points: int) -> list:
    return [2.0 * np.pi * k / points for k in range(points)]


def run_spectrum(cfg: ExperimentConfig) -> RunArtifacts:
    """Conditional OAM spectra for the four polarisation selectors."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    state = _prepare_state(cfg)
    window = cfg.spectrum_window
    sub = cfg.subspace
    rows = []
    spectra = {}
    dominant = {}
    for si, sel in enumerate(SPECTRUM_SPIN_SELECTORS):
        exact = mode_spectrum(state, sel, window)
        scan_seed = subseed(cfg.seed, si)
        settings = [
            MeasurementSetting(
                spin_projector=projector_spin(sel),
                oam_projector=projector_oam(which),
                label=f"{sel}|ell={ell}",
            )
            for which, ell in (("ell1", sub.ell_1), ("ell2", sub.ell_2))
        ]
        records = simulate_counts(state, settings, cfg.pairs_per_setting, scan_seed)
        counts = {sub.ell_1: records[0].counts, sub.ell_2: records[1].counts}
        # the model state carries no amplitude outside the subspace, so the
        # remaining window modes observe exactly zero coincidences
        total = sum(counts.values())
        spectra[sel] = {}
        for ell in range(-window, window + 1):
            n = counts.get(ell, 0)
            estimate = n / total if total > 0 else 0.0
            rows.append((sel, ell, exact[ell], n, cfg.pairs_per_setting, estimate, scan_seed))
            spectra[sel][str(ell)] = {
                "exact": exact[ell],
                "counts": n,
                "estimate": estimate,
            }
        best = max(spectra[sel], key=lambda k: spectra[sel][k]["estimate"])
        dominant[sel] = {
            "ell": int(best),
            "exact": spectra[sel][best]["exact"],
            "estimate": spectra[sel][best]["estimate"],
        }
    csv_path = cfg.output_dir / "spectrum.csv"
    write_csv(csv_path, SPECTRUM_COLUMNS, rows)
    report = {
        "subspace": [sub.ell_1, sub.ell_2],
        "window": window,
        "werner_p": cfg.channel.werner_p,
        "spectra": spectra,
        "dominant": dominant,
    }
    report_path = cfg.output_dir / "spectrum_report.json"
    write_json(report_path, report)
    manifest_path = _write_manifest(
        cfg, {"spectrum_csv": csv_path.name, "report": report_path.name}
    )
    return RunArtifacts(cfg.output_dir, manifest_path, (csv_path,), report_path)


def run_tomography(cfg: ExperimentConfig) -> RunArtifacts:
    """36-setting tomography, reconstruction and state metrics."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    state = _prepare_state(cfg)
    tset = standard_settings(cfg.subspace)
    records = simulate_counts(state, tset.settings, cfg.pairs_per_setting, subseed(cfg.seed, 0))
    rows = []
    for record in records:
        spin, theta = label_parts(record.setting.label)
        rows.append(
            (record.setting.label, theta, spin, record.counts, record.total_pairs, record.seed)
        )
    csv_path = cfg.output_dir / "counts.csv"
    write_csv(csv_path, COINCIDENCE_COLUMNS, rows)

    recon = reconstruct_linear(records, tset)
    target = post_select_hybrid(cfg.subspace)
    report_metrics = MetricReport(
        fidelity=fidelity(target.rho, recon.rho_physical),
        concurrence=concurrence(recon.rho_physical),
        purity=purity(recon.rho_physical),
    )
    state_path = cfg.output_dir / "state.json"
    write_json(
        state_path,
        {
            "basis": "spin-major: (R,l1), (R,l2), (L,l1), (L,l2)",
            "rho_raw": matrix_to_pairs(recon.rho_raw),
            "rho_physical": matrix_to_pairs(recon.rho_physical),
        },
    )
    report = {
        "subspace": [cfg.subspace.ell_1, cfg.subspace.ell_2],
        "normalization": "group",
        "residual": recon.residual,
        "pauli_coefficients": [[float(v) for v in row] for row in recon.pauli_coefficients],
        "metrics": report_metrics.to_dict(),
    }
    report_path = cfg.output_dir / "tomography_report.json"
    write_json(report_path, report)
    manifest_path = _write_manifest(
        cfg,
        {"counts_csv": csv_path.name, "state": state_path.name, "report": report_path.name},
    )
    return RunArtifacts(cfg.output_dir, manifest_path, (csv_path, state_path), report_path)


def run_bell(cfg: ExperimentConfig) -> RunArtifacts:
    """Fringe curves at the four polarizer settings plus a CHSH evaluation."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    state = _prepare_state(cfg)
    grid = _theta_grid(cfg.theta_grid_points)
    rows = []
    curves = {}
    for ci, (theta_b, pol) in enumerate(BELL_CURVE_POLARIZATIONS.items()):
        records = bell_curve(state, theta_b, grid, cfg.pairs_per_setting, subseed(cfg.seed, ci))
        curves[pol] = {"theta_b": theta_b, "counts": [r.counts for r in records]}
        for theta_a, record in zip(grid, records):
            rows.append(
                (record.setting.label, theta_a, theta_b, record.counts, record.total_pairs, record.seed)
            )

    a, a_prime = CHSH_OAM_PHASES
    b, b_prime = CHSH_SPIN_PHASES
    theta_a_values = sorted({(x + dx) % (2.0 * np.pi) for x in (a, a_prime) for dx in (0.0, np.pi)})
    theta_b_values = sorted({(y + dy) % (2.0 * np.pi) for y in (b, b_prime) for dy in (0.0, np.pi)})
    chsh_settings = []
    chsh_pairs = []
    for theta_a in theta_a_values:
        for theta_b in theta_b_values:
            chsh_settings.append(
                MeasurementSetting(
                    spin_projector=projector_spin(theta_b),
                    oam_projector=projector_oam(theta_a),
                    label=f"chsh|{theta_a:.10g}|{theta_b:.10g}",
                )
            )
            chsh_pairs.append((theta_a, theta_b))
    chsh_records = simulate_counts(
        state, chsh_settings, cfg.pairs_per_setting, subseed(cfg.seed, len(curves))
    )
    for (theta_a, theta_b), record in zip(chsh_pairs, chsh_records):
        rows.append(
            (record.setting.label, theta_a, theta_b, record.counts, record.total_pairs, record.seed)
        )
    csv_path = cfg.output_dir / "counts.csv"
    write_csv(csv_path, COINCIDENCE_COLUMNS, rows)

    counts_map = {pair: rec.counts for pair, rec in zip(chsh_pairs, chsh_records)}
    s_value, s_sigma = chsh_from_counts(counts_map, a=a, a_prime=a_prime, b=b, b_prime=b_prime)
    s_exact = chsh_expectation(state, a=a, a_prime=a_prime, b=b, b_prime=b_prime)
    report = {
        "subspace": [cfg.subspace.ell_1, cfg.subspace.ell_2],
        "settings": {"a": a, "a_prime": a_prime, "b": b, "b_prime": b_prime},
        "curves": curves,
        "s_value": s_value,
        "s_sigma": s_sigma,
        "s_exact": s_exact,
        "metrics": MetricReport(chsh_s=s_value, uncertainties={"chsh_s": s_sigma}).to_dict(),
    }
    report_path = cfg.output_dir / "bell_report.json"
    write_json(report_path, report)
    manifest_path = _write_manifest(cfg, {"counts_csv": csv_path.name, "report": report_path.name})
    return RunArtifacts(cfg.output_dir, manifest_path, (csv_path,), report_path)


def run_eraser(cfg: ExperimentConfig) -> RunArtifacts:
    """Which-path marking and erasure scans with visibility fits."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    state = _prepare_state(cfg)
    grid = _theta_grid(cfg.theta_grid_points)
    rows = []
    modes = {}
    for mi, mode in enumerate(("distinguish", "erase")):
        records = eraser_scan(state, mode, grid, cfg.pairs_per_setting, subseed(cfg.seed, mi))
        for theta_a, record in zip(grid, records):
            rows.append(
                (record.setting.label, theta_a, mode, record.counts, record.total_pairs, record.seed)
            )
        vis, sigma = visibility(grid, [r.counts for r in records])
        modes[mode] = MetricReport(visibility=vis, uncertainties={"visibility": sigma}).to_dict()
    csv_path = cfg.output_dir / "counts.csv"
    write_csv(csv_path, COINCIDENCE_COLUMNS, rows)
    report = {
        "subspace": [cfg.subspace.ell_1, cfg.subspace.ell_2],
        "werner_p": cfg.channel.werner_p,
        "modes": modes,
    }
    report_path = cfg.output_dir / "eraser_report.json"
    write_json(report_path, report)
    manifest_path = _write_manifest(cfg, {"counts_csv": csv_path.name, "report": report_path.name})
    return RunArtifacts(cfg.output_dir, manifest_path, (csv_path,), report_path)


def run_table_s1(cfg: ExperimentConfig) -> RunArtifacts:
    """Fidelity/concurrence summary across transport conditions.

    Each row calibrates the isotropic channel to its target fidelity
    (p = (4 F - 1)/3), simulates tomography on the row's subspace and
    normalizes against the reference row of the same OAM order.
    """
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for ri, row in enumerate(cfg.table_rows):
        p = werner_p_for_fidelity(row.target_fidelity)
        sub = SubspaceLabel(row.ell, -row.ell)
        channel = ChannelParams(werner_p=p, birefringence_angles=cfg.channel.birefringence_angles)
        state = smf_channel(post_select_hybrid(sub), channel)
        tset = standard_settings(sub)
        records = simulate_counts(state, tset.settings, cfg.pairs_per_setting, subseed(cfg.seed, ri))
        recon = reconstruct_linear(records, tset)
        target = post_select_hybrid(sub)
        results.append(
            {
                "row": row,
                "werner_p": p,
                "fidelity": fidelity(target.rho, recon.rho_physical),
                "concurrence": concurrence(recon.rho_physical),
            }
        )
    reference = {}
    for res in results:
        if res["row"].reference:
            reference[res["row"].ell] = res
    rows_out = []
    table_report = []
    for res in results:
        row = res["row"]
        ref = reference[row.ell]
        f_n = res["fidelity"] / ref["fidelity"]
        c_n = res["concurrence"] / ref["concurrence"]
        rows_out.append(
            (
                row.label,
                row.ell,
                row.target_fidelity,
                res["werner_p"],
                res["fidelity"],
                res["concurrence"],
                f_n,
                c_n,
            )
        )
        report = MetricReport(
            fidelity=res["fidelity"],
            concurrence=res["concurrence"],
            fidelity_normalized=f_n,
            concurrence_normalized=c_n,
        )
        table_report.append(
            {
                "label": row.label,
                "ell": row.ell,
                "target_fidelity": row.target_fidelity,
                "werner_p": res["werner_p"],
                "reference": row.reference,
                "metrics": report.to_dict(),
            }
        )
    csv_path = cfg.output_dir / "table.csv"
    write_csv(csv_path, TABLE_COLUMNS, rows_out)
    report_path = cfg.output_dir / "table_report.json"
    write_json(report_path, {"rows": table_report})
    manifest_path = _write_manifest(cfg, {"table_csv": csv_path.name, "report": report_path.name})
    return RunArtifacts(cfg.output_dir, manifest_path, (csv_path,), report_path)


RUNNERS = {
    "spectrum": run_spectrum,
    "tomography": run_tomography,
    "bell": run_bell,
    "eraser": run_eraser,
    "table_s1": run_table_s1,
}


def run_scenario(cfg: ExperimentConfig) -> RunArtifacts:
    """Dispatch on the configured scenario name."""
    artifacts = RUNNERS[cfg.scenario](cfg)
    artifacts.verify()
    return artifacts
