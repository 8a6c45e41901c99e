"""End-to-end rendering: catalog -> preprocess -> three layers -> mix -> file."""

from __future__ import annotations

import contextlib
import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import catalog_io, drones, galaxies, outliers, preprocess
from .config import LAYERS, load_config, validate
from .dsp import AudioBuffer, db_to_linear, hard_limit, mix_into, onset_index
from .errors import CosmosonicError, StageError
from .reverb import stereo_reverb
from .validation import n_samples
from .wavio import write_audio

log = logging.getLogger(__name__)


@contextlib.contextmanager
def stage(name):
    """Re-raise any failure inside the block as a :class:`StageError`."""
    try:
        yield
    except StageError:
        raise
    except (CosmosonicError, OSError, ValueError, KeyError) as err:
        raise StageError(name, err) from err


@dataclass
class RenderResult:
    buffer: AudioBuffer
    manifest: dict
    layers: dict = field(default_factory=dict)


def load_catalog(path, cfg):
    with stage("parse"):
        return catalog_io.parse_catalog(path, cfg.catalog.columns, cfg.catalog.delimiter)


def preprocess_records(records, cfg):
    with stage("preprocess"):
        return preprocess.run_preprocess(records, cfg.thresholds, cfg.stats.window, cfg.stats.grid_size)


def _gain(db):
    return 0.0 if db == -math.inf else db_to_linear(db)


def _total_length(result, cfg, icons):
    sr = cfg.sample_rate
    n = n_samples(cfg.duration, sr)
    for g in result.galaxies:
        if not g.is_outlier:
            p = galaxies.event_params(g, cfg.galaxies)
            n = max(n, onset_index(p.onset, sr) + galaxies.event_length(p, sr))
    for onset, seg in icons:
        n = max(n, onset_index(onset, sr) + len(seg[0]))
    return n


def render_layers(result, cfg, keep_layers=False):
    """Render, scale and sum the three layers; returns ``(mix, bus, layers)``.

    ``bus`` is the reverb send (``None`` when reverb is off). Muted layers
    are skipped unless ``keep_layers`` asks for every unscaled layer.
    """
    sr = cfg.sample_rate
    gains = {name: _gain(cfg.gains[name]) for name in LAYERS}
    sends = {name: _gain(cfg.reverb.sends.get(name, -math.inf)) for name in LAYERS}

    with stage("outliers"):
        icons = outliers.render_icons(result.galaxies, cfg.outliers, cfg.galaxies, sr, cfg.n_jobs)
    n = _total_length(result, cfg, icons)
    mix = AudioBuffer.zeros(n, sr)
    bus = AudioBuffer.zeros(n, sr) if cfg.reverb.enabled else None
    kept = {}

    def add(name, layer):
        if keep_layers:
            kept[name] = layer
        g = gains[name]
        m = len(layer)
        mix.left[:m] += g * layer.left
        mix.right[:m] += g * layer.right
        if bus is not None and sends[name]:
            bus.left[:m] += sends[name] * g * layer.left
            bus.right[:m] += sends[name] * g * layer.right

    if gains["galaxies"] or keep_layers:
        with stage("galaxies"):
            layer = galaxies.render_galaxy_layer(result.galaxies, cfg.galaxies, sr, cfg.n_jobs)
            add("galaxies", layer.padded(n) if keep_layers else layer)
            del layer
    if (gains["statistics"] or keep_layers) and result.stats is not None:
        with stage("statistics"):
            add("statistics", drones.render_statistics_layer(result.stats, cfg.drones, cfg.duration, sr, length=n))
    if gains["outliers"] or keep_layers:
        with stage("outliers"):
            layer = AudioBuffer.zeros(n, sr) if keep_layers else None
            for onset, seg in icons:
                if layer is not None:
                    mix_into(layer, seg, onset)
                scaled = (gains["outliers"] * seg[0], gains["outliers"] * seg[1])
                mix_into(mix, scaled, onset)
                if bus is not None and sends["outliers"]:
                    mix_into(bus, (sends["outliers"] * scaled[0], sends["outliers"] * scaled[1]), onset)
            if layer is not None:
                kept["outliers"] = layer
    return mix, bus, kept


def master(mix, bus, cfg):
    """Apply reverb, master gain and the hard limiter; returns ``(buffer, clipped)``."""
    with stage("master"):
        if bus is not None:
            wl, wr = stereo_reverb(bus.left, bus.right, cfg.sample_rate, cfg.reverb.feedback, cfg.reverb.damping)
            wet = db_to_linear(cfg.reverb.wet_db)
            mix.left += wet * wl
            mix.right += wet * wr
        g = db_to_linear(cfg.master_gain_db)
        if g != 1.0:
            mix.left *= g
            mix.right *= g
        return hard_limit(mix)


def write_reports(result, cfg, report_dir):
    with stage("reports"):
        os.makedirs(report_dir, exist_ok=True)
        written = []
        if result.stats is not None:
            written += preprocess.export_summary(
                result.galaxies, result.stats, report_dir, bins=cfg.stats.histogram_bins
            )
            rows = drones.drone_curve_table(result.stats, cfg.drones, cfg.duration)
            written.append(_write_rows(os.path.join(report_dir, "drone_curves.csv"),
                                       ("t_seconds", "f1", "f2", "f3", "invq"), rows))
        written.append(_write_rows(os.path.join(report_dir, "events.csv"), galaxies.EVENT_LOG_COLUMNS,
                                   galaxies.event_log(result.galaxies, cfg.galaxies)))
        written.append(_write_rows(os.path.join(report_dir, "icons.csv"), outliers.ICON_LOG_COLUMNS,
                                   outliers.icon_log(result.galaxies, cfg.galaxies)))
        return written


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def build_manifest(catalog, result, cfg, buffer=None, clipped=None):
    counts = result.outlier_counts()
    manifest = {
        "parsed": len(catalog),
        "rejected": len(getattr(catalog, "rejected", ())),
        "after_quality_filter": result.n_quality,
        "after_bias_filter": result.n_bias,
        "outliers": counts,
        "outliers_total": sum(counts.values()),
        "galaxy_events": sum(1 for g in result.galaxies if not g.is_outlier),
        "icon_events": sum(1 for g in result.galaxies if g.is_outlier),
        "sample_rate": cfg.sample_rate,
        "bit_depth": cfg.bit_depth,
        "duration": cfg.duration,
    }
    if buffer is not None:
        peak = buffer.peak()
        manifest.update(
            length_samples=len(buffer),
            length_seconds=len(buffer) / buffer.sample_rate,
            clipped_samples=clipped,
            peak=peak,
            peak_dbfs=20.0 * math.log10(peak) if peak > 0 else -math.inf,
        )
    return manifest


def render_full(cfg, catalog_path=None, out_path=None, report_dir=None):
    """Run the whole pipeline under ``cfg`` and write the audio file.

    Paths default to ``cfg.paths``. Returns a :class:`RenderResult` whose
    manifest holds the stage counts, outlier counts, clipped-sample count
    and peak level.
    """
    validate(cfg)
    catalog_path = catalog_path or cfg.paths.catalog
    out_path = out_path or cfg.paths.audio
    report_dir = report_dir or cfg.paths.report_dir
    if catalog_path is None:
        raise StageError("parse", ValueError("no catalog path given"))

    catalog = load_catalog(catalog_path, cfg)
    for err in catalog.rejected:
        log.warning("rejected %s", err)
    result = preprocess_records(catalog.records, cfg)
    mix, bus, _ = render_layers(result, cfg)
    buffer, clipped = master(mix, bus, cfg)
    if out_path is not None:
        with stage("write"):
            write_audio(buffer, out_path, cfg.bit_depth)
    manifest = build_manifest(catalog, result, cfg, buffer, clipped)
    if report_dir is not None:
        write_reports(result, cfg, report_dir)
        with stage("reports"), open(os.path.join(report_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
    return RenderResult(buffer, manifest)


class Sonifier(BaseEstimator):
    """Estimator front end: ``fit`` preprocesses records, ``render`` makes audio.

    ``config`` is a :class:`RenderConfig`, a path to a TOML file, or ``None``
    for defaults.
    """

    def __init__(self, config=None, n_jobs=None):
        self.config = config
        self.n_jobs = n_jobs

    def _config(self):
        cfg = self.config
        if cfg is None or isinstance(cfg, (str, os.PathLike)):
            cfg = load_config(cfg)
        if self.n_jobs is not None:
            cfg = cfg.with_overrides(n_jobs=int(self.n_jobs))
        return validate(cfg)

    def fit(self, X, y=None):
        """``X`` is a sequence of :class:`GalaxyRecord` (or a parsed catalog)."""
        cfg = self._config()
        records = list(X)
        self.result_ = preprocess_records(records, cfg)
        self.config_ = cfg
        self.n_records_ = len(records)
        self.galaxies_ = self.result_.galaxies
        self.stats_ = self.result_.stats
        return self

    def event_params(self):
        check_is_fitted(self, "result_")
        return [galaxies.event_params(g, self.config_.galaxies) for g in self.galaxies_ if not g.is_outlier]

    def render(self, keep_layers=False):
        check_is_fitted(self, "result_")
        mix, bus, layers = render_layers(self.result_, self.config_, keep_layers)
        buffer, clipped = master(mix, bus, self.config_)
        catalog = catalog_io.Catalog(tuple(range(self.n_records_)))
        manifest = build_manifest(catalog, self.result_, self.config_, buffer, clipped)
        return RenderResult(buffer, manifest, layers)

    def fit_render(self, X, y=None, **kwargs):
        return self.fit(X).render(**kwargs)


def peak_dbfs(x):
    x = np.asarray(x)
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    return 20.0 * math.log10(peak) if peak > 0 else -math.inf
