"""Offline three-layer sonification of a galaxy survey catalog."""

from .catalog_io import Catalog, GalaxyRecord, catalog_digest, parse_catalog, write_catalog
from .config import RenderConfig, load_config
from .datasets import make_galaxy_catalog
from .dsp import AudioBuffer
from .preprocess import FeatureStats, GalaxyFeatureScaler, OutlierFlag, ProcessedGalaxy, run_preprocess
from .renderer import Sonifier, render_full
from .wavio import read_audio, write_audio

__all__ = [
    "AudioBuffer",
    "Catalog",
    "FeatureStats",
    "GalaxyFeatureScaler",
    "GalaxyRecord",
    "OutlierFlag",
    "ProcessedGalaxy",
    "RenderConfig",
    "Sonifier",
    "catalog_digest",
    "load_config",
    "make_galaxy_catalog",
    "parse_catalog",
    "read_audio",
    "render_full",
    "run_preprocess",
    "write_audio",
    "write_catalog",
]

__version__ = "0.1.0"
