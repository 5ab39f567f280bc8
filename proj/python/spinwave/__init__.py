"""Spin-wave simulation, sonification and rendering (C++ core)."""

from ._core import (
    ConfigError,
    ManifestError,
    ParseError,
    SpinwaveError,
    config_keys,
    default_config,
    detect_loop,
    rasterize,
    read_stack,
    read_wav,
    render_frame,
    run_pipeline,
    shapes,
    simulate,
    synthesize,
    trigger,
    write_stack,
    write_wav,
)

__all__ = [
    "ConfigError",
    "ManifestError",
    "ParseError",
    "SpinwaveError",
    "config_keys",
    "default_config",
    "detect_loop",
    "rasterize",
    "read_stack",
    "read_wav",
    "render_frame",
    "run_pipeline",
    "shapes",
    "simulate",
    "synthesize",
    "trigger",
    "write_stack",
    "write_wav",
]
