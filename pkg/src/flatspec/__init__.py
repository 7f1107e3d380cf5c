"""Saddle connections, auxiliary zonogons and SL(2,R)-infimal lengths on half-translation surfaces."""

from .surface import (
    HalfTranslationSurface,
    apply_sl2,
    build_surface,
    bundled_surface,
    load_surface,
    normalize_area,
    rotate,
)

__version__ = "0.1.0"
