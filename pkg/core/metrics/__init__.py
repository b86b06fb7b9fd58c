# FILE: core/metrics/__init__.py
from __future__ import annotations
from core.metrics.types import SampleMoments
from core.metrics.summary import sample_moments

__all__ = ["SampleMoments", "sample_moments"]
