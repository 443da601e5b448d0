"""Batch figure regeneration from controllability run artifacts.

This package never links against the code that produced the artifacts; the
file schemas are the whole contract.  Each renderer reads CSV/JSON files,
validates their headers, and writes one deterministic image.
"""

from .artifacts import SchemaError
from .render import KINDS, PlotJob, PlotStyle, load_job, render

__all__ = ["KINDS", "PlotJob", "PlotStyle", "SchemaError", "load_job", "render"]
