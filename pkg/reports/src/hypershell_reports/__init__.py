"""Static figures and a markdown index from frozen run outputs.

Consumes only the documented CSV/JSON files of an analyzed run directory
(shells.csv, diagnostics.csv, summary.json); never touches the simulation
code.  Rendering is read-only over the inputs and reruns are idempotent.
"""

from .render import FIGURES, ReportSpec, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FIGURES", "ReportSpec", "SchemaError", "render", "__version__"]
