from .render import PlotJob, render
from .schemas import KINDS, SchemaError

__all__ = ["KINDS", "PlotJob", "SchemaError", "render"]
__version__ = "0.1.0"
