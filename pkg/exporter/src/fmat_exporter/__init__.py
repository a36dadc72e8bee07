"""Export pretrained-encoder text representations as FMAT feature matrices."""

from .export import REPRESENTATIONS, SURPRISAL_WIDTH, ExportJob, export, read_input
from .fmatio import write_fmat

__version__ = "0.1.0"
