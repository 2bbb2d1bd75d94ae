"""Streaming pipeline over SIVEP-Gripe SARI snapshots: obstetric cohort
selection, derived analysis variables, consistency checks and tables."""

__version__ = "0.1.0"

from .errors import ConfigurationError, IngestError
from .schema import (
    CohortRecord,
    CodeBook,
    DEFAULT_CODEBOOK,
    EpiStamp,
    OUT_OF_DICTIONARY,
    SurveillanceRecord,
    codebook_lookup,
)

__all__ = [
    "__version__",
    "ConfigurationError",
    "IngestError",
    "CohortRecord",
    "CodeBook",
    "DEFAULT_CODEBOOK",
    "EpiStamp",
    "OUT_OF_DICTIONARY",
    "SurveillanceRecord",
    "codebook_lookup",
]
