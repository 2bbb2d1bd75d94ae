"""Exception types shared across the pipeline."""


class ConfigurationError(Exception):
    """Bad pipeline configuration: unknown field, table or variable name,
    week number outside 1..53, unsupported encoding, and the like."""


class IngestError(Exception):
    """Fatal input problem: unreadable file or a header that lacks a column
    required downstream. Maps to exit status 1 in the CLI."""
