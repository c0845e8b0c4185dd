"""Per-sector industry tagging of legal articles."""

__version__ = "0.1.0"
