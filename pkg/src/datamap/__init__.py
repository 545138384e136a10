"""Rule-based discovery of data sources and data types in research literature."""

__version__ = "0.1.0"
