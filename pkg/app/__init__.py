"""kfix: fixed-point approximation with enriched interpolative contractions."""

__version__ = "0.1.0"
