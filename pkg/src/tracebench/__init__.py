"""tracebench: synthesize, cross-validate, and grade tool-call compliance tests."""

__version__ = "0.1.0"
