"""Task-semantic selection and evaluation of dialog summaries."""

__version__ = "0.1.0"
