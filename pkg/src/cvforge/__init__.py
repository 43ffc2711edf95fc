"""cvforge: truncated-jet checks for Saito, CV and TEP structures."""

__version__ = "0.1.0"
