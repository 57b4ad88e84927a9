"""Raw-domain super-resolution training data synthesis toolkit."""

__version__ = "0.1.0"
