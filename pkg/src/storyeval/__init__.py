"""Machine-in-the-loop story generation evaluation toolkit."""

__version__ = "0.1.0"
