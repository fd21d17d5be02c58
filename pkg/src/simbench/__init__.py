"""simbench: corpus/task similarity measurement and correlation testing."""

__version__ = "0.1.0"
