"""Smart-irrigation botnet simulator and urban water damage model."""
__version__ = "0.1.0"
