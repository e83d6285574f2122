"""VDF-gated committee consensus, clock synchronization and binary agreement on a simulated network."""

__version__ = "0.1.0"
