"""Physical-layer security metrics for uplink NOMA with random eavesdroppers."""

__version__ = "0.1.0"
