"""trusteq-bridge: wire-protocol sidecar for transformer checkpoints."""

__version__ = "0.1.0"
