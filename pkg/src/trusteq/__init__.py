"""trusteq: trust-equivalence auditing for compressed classifiers."""

__version__ = "0.1.0"
