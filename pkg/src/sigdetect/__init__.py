"""Signature and randomized-signature features for unsupervised market
anomaly detection."""

__version__ = "0.1.0"
