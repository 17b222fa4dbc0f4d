"""Synthesis and verification of SFQ pulse bitstreams for transmon gates."""

__version__ = "0.1.0"
