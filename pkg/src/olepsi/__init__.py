"""Two-party PSI from precomputed OLE tuples, with a cryptography-free online phase."""

__version__ = "0.1.0"
