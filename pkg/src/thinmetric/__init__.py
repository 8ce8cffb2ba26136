"""Thin Laakso and diamond substructures, metric invariants and embedding audits."""

__version__ = "0.1.0"
