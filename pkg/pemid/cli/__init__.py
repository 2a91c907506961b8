"""Command-line interface for pemid."""
