"""Core pemid modules: errors, configuration, run records and orchestration."""
