"""openEHR archetypes, validation, mapping and synthetic data for DATASUS HIS/HCPM claims."""

__version__ = "0.1.0"
