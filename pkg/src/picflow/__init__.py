"""Natural-language to GDSII photonic integrated circuit design pipeline."""

__version__ = "0.1.0"
