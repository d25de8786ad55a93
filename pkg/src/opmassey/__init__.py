"""Higher Massey products over Koszul operads."""

__version__ = "0.1.0"
