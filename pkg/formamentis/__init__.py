"""Forma mentis toolkit - behavioural forma mentis networks from free-association and valence data."""

__version__ = "1.0.0"
