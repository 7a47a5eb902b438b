"""Preference-based reward learning from suboptimal options-level play in a
2-vs-2 maritime capture-the-flag simulator."""

__version__ = "0.1.0"
