"""Worked applications wired onto the reformulation engines."""
