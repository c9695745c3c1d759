"""
Utility functions for formatting report values.
"""

import math


def format_pct(value):
    """Formats a fraction (0.254) as a percentage string (25.40%)."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "N/A"
    return f"{value * 100:.2f}%"


def format_percent_value(value):
    """Formats a value already expressed in percent (16.65) with two decimals."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "N/A"
    return f"{value:.2f}"


def format_score(value, undefined=False):
    """Formats a score in [0,1]; undefined scores are marked."""
    if value is None:
        return "N/A"
    text = f"{value:.4f}"
    return f"{text} (undefined)" if undefined else text


def format_count(value):
    """Formats an integer count with thousands separators."""
    if value is None:
        return "N/A"
    return f"{int(value):,}"


def format_duration(seconds):
    """Formats a duration in seconds as a short human-readable string."""
    if seconds is None:
        return "N/A"
    if seconds < 1:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60:
        return f"{seconds:.1f} s"
    minutes, rest = divmod(seconds, 60)
    return f"{int(minutes)} min {rest:.0f} s"


def format_error_type(name):
    """Turns an error-type identifier (run_on) into a label (Run-on)."""
    labels = {
        "misrecognized_character": "Misrecognized character",
        "missing_character": "Missing character",
        "hallucination": "Hallucination",
        "run_on": "Run-on",
        "incorrect_split": "Incorrect split",
        "word_segmentation": "Word segmentation",
        "total": "Total",
    }
    return labels.get(name, str(name).replace("_", " ").capitalize())
