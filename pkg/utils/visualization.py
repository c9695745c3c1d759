"""
Visualization utilities for corpus and evaluation reports.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

from utils.formatting import format_error_type


def _placeholder_figure(title: str, message: str) -> go.Figure:
    fig = go.Figure()
    fig.update_layout(
        title=title,
        annotations=[{"text": message, "showarrow": False, "font": {"size": 14}}],
    )
    return fig


def create_noise_distribution_histogram(frame: pd.DataFrame, threshold: Optional[float] = None) -> go.Figure:
    """
    Creates a histogram of per-sentence normalized Levenshtein distance.

    Args:
        frame: Sentence frame with a `norm_lev` column
        threshold: Noise threshold drawn as a vertical line

    Returns:
        Plotly figure object
    """
    if "norm_lev" not in frame.columns or frame.empty:
        logging.warning("norm_lev column missing or empty; skipping noise histogram.")
        return _placeholder_figure("Cannot generate plot: Missing noise data", "No sentences to plot")

    fig = px.histogram(
        frame,
        x="norm_lev",
        nbins=50,
        title="Sentence Noise (Normalized Levenshtein Distance)",
        labels={"norm_lev": "Normalized Levenshtein distance"},
    )
    if threshold is not None:
        fig.add_vline(x=threshold, line_dash="dash", annotation_text=f"threshold {threshold:g}")
    fig.update_layout(bargap=0.1)
    return fig


def create_cer_histogram(frame: pd.DataFrame) -> go.Figure:
    """Creates a histogram with a box marginal of per-sentence CER (%)."""
    if "cer" not in frame.columns:
        logging.warning("cer column not found in sentence frame.")
        return _placeholder_figure("Cannot generate plot: Missing CER data", "cer column not found")

    data = frame.dropna(subset=["cer"])
    if data.empty:
        return _placeholder_figure("Character Error Rate", "No sentences with a gold standard")

    fig = px.histogram(
        data,
        x="cer",
        nbins=50,
        title="Character Error Rate per Sentence",
        labels={"cer": "CER (%)"},
        marginal="box",
    )
    fig.update_layout(bargap=0.1)
    return fig


def create_error_type_bar(counts: Dict[str, int]) -> go.Figure:
    """
    Creates a horizontal bar chart of error counts by type.

    Args:
        counts: Error-type identifier to count

    Returns:
        Plotly figure object
    """
    if not counts:
        return _placeholder_figure("Error Types", "No errors to plot")

    df = pd.DataFrame(
        {"Error type": [format_error_type(name) for name in counts], "Count": list(counts.values())}
    )
    fig = px.bar(
        df.sort_values("Count", ascending=True),
        x="Count",
        y="Error type",
        orientation="h",
        title="Errors by Type",
        text="Count",
    )
    fig.update_traces(textposition="outside")
    fig.update_layout(uniformtext_minsize=8, uniformtext_mode="hide")
    return fig


def create_loss_curve(train_losses: List[float], dev_losses: List[float]) -> go.Figure:
    """Creates a line chart of train and dev loss per epoch."""
    epochs = list(range(1, len(train_losses) + 1))
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=epochs, y=train_losses, mode="lines", name="train"))
    fig.add_trace(go.Scatter(x=epochs[: len(dev_losses)], y=dev_losses, mode="lines", name="dev"))
    fig.update_layout(title="Corrector Loss", xaxis_title="Epoch", yaxis_title="Loss")
    return fig


def write_figures_html(figures: List[go.Figure], path: str) -> str:
    """
    Writes figures to one standalone HTML file (plotly.js inlined once).

    Returns:
        The path written
    """
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    parts = [
        figure.to_html(full_html=False, include_plotlyjs=(index == 0))
        for index, figure in enumerate(figures)
    ]
    Path(path).write_text(
        "<html><head><meta charset=\"utf-8\"></head><body>\n" + "\n".join(parts) + "\n</body></html>\n",
        encoding="utf-8",
    )
    logging.info(f"Wrote {len(figures)} figures to {path}")
    return path
