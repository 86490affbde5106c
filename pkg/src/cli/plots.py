# src/cli/plots.py
"""Static plotly figures written next to the reports."""

import pandas as pd
import plotly.express as px

from src.domain.simulator import Trajectory
from src.domain.spectral import ModeSet


def trajectory_figure(traj: Trajectory, title: str = ""):
    """omega(t) and Vm(t) per node, one facet row each."""
    frame = traj.to_frame()[["t", "node", "omega", "vm"]]
    long = frame.melt(id_vars=["t", "node"], var_name="quantity", value_name="value")
    long["node"] = long["node"].astype(str)
    fig = px.line(
        long,
        x="t",
        y="value",
        color="node",
        facet_row="quantity",
        title=title,
        labels={"t": "t (s)", "value": ""},
    )
    fig.update_yaxes(matches=None)
    return fig


def mode_figure(modes: ModeSet, title: str = ""):
    frame = pd.DataFrame(
        {
            "real": modes.etas.real,
            "imag": modes.etas.imag,
            "lambda": [mode.source_lambda for mode in modes.modes],
            "classification": [mode.classification for mode in modes.modes],
        }
    )
    fig = px.scatter(
        frame,
        x="real",
        y="imag",
        color="classification",
        hover_data=["lambda"],
        title=title,
        labels={"real": "Re(eta)", "imag": "Im(eta)"},
    )
    fig.add_vline(x=0.0, line_dash="dot")
    return fig
