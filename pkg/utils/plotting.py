"""
Static HTML figures of HOM dips
"""

import os
import sys
from typing import Optional

import numpy as np
import plotly.graph_objects as go

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from processors.fitting import DipFit, dip_model
from processors.interference import HomScan


def dip_figure(scan: HomScan, fit: Optional[DipFit] = None, title: str = 'HOM dip') -> go.Figure:
    """Scan points (with Poisson error bars in counts mode) and the fitted curve"""
    fig = go.Figure()
    error_y = None
    if scan.errors is not None:
        error_y = dict(type='data', array=scan.errors, visible=True)
    fig.add_trace(go.Scatter(
        x=scan.delays,
        y=scan.values,
        mode='markers' if scan.mode == 'counts' else 'lines+markers',
        name='Net four-folds' if scan.mode == 'counts' else 'Coincidence probability',
        error_y=error_y,
        marker_color='rgba(37, 99, 235, 0.9)',
        marker_size=8
    ))
    if fit is not None:
        fine = np.linspace(scan.delays[0], scan.delays[-1], 801)
        fig.add_trace(go.Scatter(
            x=fine,
            y=dip_model(fine, fit.baseline, fit.visibility, fit.width_fwhm, fit.center, fit.model),
            mode='lines',
            name=f'{fit.model} fit: V = {fit.visibility:.3f}, FWHM = {fit.width_fwhm:.1f} ps',
            line=dict(width=3, color='#059669')
        ))
    fig.update_layout(
        title=title,
        xaxis=dict(title='Relative delay (ps)'),
        yaxis=dict(title='Four-fold counts' if scan.mode == 'counts' else 'Normalised coincidence probability'),
        height=550,
        font=dict(family="Inter, sans-serif", size=13),
        hovermode='x unified',
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1)
    )
    return fig


def write_figure(fig: go.Figure, path: str) -> None:
    """Write a self-contained HTML file"""
    fig.write_html(path, include_plotlyjs=True, full_html=True)
