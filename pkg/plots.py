"""
Figure rendering
SVG plots of critical graphs, level-set atlases, zero sets and spectra.
"""
import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from core_algebra import TURNING_POINT_LABELS

logger = logging.getLogger(__name__)

sns.set_theme(style='whitegrid')
sns.set_palette('Set2')

plt.rcParams['figure.figsize'] = (8, 8)
plt.rcParams['font.size'] = 11
plt.rcParams['font.family'] = 'sans-serif'
plt.rcParams['axes.spines.top'] = False
plt.rcParams['axes.spines.right'] = False
plt.rcParams['grid.alpha'] = 0.3
plt.rcParams['svg.hashsalt'] = 'stokes-graph'

FAMILY_COLORS = {
    'plus1': '#e74c3c',
    'minus1': '#3498db',
    'triangle': '#2ecc71',
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote figure {path}")
    return path


def _turning_points(ax, potential):
    for label, z in zip(TURNING_POINT_LABELS, potential.roots):
        ax.plot(z.real, z.imag, 'ko', markersize=6, zorder=5)
        ax.annotate(label, (z.real, z.imag), textcoords='offset points', xytext=(6, 6), fontsize=9)


def plot_critical_graph(graph, path, extent: Optional[float] = None) -> Path:
    """Critical trajectories with short trajectories highlighted and faces labelled"""
    pot = graph.potential
    extent = extent or 3.0 * max(1.0, abs(pot.a))
    fig, ax = plt.subplots()
    for trace in graph.critical_traces:
        ax.plot(trace.points.real, trace.points.imag, color='#34495e', linewidth=1.0)
    for short in graph.short_trajectories:
        ax.plot(short.polyline.real, short.polyline.imag, color='#e74c3c', linewidth=2.2)
    _turning_points(ax, pot)

    radius = 0.85 * extent
    for face in graph.half_planes:
        direction = (2 * face.index * np.pi - 2 * pot.theta) / 5
        z = radius * np.exp(1j * direction)
        ax.annotate(face.label, (z.real, z.imag), ha='center', fontsize=10, fontweight='bold')

    ax.set_xlim(-extent, extent)
    ax.set_ylim(-extent, extent)
    ax.set_aspect('equal')
    ax.set_title(f"a = {pot.a:.4g}, theta = {pot.theta:.4f}: type {graph.type_label}", fontweight='bold')
    return _save(fig, path)


def plot_atlas(atlas, path) -> Path:
    """Level curves in the a-plane; arcs carrying short trajectories drawn solid"""
    fig, ax = plt.subplots()
    for curve in atlas.curves:
        style = '-' if curve.in_s else ':'
        ax.plot(curve.points.real, curve.points.imag, style, color=FAMILY_COLORS[curve.which], linewidth=1.2)
    ax.plot([-1, 1], [0, 0], 'ko', markersize=5)
    ax.plot(atlas.s_triangle, 0.0, 'ks', markersize=5)
    for name, point in (('t', atlas.t_point), ('e', atlas.e_point)):
        if point is not None:
            ax.plot(point.real, point.imag, 'k^', markersize=7)
            ax.annotate(name, (point.real, point.imag), textcoords='offset points', xytext=(6, 6))
    for which, color in FAMILY_COLORS.items():
        ax.plot([], [], color=color, label=which)
    ax.legend(loc='upper right')
    ax.set_aspect('equal')
    ax.set_title(f"theta = {atlas.theta:.4f}: {atlas.n_regions} regions", fontweight='bold')
    return _save(fig, path)


def plot_zeros(zero_set, path, graph=None, title: str = '') -> Path:
    """Zero scatter, bounded and unbounded components, over the Stokes lines"""
    fig, ax = plt.subplots()
    if graph is not None:
        for trace in graph.critical_traces:
            ax.plot(trace.points.real, trace.points.imag, color='#95a5a6', linewidth=0.8)
        for short in graph.short_trajectories:
            ax.plot(short.polyline.real, short.polyline.imag, color='#7f8c8d', linewidth=1.6)
        _turning_points(ax, graph.potential)
    for zeros, color, label in ((zero_set.bounded_component, '#e74c3c', 'bounded'),
                                (zero_set.unbounded_component, '#3498db', 'unbounded')):
        zs = np.asarray(zeros, dtype=complex)
        ax.scatter(zs.real, zs.imag, s=18, color=color, label=f"{label} ({len(zs)})", zorder=6)
    x0, x1, y0, y1 = zero_set.window
    if x1 > x0:
        ax.set_xlim(x0, x1)
        ax.set_ylim(y0, y1)
    ax.set_aspect('equal')
    ax.legend(loc='upper right')
    ax.set_title(title or f"zeros of eigenfunction n = {zero_set.eigenvalue_index}", fontweight='bold')
    return _save(fig, path)


def plot_spectrum(table: pd.DataFrame, columns: Sequence[str], path, ylabel: str = '|lambda_n|') -> Path:
    """Levels against n, one line per column"""
    fig, ax = plt.subplots(figsize=(10, 6))
    for column in columns:
        if column in table and table[column].notna().any():
            ax.plot(table['n'], table[column], 'o-', label=column)
    ax.set_xlabel('n')
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)
