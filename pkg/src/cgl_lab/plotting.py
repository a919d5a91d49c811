"""Optional figures for the CLI report commands (``--plot``).

matplotlib is imported lazily with the Agg backend, so the numerical core
never depends on it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("--plot needs matplotlib (pip install 'artifact[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return path


def plot_speeds(theta, speeds, path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in range(speeds.shape[1]):
        ax.plot(theta, speeds[:, j], lw=1)
    ax.set_xlabel("angle in plane [rad]")
    ax.set_ylabel("characteristic speed")
    ax.grid(alpha=0.3)
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_dispersion(k, omega, path) -> Path:
    """Real and imaginary parts of the nine branches against |k|-index."""
    plt = _pyplot()
    idx = np.arange(len(k))
    fig, (a, b) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    a.plot(idx, omega.real, ".", ms=2)
    b.plot(idx, omega.imag, ".", ms=2)
    a.set_ylabel("Re omega")
    b.set_ylabel("Im omega")
    b.set_xlabel("wave vector index")
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_profile(x, u, names, path) -> Path:
    plt = _pyplot()
    fig, axes = plt.subplots(3, 3, figsize=(9, 7), sharex=True)
    for j, ax in enumerate(axes.ravel()):
        ax.plot(x, u[:, j], lw=1)
        ax.set_title(names[j], fontsize=9)
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_vacuum_slice(x1, x2, h_slice, path) -> Path:
    """|h| on the (x1, x2) plane at fixed x3."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    mag = np.linalg.norm(h_slice, axis=-1)
    im = ax.pcolormesh(x2, x1, mag, shading="auto")
    fig.colorbar(im, ax=ax, label="|h|")
    ax.set_xlabel("x2")
    ax.set_ylabel("x1")
    out = _save(fig, path)
    plt.close(fig)
    return out
