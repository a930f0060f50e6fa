"""SVG figures for solver runs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from bihilfer.spectral import GridField, SpectralCoefficients  # noqa: E402

#: fixed id salt and no date stamp keep the SVG output reproducible
_RC = {"svg.hashsalt": "bihilfer", "svg.fonttype": "none", "font.size": 9}
_META = {"Date": None}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=_META, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_solution(fld: GridField, path) -> Path:
    """Weighted solution over the ``(t, x)`` rectangle plus a few time slices."""
    with plt.rc_context(_RC):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.6))
        t, x = fld.t_grid, fld.x_grid
        m = ax0.pcolormesh(t, x, fld.values, shading="nearest", cmap="RdBu_r", rasterized=True)
        ax0.axvline(0.0, color="k", lw=0.6)
        ax0.set_xlabel("t")
        ax0.set_ylabel("x")
        ax0.set_title("weighted u")
        fig.colorbar(m, ax=ax0)

        T = max(-t[0], t[-1])
        for frac in (-1.0, -0.5, 0.5, 1.0):
            j = int(np.argmin(np.abs(t - frac * T)))
            ax1.plot(x, fld.raw()[:, j], lw=1.0, label=f"t = {t[j]:.3g}")
        ax1.set_xlabel("x")
        ax1.set_ylabel("u")
        ax1.legend(frameon=False)
        return _save(fig, Path(path))


def plot_coefficients(c: SpectralCoefficients, path) -> Path:
    """Magnitudes of the data and solution coefficients and of the determinants."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        floor = 1e-300
        for name, v, mk in (("|psi_n|", c.psi_n, "o"), ("|F_n|", c.F_n, "s"),
                            ("|tau_n|", c.tau_n, "^"), ("|Delta_n|", c.Delta_n, "x")):
            a = np.abs(v)
            keep = a > floor
            if np.any(keep):
                ax.semilogy(c.n[keep], a[keep], mk, ms=3, label=name)
        ax.set_xlabel("n")
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def plot_cauchy(t: np.ndarray, closed: np.ndarray, oracle: np.ndarray, path) -> Path:
    """Closed form and oracle (weighted) with their pointwise difference."""
    with plt.rc_context(_RC):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
        ax0.plot(t, closed, lw=1.2, label="closed form")
        ax0.plot(t, oracle, "--", lw=1.2, label="oracle")
        ax0.set_xlabel("t")
        ax0.set_ylabel("weighted u")
        ax0.legend(frameon=False)
        diff = np.abs(closed - oracle)
        keep = diff > 0
        ax1.semilogy(t[keep], diff[keep], lw=1.0)
        ax1.set_xlabel("t")
        ax1.set_ylabel("|difference|")
        return _save(fig, Path(path))
