"""Static SVG scatter plots (optional; needs matplotlib)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Fixed salt and no timestamp keep the SVG bytes reproducible.
matplotlib.rcParams["svg.hashsalt"] = "semproj"


def write_scatter_svg(report, path):
    fig, ax = plt.subplots(figsize=(4, 4))
    x, y = np.asarray(report.model_z), np.asarray(report.human_z)
    ax.scatter(x, y, s=12)
    slope, intercept = np.polyfit(x, y, 1)
    xs = np.array([x.min(), x.max()])
    ax.plot(xs, slope * xs + intercept, linewidth=1)
    ax.set_xlabel("projection (z)")
    ax.set_ylabel("mean human rating (z)")
    ax.set_title(f"{report.category} / {report.feature}")
    ax.text(0.02, -0.2, f"r={report.r:.2f}  OC_p={report.ocp:.0%}", transform=ax.transAxes)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
