"""Certification records and their serialized forms.

Reports carry one row per grid point plus the constants that produced the
right-hand sides. CSV and JSON emission is fully deterministic: floats are
written with repr round-tripping and no timestamps are recorded. Figures are
rendered with the Agg backend and a fixed SVG hash salt so identical runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

MARGIN_TOLERANCE = -1e-9

CSV_COLUMNS = ["q", "mu", "region", "d", "t", "lhs", "rhs", "margin", "valid", "gate_ok"]


@dataclass(frozen=True)
class GridPoint:
    """One certified inequality sample; `d` is d(X, Y) or the profile radius x."""

    q: int
    mu: float
    region: str
    d: int
    t: float
    lhs: float
    rhs: float
    valid: bool = True
    gate_ok: Optional[bool] = None

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def violates(self) -> bool:
        return self.valid and self.margin < MARGIN_TOLERANCE


@dataclass
class CertificationReport:
    kind: str
    points: list[GridPoint]
    constants: list[dict]
    metadata: dict = field(default_factory=dict)

    @property
    def violations(self) -> list[GridPoint]:
        return [p for p in self.points if p.violates]

    @property
    def certified(self) -> bool:
        return not self.violations

    def summary(self) -> dict:
        valid_points = [p for p in self.points if p.valid]
        return {
            "kind": self.kind,
            "points": len(self.points),
            "valid_points": len(valid_points),
            "violations": len(self.violations),
            "min_margin_valid": min((p.margin for p in valid_points), default=None),
            "tolerance": MARGIN_TOLERANCE,
        }

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "metadata": self.metadata,
            "constants": self.constants,
            "summary": self.summary(),
            "points": [
                {
                    "q": p.q,
                    "mu": p.mu,
                    "region": p.region,
                    "d": p.d,
                    "t": p.t,
                    "lhs": p.lhs,
                    "rhs": p.rhs,
                    "margin": p.margin,
                    "valid": p.valid,
                    "gate_ok": p.gate_ok,
                }
                for p in self.points
            ],
        }

    def write_json(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")

    def write_csv(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for p in self.points:
            # float() strips numpy scalar wrappers so repr round-trips cleanly
            writer.writerow(
                [
                    p.q,
                    repr(float(p.mu)),
                    p.region,
                    p.d,
                    repr(float(p.t)),
                    repr(float(p.lhs)),
                    repr(float(p.rhs)),
                    repr(float(p.margin)),
                    int(p.valid),
                    "" if p.gate_ok is None else int(p.gate_ok),
                ]
            )
        path.write_text(buffer.getvalue())


def write_constants_json(path: Path, constants: list[dict], metadata: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"metadata": metadata, "constants": constants}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "quenchbound"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)


def render_margin_heatmap(report: CertificationReport, path: Path) -> None:
    """log10 margins over the (d, t) grid, one panel per (q, mu) combination."""
    plt = _pyplot()
    combos = sorted({(p.q, p.mu) for p in report.points})
    fig, axes = plt.subplots(1, max(len(combos), 1), figsize=(4.2 * max(len(combos), 1), 3.6), squeeze=False)
    for ax, (q, mu) in zip(axes[0], combos):
        pts = [p for p in report.points if p.q == q and p.mu == mu]
        d_values = sorted({p.d for p in pts})
        t_values = sorted({p.t for p in pts})
        grid = np.full((len(d_values), len(t_values)), np.nan)
        for p in pts:
            grid[d_values.index(p.d), t_values.index(p.t)] = np.log10(max(p.margin, 1e-16))
        mesh = ax.imshow(
            grid,
            aspect="auto",
            origin="lower",
            extent=(min(t_values), max(t_values), min(d_values) - 0.5, max(d_values) + 0.5),
        )
        fig.colorbar(mesh, ax=ax, label="log10 margin")
        ax.set_xlabel("t")
        ax.set_ylabel("d(X, Y)")
        ax.set_title(f"{report.kind}  q={q}  mu={mu:g}")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def render_lightcone(
    profiles: Sequence,
    v_primes: dict[float, float],
    path: Path,
) -> None:
    """Entanglement-difference heatmap with the bound's cone edge overlaid.

    One panel per branch profile; each mu contributes a line x = v'_mu * t.
    """
    plt = _pyplot()
    profiles = list(profiles)
    fig, axes = plt.subplots(1, len(profiles), figsize=(5.0 * len(profiles), 3.8), squeeze=False)
    for ax, profile in zip(axes[0], profiles):
        t = np.asarray(profile.t_grid)
        x = np.asarray(profile.x_grid)
        mesh = ax.pcolormesh(t, x, profile.difference, shading="nearest")
        fig.colorbar(mesh, ax=ax, label="|E0 - Eq| (bits)")
        for mu, v_prime in sorted(v_primes.items()):
            ax.plot(t, v_prime * t, linewidth=1.2, label=f"x = v'_mu t (mu={mu:g})")
        ax.set_xlim(t.min(), t.max())
        ax.set_ylim(x.min() - 0.5, x.max() + 0.5)
        ax.set_xlabel("t")
        ax.set_ylabel("enlargement radius x")
        ax.set_title(f"entanglement light cone, q={profile.q}")
        ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def render_capacity_curve(t_grid: Sequence[float], capacities: Sequence[float], path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(list(t_grid), list(capacities), marker="o", markersize=3)
    ax.set_xlabel("t")
    ax.set_ylabel("Holevo capacity (bits)")
    ax.set_title("channel capacity across the quench region")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
