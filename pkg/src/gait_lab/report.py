"""Trace export: delimited text files plus rendered figures.

CSV schemas (exact headers, floats at 15 significant digits, events
appended as comment lines prefixed ``#event,``):

  runner :  t,phase,x,z,xdot,zdot,l,theta
  walker :  t,support,com_x,com_xdot,left_state,right_state
  crawler:  t,drive,com_x,com_xdot,q11,q12,q23,q24,f_FR,f_HL

Figures are rendered with matplotlib; the output format follows the file
extension (``.svg`` produces a well-formed XML document).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # file rendering only, never a display
import matplotlib.pyplot as plt

from .analysis import KinematicCurves
from .crawler import CrawlTrace
from .slip import HopTrace
from .walker import WalkerTrace

HOP_HEADER = "t,phase,x,z,xdot,zdot,l,theta"
WALKER_HEADER = "t,support,com_x,com_xdot,left_state,right_state"
CRAWLER_HEADER = "t,drive,com_x,com_xdot,q11,q12,q23,q24,f_FR,f_HL"


def _fmt(v: float) -> str:
    return format(v, ".15g")


def _rows_hop(trace: HopTrace):
    for i in range(len(trace)):
        yield (
            _fmt(trace.t[i]),
            trace.phase[i],
            _fmt(trace.x[i]),
            _fmt(trace.z[i]),
            _fmt(trace.xdot[i]),
            _fmt(trace.zdot[i]),
            _fmt(trace.l[i]),
            _fmt(trace.theta[i]),
        )


def _rows_walker(trace: WalkerTrace):
    for i in range(len(trace)):
        yield (
            _fmt(trace.t[i]),
            trace.support[i],
            _fmt(trace.com_x[i]),
            _fmt(trace.com_xdot[i]),
            trace.left_state[i],
            trace.right_state[i],
        )


def _rows_crawler(trace: CrawlTrace):
    for i in range(len(trace)):
        yield (
            _fmt(trace.t[i]),
            trace.drive[i],
            _fmt(trace.com_x[i]),
            _fmt(trace.com_xdot[i]),
            _fmt(trace.q11[i]),
            _fmt(trace.q12[i]),
            _fmt(trace.q23[i]),
            _fmt(trace.q24[i]),
            _fmt(trace.f_FR[i]),
            _fmt(trace.f_HL[i]),
        )


def write_csv(trace, path) -> None:
    """Write a trace in its model's schema; identical traces give identical bytes."""
    if isinstance(trace, HopTrace):
        header, rows = HOP_HEADER, _rows_hop(trace)
    elif isinstance(trace, WalkerTrace):
        header, rows = WALKER_HEADER, _rows_walker(trace)
    elif isinstance(trace, CrawlTrace):
        header, rows = CRAWLER_HEADER, _rows_crawler(trace)
    else:
        raise TypeError(f"unsupported trace type {type(trace).__name__}")
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
        for ev in trace.events:
            fh.write(f"#event,{_fmt(ev.t)},{ev.kind}\n")


def write_plot(curves: KinematicCurves, path) -> None:
    """Render the six kinematic curves as a 2x3 panel figure."""
    if len(curves.t) == 0:
        raise ValueError("cannot plot empty curves")
    fig, axes = plt.subplots(2, 3, figsize=(12.0, 6.5))
    panels = [
        ("x", curves.t, curves.x, "time [s]", "x [m]", "horizontal displacement"),
        ("z", curves.t, curves.z, "time [s]", "z [m]", "vertical displacement"),
        ("xdot", curves.t, curves.xdot, "time [s]", "xdot [m/s]", "horizontal velocity"),
        ("zdot", curves.t, curves.zdot, "time [s]", "zdot [m/s]", "vertical velocity"),
        ("path", curves.path[:, 0], curves.path[:, 1], "x [m]", "z [m]", "CoM path"),
        ("l", curves.t, curves.l, "time [s]", "l [m]", "axial leg displacement"),
    ]
    for ax, (name, xs, ys, xlabel, ylabel, title) in zip(axes.flat, panels):
        # stable ids so the emitted document stays machine-checkable
        ax.plot(xs, ys, lw=1.0, gid=f"curve-{name}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title, fontsize=10)
        ax.grid(True, alpha=0.4)
        if name == "path":
            ax.set_aspect("equal", adjustable="datalim")  # spatial panel
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_walker_trace(trace: WalkerTrace, path) -> None:
    """CoM position and speed over a walking run, with support swaps marked."""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(10.0, 6.0), sharex=True)
    ax1.plot(trace.t, trace.com_x, lw=1.0)
    ax1.set_ylabel("CoM x [m]")
    ax1.grid(True, alpha=0.4)
    ax2.plot(trace.t, trace.com_xdot, lw=1.0)
    ax2.set_ylabel("CoM xdot [m/s]")
    ax2.set_xlabel("time [s]")
    ax2.grid(True, alpha=0.4)
    for t_ev in trace.event_times("swap"):
        ax1.axvline(t_ev, color="grey", lw=0.5, alpha=0.5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_crawler_trace(trace: CrawlTrace, path) -> None:
    """CoM motion, leg angles and contact forces over a crawling run."""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    fig, (ax1, ax2, ax3) = plt.subplots(3, 1, figsize=(10.0, 8.0), sharex=True)
    ax1.plot(trace.t, trace.com_x, lw=1.0, label="com_x")
    ax1.plot(trace.t, trace.com_xdot, lw=1.0, label="com_xdot")
    ax1.legend(fontsize=8)
    ax1.grid(True, alpha=0.4)
    ax2.plot(trace.t, trace.q11, lw=1.0, label="q11")
    ax2.plot(trace.t, trace.q12, lw=1.0, label="q12")
    ax2.set_ylabel("angle [rad]")
    ax2.legend(fontsize=8)
    ax2.grid(True, alpha=0.4)
    ax3.plot(trace.t, trace.f_FR, lw=1.0, label="f_FR")
    ax3.plot(trace.t, trace.f_HL, lw=1.0, label="f_HL")
    ax3.set_ylabel("force [N]")
    ax3.set_xlabel("time [s]")
    ax3.legend(fontsize=8)
    ax3.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
