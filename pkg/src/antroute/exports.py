"""Exporters: DOT occupation graphs and CSV metric files.

All exporters are pure functions of their inputs; exporting twice yields
byte-identical output.
"""

from __future__ import annotations

import math

from .harness import ReplicationSummary, RunMetrics
from .net import FlowTable, Network

CSV_HEADER = "iteration,power,spf_power,savings,avg_path_len,adoptions,rejections"


def export_dot(table: FlowTable, net: Network | None = None) -> str:
    """DOT digraph of the routing occupation.

    Edge pen width grows in proportion to the number of flows on the link;
    links carrying no flow render dotted.
    """
    net = net or table.net
    counts = table.link_flow_counts()
    peak = max(int(counts.max()), 1) if len(counts) else 1
    lines = ["digraph occupation {"]
    for node in net.nodes:
        shape = "doublecircle" if node.edge else "circle"
        lines.append(f'  "{node.name}" [shape={shape}];')
    for link in net.links:
        c = int(counts[link.index])
        src = net.nodes[link.src].name
        dst = net.nodes[link.dst].name
        if c == 0:
            lines.append(f'  "{src}" -> "{dst}" [style=dotted];')
        else:
            width = 1.0 + 4.0 * c / peak
            lines.append(
                f'  "{src}" -> "{dst}" [penwidth={width:.3f}, label="{c}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _csv_num(x: float) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.10g}"
    return str(x)


def run_metrics_csv(m: RunMetrics) -> str:
    rows = [CSV_HEADER]
    for t in range(m.n_iterations):
        rows.append(
            ",".join(
                [
                    str(t),
                    _csv_num(float(m.power[t])),
                    _csv_num(float(m.spf_power[t])),
                    _csv_num(float(m.savings[t])),
                    _csv_num(float(m.avg_path_len[t])),
                    str(int(m.adoptions[t])),
                    str(int(m.rejections[t])),
                ]
            )
        )
    return "\n".join(rows) + "\n"


def summary_csv(summary: ReplicationSummary) -> str:
    rows = ["metric,mean,ci95_halfwidth"]
    for name in ("savings", "path_len", "length_increment", "power", "conv90", "conv99"):
        mean, half = getattr(summary, name)
        rows.append(
            ",".join(
                [
                    name,
                    "" if mean is None else _csv_num(float(mean)),
                    "" if half is None else _csv_num(float(half)),
                ]
            )
        )
    return "\n".join(rows) + "\n"
