"""
trace_stats.py
----------------
Per-step summary statistics of a simulation trace
Copyright (C) 2026 operasim contributors

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

from collections import Counter

import networkx as nx
import pandas as pd

from .trace import Trace

ENV_CELLS_TOTAL = "env+cells total"


def _components(nodes, edges) -> int:
    g = nx.Graph()
    g.add_nodes_from(nodes)
    g.add_edges_from(tuple(e) for e in edges)
    return nx.number_connected_components(g)


def _pps_row(rec: dict) -> dict:
    cells = rec.get("cells", [])
    env = rec.get("environment", {})
    bonds = rec.get("bonds", [])
    row = {f"pop:{t}": n for t, n in Counter(c["type"] for c in cells).items()}
    row["population"] = len(cells)
    row.update({f"env:{s}": n for s, n in env.items()})
    row["edges"] = len(bonds)
    row["components"] = _components([c["id"] for c in cells], bonds)
    row[ENV_CELLS_TOTAL] = sum(env.values()) + sum(sum(c["contents"].values()) for c in cells)
    return row


def _machines_row(rec: dict) -> dict:
    machines = rec.get("machines", [])
    channels = rec.get("channels", [])
    row = {f"pop:{s}": n for s, n in Counter(m["state"] for m in machines).items()}
    row["population"] = len(machines)
    row["edges"] = len(channels)
    row["components"] = _components([m["id"] for m in machines], [(c["from"], c["to"]) for c in channels])
    return row


def _operas_row(rec: dict) -> dict:
    agents = rec.get("agents", [])
    channels = rec.get("channels", [])
    env: Counter = Counter()
    for cell in rec.get("grid", []):
        env.update(cell["contents"])
    env.update(rec.get("globals", {}))
    row = {f"pop:{t}": n for t, n in Counter(a["type"] for a in agents).items()}
    row["population"] = len(agents)
    row.update({f"env:{s}": n for s, n in env.items()})
    row["edges"] = len(channels)
    row["components"] = _components([a["id"] for a in agents], channels)
    return row


def _row(rec: dict) -> dict:
    if "cells" in rec:
        return _pps_row(rec)
    if "agents" in rec:
        return _operas_row(rec)
    return _machines_row(rec)


def _column_order(columns: set[str]) -> list[str]:
    pops = sorted(c for c in columns if c.startswith("pop:"))
    envs = sorted(c for c in columns if c.startswith("env:"))
    tail = [ENV_CELLS_TOTAL] if ENV_CELLS_TOTAL in columns else []
    return ["step", *pops, "population", *envs, "edges", "components", *tail]


def stats_frame(trace: Trace) -> pd.DataFrame:
    """
    One row per snapshot. Columns absent from a step (a type with no member yet) count 0.
    """
    rows = []
    for rec in trace.snapshots:
        row = _row(rec)
        row["step"] = rec.get("step", len(rows))
        rows.append(row)
    columns = _column_order({k for row in rows for k in row})
    rows = [{c: row.get(c, 0) for c in columns} for row in rows]
    return pd.DataFrame(rows, columns=columns)


def render_stats(frame: pd.DataFrame, csv: bool = False) -> str:
    if csv:
        return frame.to_csv(index=False, lineterminator="\n")
    return frame.to_string(index=False) + "\n"


def stats(trace: Trace, csv: bool = False) -> str:
    return render_stats(stats_frame(trace), csv=csv)
