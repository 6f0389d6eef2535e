"""Graphviz DOT export for undirected graphs."""

from pathlib import Path
from typing import Any

import networkx as nx

from quasitree.utils.csv_writer import format_value
from quasitree.utils.helpers import ensure_directory


def quote(value: Any) -> str:
    text = format_value(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def _attributes(attributes: dict[str, Any]) -> str:
    if not attributes:
        return ""
    body = ", ".join(f"{key}={quote(value)}" for key, value in sorted(attributes.items()))
    return f" [{body}]"


def write_dot(
    graph: nx.Graph,
    name: str = "G",
    graph_attributes: dict[str, Any] | None = None,
    file_path: str | Path | None = None,
) -> str:
    """
    Write an undirected graph in DOT format.

    Nodes are labelled with their ids; node and edge data become attributes.
    Nodes and edges are written in sorted order.

    :param graph: The graph to export
    :param name: Graph name
    :param graph_attributes: Attributes for the graph itself
    :param file_path: Optional file path to save the DOT text
    :return: DOT content as string
    """
    lines = [f"graph {quote(name)} {{"]
    for key, value in sorted((graph_attributes or {}).items()):
        lines.append(f"  {key}={quote(value)};")

    for node in sorted(graph.nodes, key=str):
        attributes = {"label": str(node), **graph.nodes[node]}
        lines.append(f"  {quote(str(node))}{_attributes(attributes)};")

    edges = sorted((tuple(sorted((str(u), str(v)))), data) for u, v, data in graph.edges(data=True))
    for (u, v), data in edges:
        lines.append(f"  {quote(u)} -- {quote(v)}{_attributes(data)};")
    lines.append("}")

    dot_content = "\n".join(lines) + "\n"

    if file_path:
        ensure_directory(file_path).write_text(dot_content, encoding="utf-8")

    return dot_content
