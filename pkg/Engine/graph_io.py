import json
import logging
from typing import Any, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from Engine.embedding import OpEmbedding
from Engine.graph_core import Graph, GraphError, make_graph

logger = logging.getLogger(__name__)

GRAPH6_MAX_N = 62


class GraphPayload(BaseModel):
    """On-disk graph: 0-based vertices, edges as pairs."""

    model_config = ConfigDict(extra="forbid")

    n: int
    edges: List[Tuple[int, int]] = []


def graph_from_payload(data: Dict[str, Any]) -> Graph:
    try:
        payload = GraphPayload(**data)
    except (ValidationError, TypeError) as e:
        raise GraphError(f"Invalid graph payload: {e}")
    return make_graph(payload.n, payload.edges)


def graph_to_json(g: Graph) -> str:
    return json.dumps(g.to_payload(), sort_keys=True)


def to_networkx(g: Graph) -> nx.Graph:
    out = nx.Graph()
    out.add_nodes_from(range(g.n))
    out.add_edges_from(g.edges())
    return out


def from_networkx(graph: nx.Graph) -> Graph:
    nodes = list(graph.nodes())
    index = {v: i for i, v in enumerate(nodes)}
    return make_graph(len(nodes), [(index[u], index[v]) for u, v in graph.edges() if u != v])


def read_graph6(line: str) -> Graph:
    text = line.strip()
    if not text:
        raise GraphError("Empty graph6 line")
    try:
        graph = nx.from_graph6_bytes(text.encode("ascii"))
    except (ValueError, nx.NetworkXError) as e:
        raise GraphError(f"Invalid graph6 string {text!r}: {e}")
    if graph.number_of_nodes() > GRAPH6_MAX_N:
        raise GraphError(f"graph6 reader handles n <= {GRAPH6_MAX_N}, got {graph.number_of_nodes()}")
    return from_networkx(graph)


def write_graph6(g: Graph) -> str:
    if g.n > GRAPH6_MAX_N:
        raise GraphError(f"graph6 writer handles n <= {GRAPH6_MAX_N}, got {g.n}")
    return nx.to_graph6_bytes(to_networkx(g), header=False).decode("ascii").strip()


def _unwrap(item: Any) -> Any:
    if isinstance(item, dict) and "result" in item and isinstance(item["result"], dict):
        item = item["result"]
    if isinstance(item, dict) and "graph" in item:
        item = item["graph"]
    return item


def load_graphs(path: str, graph6: bool = False) -> List[Graph]:
    """Graphs from a JSON file (one object or a list) or a graph6 file (one per line)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()

    if graph6 or path.endswith(".g6"):
        graphs = [read_graph6(line) for line in text.splitlines() if line.strip()]
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise GraphError(f"Cannot parse graph file {path}: {e}")
        items = data if isinstance(data, list) else [data]
        # a generate report carries its graph under "result"/"graph"
        items = [_unwrap(item) for item in items]
        graphs = [graph_from_payload(item) for item in items]

    if not graphs:
        raise GraphError(f"No graphs in {path}")
    logger.debug(f"Loaded {len(graphs)} graph(s) from {path}")
    return graphs


def load_graph(path: str, graph6: bool = False) -> Graph:
    graphs = load_graphs(path, graph6)
    if len(graphs) > 1:
        logger.warning(f"{path} holds {len(graphs)} graphs; using the first")
    return graphs[0]


def save_graph(g: Graph, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(graph_to_json(g) + "\n")


def to_dot(g: Graph, embedding: Optional[OpEmbedding] = None, name: str = "G") -> str:
    """DOT text; with an embedding the outer cycle is pinned on a circle for neato."""
    lines = [f"graph {name} {{"]
    if embedding is not None:
        lines.append("  layout=neato;")
        k = embedding.n
        for i, v in enumerate(embedding.outer):
            angle = 2 * np.pi * i / k
            lines.append(f'  {v} [pos="{np.cos(angle):.4f},{np.sin(angle):.4f}!"];')
        chords = set(embedding.chords)
        for u, v in g.edges():
            style = ' [style=dashed]' if (u, v) in chords else ""
            lines.append(f"  {u} -- {v}{style};")
    else:
        for v in range(g.n):
            lines.append(f"  {v};")
        for u, v in g.edges():
            lines.append(f"  {u} -- {v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
