"""Reads an exported GEXF network with networkx and compares it with the JSON export."""

import json
import math
import sys

import networkx as nx


def main(gexf_path, json_path):
    graph = nx.read_gexf(gexf_path)
    with open(json_path) as f:
        expected = json.load(f)
    entries = {e["term"]: e for e in expected["entries"]}
    problems = []
    if set(graph.nodes) != set(entries):
        problems.append(f"nodes {sorted(graph.nodes)} != {sorted(entries)}")
    for term, entry in entries.items():
        if term not in graph.nodes:
            continue
        attrs = graph.nodes[term]
        if attrs.get("origin") != entry["origin"]:
            problems.append(f"{term}: origin {attrs.get('origin')}")
        if attrs.get("iteration_added") != entry["iteration_added"]:
            problems.append(f"{term}: iteration_added {attrs.get('iteration_added')}")
        if not math.isclose(attrs.get("gain_ratio", math.nan), entry["gain_ratio"], rel_tol=1e-12):
            problems.append(f"{term}: gain_ratio {attrs.get('gain_ratio')}")
    want_edges = {frozenset((a, b)): sim for a, b, sim in expected["edges"]}
    got_edges = {frozenset((a, b)): d.get("weight") for a, b, d in graph.edges(data=True)}
    if set(got_edges) != set(want_edges):
        problems.append(f"edges {sorted(map(sorted, got_edges))} != {sorted(map(sorted, want_edges))}")
    for key, sim in want_edges.items():
        if key in got_edges and not math.isclose(got_edges[key], sim, rel_tol=1e-12):
            problems.append(f"edge {sorted(key)} weight {got_edges[key]} != {sim}")
    if graph.is_directed():
        problems.append("graph read as directed")
    for p in problems:
        print("FAIL:", p)
    print(f"{graph.number_of_nodes()} nodes, {graph.number_of_edges()} edges read by networkx {nx.__version__}")
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
