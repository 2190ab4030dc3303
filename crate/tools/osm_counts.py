"""Independent counts for an OSM extract: xml.etree for parsing, PROJ for lengths.

usage: python3 tools/osm_counts.py FILE.osm [ZONE]
Prints node/way/road-way counts, graph node and edge counts, and the summed
edge length in metres (UTM north, default zone 54).
"""
import math, sys
import xml.etree.ElementTree as ET
import pyproj

path = sys.argv[1]
zone = int(sys.argv[2]) if len(sys.argv) > 2 else 54
fwd = pyproj.Transformer.from_crs("EPSG:4326", f"EPSG:{32600 + zone}", always_xy=True)
root = ET.parse(path).getroot()
nodes = {n.get("id"): (float(n.get("lat")), float(n.get("lon"))) for n in root.findall("node")}
ways = root.findall("way")
roads, used, edges, length = 0, set(), 0, 0.0
for w in ways:
    tags = {t.get("k"): t.get("v") for t in w.findall("tag")}
    if "highway" not in tags:
        continue
    refs = [nd.get("ref") for nd in w.findall("nd")]
    dedup = [r for i, r in enumerate(refs) if i == 0 or r != refs[i - 1]]
    if len(dedup) < 2 or any(r not in nodes for r in dedup):
        continue
    roads += 1
    used.update(dedup)
    for p, q in zip(dedup, dedup[1:]):
        x1, y1 = fwd.transform(nodes[p][1], nodes[p][0])
        x2, y2 = fwd.transform(nodes[q][1], nodes[q][0])
        edges += 1
        length += math.hypot(x2 - x1, y2 - y1)
print(f"nodes={len(nodes)} ways={len(ways)} road_ways={roads} graph_nodes={len(used)} edges={edges} total_length_m={length:.6f}")
