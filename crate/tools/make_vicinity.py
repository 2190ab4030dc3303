"""Generate the synthetic street map around the leaning-pole example.

The main street passes through the two reference road endpoints; everything else
is laid out on a grid in UTM zone 54 and written back as lat/lon with 7
decimals. Also writes the pole readings (tilt/azimuth derived from the reference
pole base and tip) and the road-mode site list.
"""
import json, math, os
import pyproj

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FWD = pyproj.Transformer.from_crs("EPSG:4326", "EPSG:32654", always_xy=True)
INV = pyproj.Transformer.from_crs("EPSG:32654", "EPSG:4326", always_xy=True)

A = (35.61492, 139.51453)
B = (35.61503, 139.51472)
POLE_BASE = (35.61496, 139.51456)
POLE_TIP = (35.61494, 139.51458)
POLE_HEIGHT = 12.0


def utm(p):
    return FWD.transform(p[1], p[0])


ax, ay = utm(A)
bx, by = utm(B)
L = math.hypot(bx - ax, by - ay)
ux, uy = (bx - ax) / L, (by - ay) / L
vx, vy = -uy, ux


def at(u, v):
    lon, lat = INV.transform(ax + u * ux + v * vx, ay + u * uy + v * vy)
    return (round(lat, 7), round(lon, 7))


nodes = {
    1: at(-600, 0), 2: at(-300, 0), 3: A, 4: B, 5: at(300, 0), 6: at(600, 0),
    11: at(-600, 300), 12: at(-300, 300), 13: at(300, 300), 14: at(600, 300),
    21: at(-600, -300), 22: at(-300, -300), 23: at(300, -300), 24: at(600, -300),
    # house footprint and a lone tree
    31: at(-150, 60), 32: at(-120, 60), 33: at(-120, 90), 34: at(-150, 90),
    40: at(100, -40),
}
ways = [
    (100, [1, 2, 3, 4, 5, 6], {"highway": "residential", "name": "Ekimae-dori"}),
    (101, [11, 12, 13, 14], {"highway": "residential"}),
    (102, [21, 22, 23, 24], {"highway": "residential", "width": "5"}),
    (103, [21, 1, 11], {"highway": "tertiary"}),
    (104, [22, 2, 12], {"highway": "residential"}),
    (105, [23, 5, 13], {"highway": "residential"}),
    (106, [24, 6, 14], {"highway": "tertiary"}),
    (107, [3, 31], {"highway": "footway"}),
    (200, [31, 32, 33, 34, 31], {"building": "house"}),
]

lines = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="make_vicinity.py">']
for nid, (lat, lon) in sorted(nodes.items()):
    if nid == 40:
        lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}">')
        lines.append('    <tag k="natural" v="tree"/>')
        lines.append('  </node>')
    else:
        lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}"/>')
for wid, refs, tags in ways:
    lines.append(f'  <way id="{wid}">')
    lines += [f'    <nd ref="{r}"/>' for r in refs]
    lines += [f'    <tag k="{k}" v="{v}"/>' for k, v in tags.items()]
    lines.append('  </way>')
lines.append('</osm>')
with open(os.path.join(ROOT, "fixtures/osm/vicinity.osm"), "w") as f:
    f.write("\n".join(lines) + "\n")

# Pole reading whose projection reproduces the reference base -> tip segment.
px, py = utm(POLE_BASE)
tx, ty = utm(POLE_TIP)
reach = math.hypot(tx - px, ty - py)
tilt = math.degrees(math.asin(reach / POLE_HEIGHT))
azimuth = math.degrees(math.atan2(tx - px, ty - py)) % 360
poles = [{"pole_id": "P-0417", "lat": POLE_BASE[0], "lon": POLE_BASE[1], "height_m": POLE_HEIGHT,
          "tilt_deg": round(tilt, 9), "azimuth_deg": round(azimuth, 9)}]
with open(os.path.join(ROOT, "fixtures/road/poles.json"), "w") as f:
    json.dump(poles, f, indent=2)
    f.write("\n")
upright = [dict(poles[0], tilt_deg=2.0)]
with open(os.path.join(ROOT, "fixtures/road/poles_upright.json"), "w") as f:
    json.dump(upright, f, indent=2)
    f.write("\n")
with open(os.path.join(ROOT, "fixtures/road/poles_empty.json"), "w") as f:
    f.write("[]\n")


def near(nid, du=4.0, dv=3.0):
    (lat, lon) = nodes[nid]
    x, y = utm((lat, lon))
    lon2, lat2 = INV.transform(x + du * ux + dv * vx, y + du * uy + dv * vy)
    return round(lat2, 7), round(lon2, 7)


site_nodes = [(0, "start_depot", 1), (1, "fault_pole", 2), (2, "fault_pole", 5),
              (3, "fault_wire", 23), (4, "fault_wire", 11), (5, "end_depot", 6)]
sites = []
for sid, kind, nid in site_nodes:
    lat, lon = near(nid)
    sites.append({"site_id": sid, "kind": kind, "lat": lat, "lon": lon})
with open(os.path.join(ROOT, "fixtures/road/sites.json"), "w") as f:
    json.dump(sites, f, indent=2)
    f.write("\n")

print(f"road segment length {L:.6f} m, pole reach {reach:.6f} m, tilt {tilt:.9f}, azimuth {azimuth:.9f}")
