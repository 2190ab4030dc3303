"""Reference UTM coordinates from PROJ, frozen into crates/core/tests/geo_props.rs."""
import pyproj

POINTS = [
    (35.61492, 139.51453),
    (35.61503, 139.51472),
    (35.61496, 139.51456),
    (35.61494, 139.51458),
    (0.0, 3.0),
    (-33.9249, 18.4241),
    (64.1466, -21.9426),
    (45.0, -77.9),
    (-45.0, 170.99),
]

for lat, lon in POINTS:
    zone = int((lon + 180) // 6) + 1
    epsg = (32600 if lat >= 0 else 32700) + zone
    t = pyproj.Transformer.from_crs("EPSG:4326", f"EPSG:{epsg}", always_xy=True)
    e, n = t.transform(lon, lat)
    print(f"    ({lat}, {lon}, {zone}, {e:.6f}, {n:.6f}),")
