"""Random search for reconstructed work/capacity values of the 14-site instance.

Runs the release binary's pipeline on each candidate and ranks candidates by
distance of the aware area recovery slots to (18, 30, 31) and of the
makespan reduction to 28 %.

usage: python3 tools/calibrate.py N_TRIALS SEED
"""
import json, os, random, subprocess, sys, tempfile, time

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BIN = os.path.join(ROOT, "target", "release", "gridrecover")
AREAS = {"A": [2, 3, 4, 5], "B": [6, 7, 8], "C": [9, 10, 11]}
TARGET = {"A": 18, "B": 30, "C": 31}
TIMEOUT = 40


def instance(work, cap):
    faults = [
        {"site_id": f, "fault_type": "pole", "area_id": a, "required_work": work[f]}
        for a, fs in AREAS.items() for f in fs
    ]
    faults.sort(key=lambda f: f["site_id"])
    crews = []
    for c in range(6):
        s = 1 if c in (2, 3) else 0
        crews.append({"crew_id": c, "start_site": s, "end_site": 12 if s == 0 else 13})
    return {
        "faults": faults,
        "areas": [{"area_id": a, "capacity_kw": cap[a], "fault_ids": fs} for a, fs in AREAS.items()],
        "crews": crews,
        "horizon": 60,
    }


def run(work, cap, tmp):
    with open(os.path.join(tmp, "instance.json"), "w") as f:
        json.dump(instance(work, cap), f)
    with open(os.path.join(tmp, "p.toml"), "w") as f:
        f.write(
            'output_dir = "out"\ninstance = "instance.json"\nfixture_compat = true\n'
            f'[matrices]\nbefore = "{ROOT}/fixtures/matrices/grid14_before.csv"\n'
            f'after = "{ROOT}/fixtures/matrices/grid14_after.csv"\n'
        )
    t0 = time.time()
    try:
        r = subprocess.run([BIN, "pipeline", "--config", os.path.join(tmp, "p.toml")],
                           capture_output=True, text=True, timeout=TIMEOUT)
    except subprocess.TimeoutExpired:
        return None
    dt = time.time() - t0
    if r.returncode != 0:
        return None
    s = json.load(open(os.path.join(tmp, "out", "summary.json")))
    aware = json.load(open(os.path.join(tmp, "out", "plan_aware.json")))
    return s, aware["area_recovery"], dt


def main():
    n, seed = int(sys.argv[1]), int(sys.argv[2])
    rng = random.Random(seed)
    tmp = tempfile.mkdtemp()
    results = []
    for _ in range(n):
        work = {f: rng.randint(3, 18) for fs in AREAS.values() for f in fs}
        cap = {"A": rng.choice([10, 15, 20, 25, 30]), "B": rng.choice([5, 10, 15, 20]), "C": rng.choice([5, 10, 15])}
        out = run(work, cap, tmp)
        if out is None:
            continue
        s, rec, dt = out
        dist = sum(abs(rec[a] - TARGET[a]) for a in TARGET) + abs(s["reduction_pct"] - 28) / 2
        ok = s["aware"]["objective"] >= s["unaware"]["objective"] and s["reduction_pct"] > 0
        results.append((dist, ok, work, cap, s, rec, dt))
        print(f"{dist:6.1f} ok={ok} red={s['reduction_pct']:.1f} rec={rec} "
              f"mk={s['aware']['makespan']}/{s['unaware']['makespan']} t={dt:.1f}s "
              f"work={json.dumps(work)} cap={json.dumps(cap)}", flush=True)
    results.sort(key=lambda r: (not r[1], r[0]))
    for r in results[:5]:
        print(json.dumps({"dist": r[0], "work": r[2], "cap": r[3], "summary": r[4], "recovery": r[5], "secs": r[6]}))


if __name__ == "__main__":
    main()
