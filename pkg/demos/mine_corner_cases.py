"""Mine corner cases from a degraded drive, then replay one.

A semantic driver steers on a badly degraded view of the world while a
safety monitor watches the clear view. Each time the monitor slams the
brakes, the preceding three seconds are snapshotted as a corner-case
record. The script drives until five records exist, prints the campaign
summary, persists everything under an output directory, and dumps the
first few wire frames of a replay.
"""

import argparse
import json
import tempfile

from aeye.capture import persist
from aeye.evaluation import campaign_stats
from aeye.experiment import corner_case_campaign_config
from aeye.session import StopCondition, replay_record, run_headless_campaign
from aeye.wire import dumps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", default=None, help="record directory (default: temp)")
    args = ap.parse_args()

    cfg = corner_case_campaign_config(seed=args.seed)
    log, records, meta = run_headless_campaign(
        cfg, StopCondition(max_cc=5, max_minutes=120.0))

    print(f"drove {log.distance_km:.2f} km over {log.time_min:.1f} min "
          f"({meta['ticks']} ticks)")
    for i, ev in enumerate(log.events):
        print(f"  intervention {i}: {ev.odometer_km:6.3f} km  "
              f"{ev.time_min:5.2f} min  cause={ev.cause}")
    st = campaign_stats(log)
    print(f"stats: n_cc={st.n_cc}  mean_d_cc={st.mean_d_cc:.3f} km  "
          f"std={st.std_d_cc:.3f}")

    out = args.out or tempfile.mkdtemp(prefix="aeye-demo-")
    for rec in records:
        persist(rec, out)
    print(f"persisted {len(records)} records under {out}")

    frames = replay_record(records[0])
    print(f"replay of {records[0].id}: {len(frames)} wire frames, first two:")
    for msg in frames[:2]:
        line = dumps(msg)
        print(f"  {line[:100]}... ({len(line)} bytes)")


if __name__ == "__main__":
    main()
