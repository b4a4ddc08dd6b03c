"""One live intervention, end to end, over the wire protocol.

Starts the live websocket service in-process and connects two scripted
clients: a semantic driver that only ever sees the degraded view, and a
safety driver watching the clear view. After the ring buffer has filled,
the safety client stamps the brake; the service freezes the stream,
asks the safety driver to label the intervention, persists the labeled
three-second record, and resumes. Exactly what a human pair does at two
browser tabs, minus the browsers.
"""

import argparse
import asyncio
import json
import tempfile

from websockets.asyncio.client import connect

from aeye.perception import DegradationParams
from aeye.server import LiveServer
from aeye.session import SessionConfig
from aeye.wire import parse
from aeye.world import WorldConfig


async def recv_until(ws, want):
    while True:
        msg = parse(await ws.recv())
        if want(msg):
            return msg


async def scenario(seed, out):
    cfg = SessionConfig(
        mode="live",
        world=WorldConfig(seed=seed, npc_walkers=10, npc_vehicles=2),
        degradation=DegradationParams(quality=0.5, seed=seed),
        listen_port=0,
    )
    server = LiveServer(cfg, data_dir=out, tick_interval=0.01)
    port = await server.start()
    print(f"service on ws://127.0.0.1:{port}/ws, records under {out}")

    sem = await connect(f"ws://127.0.0.1:{port}/ws")
    saf = await connect(f"ws://127.0.0.1:{port}/ws")
    seq = {"sem": 0, "saf": 0}

    async def send(tag, ws, msg_type, **fields):
        seq[tag] += 1
        await ws.send(json.dumps({"format": "aeye-wire/1", "type": msg_type,
                                  "seq": seq[tag], **fields}))

    await send("sem", sem, "hello", role="semantic")
    await recv_until(sem, lambda m: m["type"] == "role_assigned")
    await send("saf", saf, "hello", role="safety")
    await recv_until(saf, lambda m: m["type"] == "role_assigned")
    await recv_until(saf, lambda m: m.get("kind") == "started")
    print("both roles claimed; driving")

    await recv_until(saf, lambda m: m["type"] == "state_frame" and m["tick"] >= 35)
    print("buffer full; safety driver stamps the brake")
    await send("saf", saf, "control_input", role="safety",
               cmd={"steer": 0.0, "throttle": 0.0, "brake": 1.0})

    req = await recv_until(saf, lambda m: m["type"] == "label_request")
    print(f"label requested at tick {req['tick']}; answering overlooked_walker")
    await send("saf", saf, "intervention_label", cause="overlooked_walker",
               comment="demo: walker hidden by dropout blob")

    ev = await recv_until(saf, lambda m: m.get("kind") == "cc_captured")
    print(f"captured record {ev['id']}")

    await sem.close()
    await saf.close()
    await server.stop()
    print("session ended; manifest:")
    with open(f"{out}/{ev['id']}/manifest.json") as fh:
        man = json.load(fh)
    print(f"  format={man['format']}  frames={len(man['frames'])}  "
          f"cause={man['event']['cause']}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=21)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    out = args.out or tempfile.mkdtemp(prefix="aeye-live-")
    asyncio.run(scenario(args.seed, out))


if __name__ == "__main__":
    main()
