#!/usr/bin/env python3
"""Scripted interactive session against the live service.

Starts the WebSocket service in-process, connects the headless client,
places and removes food while the simulation runs, and shows the collective
reacting in the snapshot stream.  The browser console under frontend/ speaks
exactly this protocol.

Run:  python demos/05_live_session.py
"""

import asyncio
import json
import socket
import threading
import time

from swarmphase.scenarios import parse_scenario
from swarmphase.service import LiveService, WsClient

doc = {"mode": "lattice", "seed": 7, "trials": 1, "side": 24, "agents": 90,
       "stop": {"predicate": "none", "max_iters": 1}}
scenario = parse_scenario(json.dumps(doc))

sock = socket.socket()
sock.bind(("127.0.0.1", 0))
port = sock.getsockname()[1]
sock.close()

service = LiveService(scenario, port, stride=40_000, speed_ips=400_000.0)
loop = asyncio.new_event_loop()


def run_loop():
    asyncio.set_event_loop(loop)
    loop.run_until_complete(service.start())
    loop.run_forever()


threading.Thread(target=run_loop, daemon=True).start()
time.sleep(0.3)

cli = WsClient("127.0.0.1", port)
snap = cli.recv_json()
print(f"connected: {len(snap['agents'])} agents on a {snap['side']}x{snap['side']} lattice")


def aware_fraction(snapshot):
    return sum(1 for a in snapshot["agents"] if a["state"] != "U") / len(snapshot["agents"])


cli.send_json({"type": "place_food", "q": 12, "r": 12, "cmd_id": 1})
print("placed food at (12,12); watching the gather phase:")
t_end = time.time() + 6
while time.time() < t_end:
    msg = cli.recv_json()
    if "agents" in msg:
        print(f"  tick {msg['tick']:>9,}  aware {aware_fraction(msg):6.1%}  food {msg['food']}")

cli.send_json({"type": "remove_food", "q": 12, "r": 12, "cmd_id": 2})
print("removed the food; watching the reset:")
t_end = time.time() + 5
while time.time() < t_end:
    msg = cli.recv_json()
    if "agents" in msg:
        print(f"  tick {msg['tick']:>9,}  aware {aware_fraction(msg):6.1%}")

print("\nsession command log (replayable as a scenario schedule):")
for entry in service.session.replay_schedule():
    print("  ", entry)

cli.close()
loop.call_soon_threadsafe(loop.stop)
