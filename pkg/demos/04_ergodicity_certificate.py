#!/usr/bin/env python3
"""Line-reduction certificates for the compression chain.

Grows a random connected blob around a pinned agent, plans the sequence of
valid compression moves that straightens it into a line, and replays the
certificate through the independent verifier.  The certificate JSON written
at the end is the same format `sim ergodicity verify` consumes.

Run:  python demos/04_ergodicity_certificate.py
"""

from swarmphase import hexgeom
from swarmphase.ergodicity import PlanarConfig, reduce_to_line, verify_certificate
from swarmphase.rng import RngStream

rng = RngStream(1234)
cells = {(0, 0)}
while len(cells) < 14:
    frontier = sorted({nb for c in cells for nb in hexgeom.neighbors6(c)
                       if nb not in cells})
    cells.add(frontier[rng.randbelow(len(frontier))])

config = PlanarConfig(cells, (0, 0))
print("initial blob (pinned agent at the origin):")
qs = sorted({q for q, _ in cells})
rs = sorted({r for _, r in cells})
for r in range(min(rs), max(rs) + 1):
    row = " " * (r - min(rs))
    for q in range(min(qs), max(qs) + 1):
        row += "O " if (q, r) == (0, 0) else ("x " if (q, r) in cells else ". ")
    print("   " + row)

cert = reduce_to_line(config.copy(), canonical_ray=0)
print(f"\nplanned {len(cert.moves)} moves; final configuration:", sorted(cert.final.occupied))
print("independent verifier says:", verify_certificate(cert))

with open("cert_demo.json", "w", encoding="utf-8") as fh:
    fh.write(cert.to_json() + "\n")
print("certificate written to cert_demo.json "
      "(check it with: sim ergodicity verify cert_demo.json)")
