#!/usr/bin/env python3
"""Writes shifted_counter.json: a paired counter trace whose DUT side is the
reference delayed by one edge. Two reset cycles lead the case."""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

en = [1, 1, 0, 1, 1, 1, 0, 0, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1]
stim = [{"rst": 1, "en": 0}, {"rst": 1, "en": 0}] + [{"rst": 0, "en": e} for e in en]
ref, count = [None, None], 0
for e in en:
    count = (count + e) % 256
    ref.append({"count": count})
dut = [{"count": 0}, {"count": 0}, {"count": 0}] + [r for r in ref[2:-1]]

trace = {
    "case": "shifted",
    "inputs": ["rst", "en"],
    "outputs": ["count"],
    "latencyOffset": 0,
    "resets": [0, 1],
    "stimuli": stim,
    "dut": dut,
    "ref": ref,
}
with open(os.path.join(HERE, "shifted_counter.json"), "w") as f:
    json.dump(trace, f, indent=1)
    f.write("\n")
