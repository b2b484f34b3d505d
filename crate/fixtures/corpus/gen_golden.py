#!/usr/bin/env python3
"""Regenerates stimuli.json and golden.vcd for every corpus design.

Each design is driven by a generated testbench under Verilator: inputs change
while the clock is low (t = 10k), the rising edge happens at t = 10k + 5.
The golden VCDs are committed so the Rust tests do not need Verilator.

usage: gen_golden.py [--verilator PATH] [design ...]
"""

import argparse
import json
import os
import random
import shutil
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))

# name -> (has_clock, inputs [(name, width, signed)], outputs, cycles, stimulus fn)
DESIGNS = {}


def design(name, clock, inputs, outputs, cycles=48):
    def wrap(fn):
        DESIGNS[name] = (clock, inputs, outputs, cycles, fn)
        return fn
    return wrap


def rnd_port(rng, width, signed=False):
    return rng.getrandbits(width)


@design("counter", True, [("rst", 1, False), ("en", 1, False)], [("count", 8, False)], cycles=300)
def _counter(rng, k):
    if k < 2 or k == 150:
        return {"rst": 1, "en": rng.getrandbits(1)}
    # Long enabled run so the 8-bit count wraps.
    return {"rst": 0, "en": 1 if k < 280 else rng.getrandbits(1)}


@design("shift_reg", True,
        [("rst", 1, False), ("load", 1, False), ("din", 1, False), ("pdata", 8, False)],
        [("q", 8, False), ("sout", 1, False)])
def _shift(rng, k):
    return {"rst": int(k < 2), "load": int(rng.random() < 0.15), "din": rng.getrandbits(1),
            "pdata": rng.getrandbits(8)}


@design("mux4", False,
        [("sel", 2, False), ("a", 8, False), ("b", 8, False), ("c", 8, False), ("d", 8, False)],
        [("y", 8, False)], cycles=32)
def _mux(rng, k):
    return {"sel": rng.getrandbits(2), "a": rng.getrandbits(8), "b": rng.getrandbits(8),
            "c": rng.getrandbits(8), "d": rng.getrandbits(8)}


@design("alu", False, [("op", 3, False), ("a", 8, False), ("b", 8, False)],
        [("y", 8, False), ("carry", 1, False), ("zero", 1, False)], cycles=96)
def _alu(rng, k):
    a = rng.choice([0, 1, 0x7F, 0x80, 0xFF, rng.getrandbits(8)])
    b = rng.choice([0, 1, 0x7F, 0x80, 0xFF, rng.getrandbits(8), a])
    return {"op": k % 8, "a": a, "b": b}


@design("fsm", True, [("rst", 1, False), ("bit_in", 1, False)],
        [("found", 1, False), ("state_out", 3, False)], cycles=64)
def _fsm(rng, k):
    pattern = [1, 0, 1, 1, 0, 1, 1]
    if k < 2:
        return {"rst": 1, "bit_in": 0}
    if 2 <= k < 2 + len(pattern):
        return {"rst": 0, "bit_in": pattern[k - 2]}
    return {"rst": int(k == 40), "bit_in": rng.getrandbits(1)}


@design("conv_mac", True,
        [("rst", 1, False), ("valid", 1, False), ("pixel", 8, False), ("weight", 8, False)],
        [("result", 20, False), ("done", 1, False)], cycles=64)
def _conv(rng, k):
    big = k < 20
    return {"rst": int(k < 2), "valid": int(k < 20 or rng.random() < 0.8),
            "pixel": 255 if big else rng.getrandbits(8), "weight": 255 if big else rng.getrandbits(8)}


@design("conv2x2", True,
        [("rst", 1, False), ("valid", 1, False), ("window", 32, False), ("kernel", 32, False)],
        [("result", 18, False), ("ready", 1, False)])
def _conv2(rng, k):
    full = k in (3, 4, 30)
    return {"rst": int(k < 2 or k == 20), "valid": int(full or rng.random() < 0.7),
            "window": 0xFFFFFFFF if full else rng.getrandbits(32),
            "kernel": 0xFFFFFFFF if full else rng.getrandbits(32)}


@design("signed_acc", True, [("rst", 1, False), ("d", 8, True)],
        [("acc", 12, True), ("neg", 1, False), ("top", 4, False)], cycles=64)
def _sacc(rng, k):
    if k < 2:
        return {"rst": 1, "d": 0}
    # Drift negative, then positive, so the accumulator wraps both ways.
    v = rng.randint(-128, -60) if k < 30 else rng.randint(60, 127)
    return {"rst": 0, "d": v & 0xFF}


@design("async_reg", True,
        [("rst", 1, False), ("en", 1, False), ("d", 8, False)], [("q", 8, False)])
def _areg(rng, k):
    rst = int(k in (0, 17, 18, 33))
    return {"rst": rst, "en": rng.getrandbits(1), "d": rng.getrandbits(8)}


@design("async_n", True,
        [("rst_n", 1, False), ("load", 1, False), ("val", 4, False)],
        [("cnt", 4, False), ("wrap", 1, False)])
def _an(rng, k):
    rst_n = int(k not in (1, 2, 25, 40))
    return {"rst_n": rst_n, "load": int(rng.random() < 0.1), "val": rng.getrandbits(4)}


@design("pipe2", True,
        [("rst", 1, False), ("in_valid", 1, False), ("a", 8, False), ("b", 8, False), ("c", 8, False)],
        [("out_valid", 1, False), ("out", 9, False)])
def _pipe(rng, k):
    return {"rst": int(k < 2), "in_valid": rng.getrandbits(1), "a": rng.getrandbits(8),
            "b": rng.getrandbits(8), "c": rng.getrandbits(8)}


@design("swap", True, [("ld", 1, False), ("da", 4, False), ("db", 4, False)],
        [("a", 4, False), ("b", 4, False)], cycles=32)
def _swap(rng, k):
    return {"ld": int(k == 0 or rng.random() < 0.2), "da": rng.getrandbits(4), "db": rng.getrandbits(4)}


@design("adder_carry", False, [("a", 8, False), ("b", 8, False), ("cin", 1, False)],
        [("sum", 8, False), ("cout", 1, False), ("ovf", 1, False)], cycles=64)
def _add(rng, k):
    return {"a": rng.choice([0x7F, 0x80, 0xFF, rng.getrandbits(8)]),
            "b": rng.choice([0x01, 0x80, 0xFF, rng.getrandbits(8)]), "cin": rng.getrandbits(1)}


@design("lfsr", True, [("seed_en", 1, False), ("seed", 8, False)],
        [("state", 8, False), ("parity", 1, False)], cycles=80)
def _lfsr(rng, k):
    return {"seed_en": int(k == 0 or k == 50), "seed": 0 if k == 50 else rng.getrandbits(8)}


@design("regfile", True,
        [("we", 1, False), ("waddr", 2, False), ("wdata", 8, False), ("raddr", 2, False)],
        [("rdata", 8, False), ("rq", 8, False)])
def _rf(rng, k):
    return {"we": int(rng.random() < 0.5), "waddr": rng.getrandbits(2), "wdata": rng.getrandbits(8),
            "raddr": rng.getrandbits(2)}


@design("prio_enc", False, [("req", 8, False)], [("idx", 3, False), ("valid", 1, False)], cycles=40)
def _prio(rng, k):
    if k < 9:
        return {"req": 0 if k == 8 else 1 << k}
    return {"req": rng.getrandbits(8) >> rng.randint(0, 7)}


@design("shifter", False, [("data", 16, True), ("nib", 2, False), ("amt", 4, False)],
        [("nibble", 4, False), ("sra", 16, True), ("srl", 16, False), ("rot", 16, False)], cycles=48)
def _shifter(rng, k):
    return {"data": rng.choice([0x8000, 0xFFFF, 0x7FFF, rng.getrandbits(16)]),
            "nib": rng.getrandbits(2), "amt": rng.getrandbits(4)}


def decl(kind, name, width, signed):
    s = " signed" if signed else ""
    rng = f" [{width - 1}:0]" if width > 1 else ""
    return f"  {kind}{s}{rng} {name};"


def testbench(name, clock, inputs, outputs, stimuli):
    lines = ["`timescale 1ns/1ns", "module tb;", "  reg clk;"]
    lines += [decl("reg", n, w, s) for n, w, s in inputs]
    lines += [decl("wire", n, w, s) for n, w, s in outputs]
    conns = ([".clk(clk)"] if clock else []) + [f".{n}({n})" for n, _, _ in inputs + outputs]
    lines.append(f"  {name} dut({', '.join(conns)});")
    lines.append("  initial begin")
    lines.append('    $dumpfile("golden.vcd");')
    lines.append("    $dumpvars(0, tb);")
    lines.append("    clk = 1'b0;")
    for n, w, _ in inputs:
        lines.append(f"    {n} = {w}'d0;")
    lines.append("    #10;")
    for cyc in stimuli:
        assigns = " ".join(f"{n} = {w}'d{cyc[n]};" for n, w, _ in inputs)
        lines.append(f"    clk = 1'b0; {assigns} #5 clk = 1'b1; #5;")
    lines.append("    $finish;")
    lines.append("  end")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def build(name, verilator):
    clock, inputs, outputs, cycles, fn = DESIGNS[name]
    rng = random.Random(f"corpus-{name}")
    stimuli = [fn(rng, k) for k in range(cycles)]
    ddir = os.path.join(HERE, name)
    with open(os.path.join(ddir, "stimuli.json"), "w") as f:
        json.dump(stimuli, f, indent=None, separators=(",", ":"))
        f.write("\n")
    manifest = {
        "top": name,
        "clock": "clk" if clock else None,
        "inputs": [{"name": n, "width": w, "signed": s} for n, w, s in inputs],
        "outputs": [{"name": n, "width": w, "signed": s} for n, w, s in outputs],
    }
    with open(os.path.join(ddir, "ports.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    with tempfile.TemporaryDirectory() as tmp:
        tb = os.path.join(tmp, "tb.v")
        with open(tb, "w") as f:
            f.write(testbench(name, clock, inputs, outputs, stimuli))
        cmd = [verilator, "--binary", "--timing", "--trace", "-Wno-fatal", "-Wno-lint", "-Wno-style",
               "--x-initial", "0", "--x-assign", "0", "--top-module", "tb", "-Mdir", os.path.join(tmp, "obj"),
               tb, os.path.join(ddir, "design.v")]
        subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL, stderr=subprocess.PIPE)
        subprocess.run([os.path.join(tmp, "obj", "Vtb")], check=True, cwd=tmp, stdout=subprocess.DEVNULL)
        shutil.copy(os.path.join(tmp, "golden.vcd"), os.path.join(ddir, "golden.vcd"))
    print(f"{name}: {cycles} cycles")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--verilator", default=shutil.which("verilator") or "/root/simenv/bin/verilator-cli")
    ap.add_argument("designs", nargs="*")
    args = ap.parse_args()
    for name in args.designs or sorted(DESIGNS):
        try:
            build(name, args.verilator)
        except subprocess.CalledProcessError as e:
            sys.stderr.write((e.stderr or b"").decode())
            raise


if __name__ == "__main__":
    main()
