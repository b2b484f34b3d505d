#!/usr/bin/env python3
"""Writes the scripted-generator bundles used by the session and CLI tests.

Each bundle is a directory laid out as <task>/attempt<k>.<ext>, one file per
generator response.

usage: make_bundles.py
"""

import json
import os
import random
import shutil

HERE = os.path.dirname(os.path.abspath(__file__))
CORPUS = os.path.join(HERE, "..", "corpus")

COUNTER_OK = """module counter(input clk, input rst, input en, output reg [7:0] count);
  always @(posedge clk) begin
    if (rst)
      count <= 8'd0;
    else if (en)
      count <= count + 8'd1;
  end
endmodule
"""

# Four bits of state behind an 8-bit port.
COUNTER_NARROW4 = """module counter(input clk, input rst, input en, output [7:0] count);
  reg [3:0] c;
  assign count = {4'd0, c};
  always @(posedge clk) begin
    if (rst)
      c <= 4'd0;
    else if (en)
      c <= c + 4'd1;
  end
endmodule
"""

COUNTER_NARROW7 = """module counter(input clk, input rst, input en, output [7:0] count);
  reg [6:0] c;
  assign count = {1'b0, c};
  always @(posedge clk) begin
    if (rst)
      c <= 7'd0;
    else if (en)
      c <= c + 7'd1;
  end
endmodule
"""

# Extra output register: the count shows up one edge late.
COUNTER_DELAYED = """module counter(input clk, input rst, input en, output reg [7:0] count);
  reg [7:0] c;
  always @(posedge clk) begin
    if (rst) begin
      c <= 8'd0;
      count <= 8'd0;
    end else begin
      if (en)
        c <= c + 8'd1;
      count <= c;
    end
  end
endmodule
"""

COUNTER_DOWN = """module counter(input clk, input rst, input en, output reg [7:0] count);
  always @(posedge clk) begin
    if (rst)
      count <= 8'd0;
    else if (en)
      count <= count - 8'd1;
  end
endmodule
"""

COUNTER_NO_ENABLE = """module counter(input clk, input rst, input en, output reg [7:0] count);
  always @(posedge clk) begin
    if (rst)
      count <= 8'd0;
    else
      count <= count + 8'd1;
  end
endmodule
"""


def fence(lang, body):
    return "```%s\n%s```\n" % (lang, body if body.endswith("\n") else body + "\n")


def jfence(obj):
    return fence("json", json.dumps(obj, indent=1))


def write(bundle, task, attempt, ext, text):
    d = os.path.join(HERE, bundle, task)
    os.makedirs(d, exist_ok=True)
    with open(os.path.join(d, "attempt%d.%s" % (attempt, ext)), "w") as f:
        f.write(text)


def rtl_attempts(bundle, designs):
    for k, src in enumerate(designs):
        task = "gen_rtl" if k == 0 else "refine_rtl"
        note = "Here is the design.\n\n" if k == 0 else "Revised after the report.\n\n"
        write(bundle, task, k, "md", note + fence("verilog", src))


COUNTER_VSPEC = {
    "moduleName": "counter",
    "ports": [
        {"name": "rst", "direction": "in", "width": 1, "role": "reset"},
        {"name": "en", "direction": "in", "width": 1},
        {"name": "count", "direction": "out", "width": 8},
    ],
    "functionSummary": "count is the number of cycles with en high since the last reset, modulo 256.",
    "boundaryConditions": [{"portName": "count", "maxWidthBits": 8, "note": "wraps from 255 to 0"}],
}

COUNTER_MODEL = """# native:counter
class CounterModel:
    def __init__(self):
        self.count_reg = 0

    def reset(self):
        self.count_reg = 0

    def step(self, en):
        if en:
            self.count_reg = (self.count_reg + 1) % 256
        return {"count": self.count_reg}
"""

COUNTER_PLAN = {
    "cases": [
        {"name": "count_up", "targets": "increment on every enabled edge", "rationale": "basic counting", "cycles": 20},
        {"name": "hold", "targets": "count holds while en is low", "rationale": "enable gating", "cycles": 16},
        {"name": "wrap", "targets": "wrap from 255 to 0", "rationale": "8-bit boundary", "cycles": 270},
    ]
}


def counter_stimuli():
    hold = [1, 0, 0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 1, 0, 1, 0]
    return {
        "cases": [
            {"name": "count_up", "cycles": [{"en": 1}] * 20},
            {"name": "hold", "cycles": [{"en": e} for e in hold]},
            {"name": "wrap", "cycles": [{"en": 1}] * 270},
        ]
    }


def counter_verification(bundle):
    write(bundle, "gen_verification_spec", 0, "md", jfence(COUNTER_VSPEC))
    write(bundle, "fill_template", 0, "md", fence("python", COUNTER_MODEL))
    write(bundle, "propose_plan", 0, "json", json.dumps(COUNTER_PLAN, indent=1) + "\n")
    write(bundle, "propose_stimuli", 0, "json", json.dumps(counter_stimuli()) + "\n")


CONV_VSPEC = {
    "moduleName": "conv2x2",
    "ports": [
        {"name": "rst", "direction": "in", "width": 1, "role": "reset"},
        {"name": "valid", "direction": "in", "width": 1},
        {"name": "window", "direction": "in", "width": 32},
        {"name": "kernel", "direction": "in", "width": 32},
        {"name": "result", "direction": "out", "width": 18},
        {"name": "ready", "direction": "out", "width": 1},
    ],
    "functionSummary": "This is a convolution function: result = sum over a 2x2 window of "
    "window[i][j] * kernel[i][j], registered when valid is high; ready follows valid by one edge.",
    "boundaryConditions": [
        {"portName": "window", "maxWidthBits": 8, "note": "each pixel is at most 8 bits"},
        {"portName": "kernel", "maxWidthBits": 8, "note": "each weight is at most 8 bits"},
        {"portName": "result", "maxWidthBits": 18, "note": "four 16-bit products"},
    ],
}

CONV_MODEL = """# native:conv2x2
class Conv2x2Model:
    def __init__(self):
        self.result_reg = 0
        self.ready_reg = 0

    def reset(self):
        self.result_reg = 0
        self.ready_reg = 0

    def step(self, valid, window, kernel):
        self.ready_reg = 1 if valid else 0
        if valid:
            w = self.reshape(self.unpack(window), 2, 2)
            k = self.reshape(self.unpack(kernel), 2, 2)
            self.result_reg = self.compute(w, k)
        return {"result": self.result_reg, "ready": self.ready_reg}

    def compute(self, w, k):
        return sum(w[r][c] * k[r][c] for r in range(2) for c in range(2))

    def unpack(self, flat):
        return [(flat >> (8 * i)) & 0xFF for i in range(4)]

    def reshape(self, flat, rows, cols):
        return [flat[r * cols:(r + 1) * cols] for r in range(rows)]
"""

CONV_PLAN = {
    "cases": [
        {"name": "identity_kernel", "targets": "convolution with a one-hot kernel passes the selected pixel",
         "rationale": "various convolution specifications: identity", "cycles": 8},
        {"name": "max_operands", "targets": "all pixels and weights at 255, largest result",
         "rationale": "various convolution specifications: saturation of the 18-bit sum", "cycles": 6},
        {"name": "zero_kernel", "targets": "all-zero weights give zero regardless of pixels",
         "rationale": "various convolution specifications: annihilating kernel", "cycles": 6},
        {"name": "random_windows", "targets": "random windows and kernels",
         "rationale": "various convolution specifications: general case", "cycles": 24},
        {"name": "valid_gaps", "targets": "result holds while valid is low; ready tracks valid",
         "rationale": "handshake", "cycles": 12},
    ]
}


def pack(elems):
    return sum((e & 0xFF) << (8 * i) for i, e in enumerate(elems))


def conv_stimuli():
    rng = random.Random(7)
    ident = []
    for k in range(8):
        w = [rng.getrandbits(8) for _ in range(4)]
        kern = [0, 0, 0, 0]
        kern[k % 4] = 1
        ident.append({"valid": 1, "window": pack(w), "kernel": pack(kern)})
    maxop = [{"valid": 1, "window": pack([255] * 4), "kernel": pack([255] * 4)}] * 6
    zero = [{"valid": 1, "window": pack([rng.getrandbits(8) for _ in range(4)]), "kernel": 0} for _ in range(6)]
    rand = [{"valid": 1, "window": rng.getrandbits(32), "kernel": rng.getrandbits(32)} for _ in range(24)]
    gaps = [{"valid": v, "window": rng.getrandbits(32), "kernel": rng.getrandbits(32)}
            for v in [1, 0, 0, 1, 1, 0, 1, 0, 0, 0, 1, 1]]
    return {"cases": [
        {"name": "identity_kernel", "cycles": ident},
        {"name": "max_operands", "cycles": maxop},
        {"name": "zero_kernel", "cycles": zero},
        {"name": "random_windows", "cycles": rand},
        {"name": "valid_gaps", "cycles": gaps},
    ]}


CONV_MAC_VSPEC = {
    "moduleName": "conv_mac",
    "ports": [
        {"name": "rst", "direction": "in", "width": 1, "role": "reset"},
        {"name": "valid", "direction": "in", "width": 1},
        {"name": "pixel", "direction": "in", "width": 8},
        {"name": "weight", "direction": "in", "width": 8},
        {"name": "result", "direction": "out", "width": 20},
        {"name": "done", "direction": "out", "width": 1},
    ],
    "functionSummary": "This is a convolution function over a 3x3 window streamed one element per "
    "valid cycle in row-major order; after the ninth pair result holds the window sum and done pulses.",
    "boundaryConditions": [
        {"portName": "pixel", "maxWidthBits": 8, "note": "8-bit pixels"},
        {"portName": "weight", "maxWidthBits": 8, "note": "8-bit weights"},
    ],
}

CONV_MAC_MODEL = """# native:conv_mac
class ConvMacModel:
    def __init__(self):
        self.acc = 0
        self.idx = 0
        self.result_reg = 0
        self.done_reg = 0

    def reset(self):
        self.__init__()

    def step(self, valid, pixel, weight):
        self.done_reg = 0
        if valid:
            if self.idx == 8:
                self.result_reg = self.acc + pixel * weight
                self.done_reg = 1
                self.acc, self.idx = 0, 0
            else:
                self.acc += pixel * weight
                self.idx += 1
        return {"result": self.result_reg, "done": self.done_reg}
"""

CONV_MAC_PLAN = {
    "cases": [
        {"name": "box_filter", "targets": "3x3 all-ones kernel over a ramp image",
         "rationale": "various convolution specifications: box blur", "cycles": 18},
        {"name": "edge_kernel", "targets": "3x3 Laplacian-magnitude kernel",
         "rationale": "various convolution specifications: edge detection", "cycles": 18},
        {"name": "overflow_probe", "targets": "generator proposes out-of-range pixels that refinement must wrap",
         "rationale": "8-bit element constraint", "cycles": 9},
    ]
}


def conv_mac_stimuli():
    def stream(image, kernel):
        return [{"valid": 1, "pixel": p, "weight": w} for p, w in zip(image, kernel)]

    ones = [[1, 1, 1], [1, 1, 1], [1, 1, 1]]
    edge = [[0, 1, 0], [1, 4, 1], [0, 1, 0]]
    flat = lambda m: [v for row in m for v in row]
    ramp = [[10 * r + c for c in range(3)] for r in range(3)]
    bright = [[200, 210, 220], [230, 240, 250], [255, 255, 255]]
    wide = [[300, 256, 511], [1, 2, 3], [4, 5, 6]]
    return {"cases": [
        {"name": "box_filter", "cycles": stream(flat(ramp), flat(ones)) + stream(flat(bright), flat(ones))},
        {"name": "edge_kernel", "cycles": stream(flat(ramp), flat(edge)) + stream(flat(bright), flat(edge))},
        {"name": "overflow_probe", "cycles": stream(flat(wide), flat(ones))},
    ]}


def design_source(name):
    with open(os.path.join(CORPUS, name, "design.v")) as f:
        return f.read()


def main():
    for b in ["counter_pass", "counter_ffc", "counter_all_faulty", "conv2x2", "conv_mac"]:
        shutil.rmtree(os.path.join(HERE, b), ignore_errors=True)

    counter_verification("counter_pass")
    rtl_attempts("counter_pass", [COUNTER_OK])

    counter_verification("counter_ffc")
    rtl_attempts("counter_ffc", [COUNTER_NARROW4, COUNTER_DELAYED, COUNTER_OK])

    counter_verification("counter_all_faulty")
    rtl_attempts("counter_all_faulty",
                 [COUNTER_NARROW4, COUNTER_DELAYED, COUNTER_DOWN, COUNTER_NO_ENABLE, COUNTER_NARROW7])

    write("conv2x2", "gen_verification_spec", 0, "md", jfence(CONV_VSPEC))
    write("conv2x2", "fill_template", 0, "md", fence("python", CONV_MODEL))
    write("conv2x2", "propose_plan", 0, "json", json.dumps(CONV_PLAN, indent=1) + "\n")
    write("conv2x2", "propose_stimuli", 0, "json", json.dumps(conv_stimuli()) + "\n")
    rtl_attempts("conv2x2", [design_source("conv2x2")])

    write("conv_mac", "gen_verification_spec", 0, "md", jfence(CONV_MAC_VSPEC))
    write("conv_mac", "fill_template", 0, "md", fence("python", CONV_MAC_MODEL))
    write("conv_mac", "propose_plan", 0, "json", json.dumps(CONV_MAC_PLAN, indent=1) + "\n")
    write("conv_mac", "propose_stimuli", 0, "json", json.dumps(conv_mac_stimuli()) + "\n")
    rtl_attempts("conv_mac", [design_source("conv_mac")])


if __name__ == "__main__":
    main()
