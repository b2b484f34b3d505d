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
            self.result_reg = sum(w[r][c] * k[r][c] for r in range(2) for c in range(2))
        return {"result": self.result_reg, "ready": self.ready_reg}

    def unpack(self, flat):
        return [(flat >> (8 * i)) & 0xFF for i in range(4)]

    def reshape(self, flat, rows, cols):
        return [flat[r * cols:(r + 1) * cols] for r in range(rows)]
