class CounterModel:
    def __init__(self):
        self.count_reg = 0

    def reset(self):
        self.count_reg = 0

    def step(self, en):
        if en:
            self.count_reg += 1
        return {"count": self.count_reg}
