class FaultyModel:
    def __init__(self):
        self.n = 0

    def reset(self):
        self.n = 0

    def step(self, en):
        self.n += 1
        if self.n == 3:
            raise ValueError("step three is broken")
        return {"count": self.n}
