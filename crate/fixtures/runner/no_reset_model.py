class Broken:
    def step(self, en):
        return {"count": 0}
