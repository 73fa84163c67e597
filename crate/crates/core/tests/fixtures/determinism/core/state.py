from core.engine import make_engine, Engine

class State:
    def __init__(self, label, size=0):
        self.label = label
        self.size = size
        self.items = []

    def push(self, value):
        self.items.append(value)
        self.size += 1
        return self.size

    def describe(self):
        return self.label + ":" + str(self.size)


def make_state(label):
    obj = State(label)
    obj.push("x")
    return obj


def combine_state(a, b):
    merged = {}
    merged[a] = b
    return merged

dep_engine = make_engine("state")
dep_engine_text = dep_engine.describe()
local_state = make_state("state")
pairs_state = combine_state("state", "x")
