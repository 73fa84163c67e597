from core.events import make_events, Events
from core.engine import make_engine, Engine

class Reader:
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


def make_reader(label):
    obj = Reader(label)
    obj.push([1, 2])
    return obj


def combine_reader(a, b):
    merged = {}
    merged[a] = b
    return merged

dep_events = make_events("reader")
dep_events_text = dep_events.describe()
dep_engine = make_engine("reader")
dep_engine_text = dep_engine.describe()
local_reader = make_reader("reader")
pairs_reader = combine_reader("reader", [1, 2])
