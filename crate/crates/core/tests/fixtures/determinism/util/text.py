from io.reader import make_reader, Reader
from services.billing import make_billing, Billing

class Text:
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


def make_text(label):
    obj = Text(label)
    obj.push({"k": 1})
    return obj


def combine_text(a, b):
    merged = {}
    merged[a] = b
    return merged

dep_reader = make_reader("text")
dep_reader_text = dep_reader.describe()
dep_billing = make_billing("text")
dep_billing_text = dep_billing.describe()
local_text = make_text("text")
pairs_text = combine_text("text", {"k": 1})
