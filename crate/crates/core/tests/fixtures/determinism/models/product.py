from core.engine import make_engine, Engine
from models.order import make_order, Order

class Product:
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


def make_product(label):
    obj = Product(label)
    obj.push([1, 2])
    return obj


def combine_product(a, b):
    merged = {}
    merged[a] = b
    return merged

dep_engine = make_engine("product")
dep_engine_text = dep_engine.describe()
dep_order = make_order("product")
dep_order_text = dep_order.describe()
local_product = make_product("product")
pairs_product = combine_product("product", [1, 2])
