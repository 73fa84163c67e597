from models.user import make_user, User
from core.engine import make_engine, Engine

class Search:
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


def make_search(label):
    obj = Search(label)
    obj.push(1.5)
    return obj


def combine_search(a, b):
    merged = {}
    merged[a] = b
    return merged

dep_user = make_user("search")
dep_user_text = dep_user.describe()
dep_engine = make_engine("search")
dep_engine_text = dep_engine.describe()
local_search = make_search("search")
pairs_search = combine_search("search", 1.5)
