import csv
from typing import List

from catalog.books import Book, Catalog


def read_books(path: str) -> List[Book]:
    books = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            books.append(Book(row[0], row[1], row[2], int(row[3])))
    return books


def load_catalog(paths: List[str]) -> Catalog:
    catalog = Catalog()
    for path in paths:
        for book in read_books(path):
            catalog.add_book(book)
    return catalog


def overdue_report(catalog: Catalog, min_fine: float) -> List[str]:
    lines = []
    for member in catalog.members.values():
        if member.fines >= min_fine:
            lines.append("%s owes %.2f" % (member.name, member.fines))
    return lines
