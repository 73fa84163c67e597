from typing import Dict, List, Optional, Set


class Book:
    def __init__(self, isbn: str, title: str, author: str, year: int):
        self.isbn = isbn
        self.title = title
        self.author = author
        self.year = year
        self.copies = 1
        self.subjects: Set[str] = set()

    def label(self) -> str:
        return "%s (%d)" % (self.title, self.year)


class Member:
    def __init__(self, member_id: int, name: str):
        self.member_id = member_id
        self.name = name
        self.borrowed: List[Book] = []
        self.fines = 0.0

    def can_borrow(self, limit: int = 3) -> bool:
        return len(self.borrowed) < limit and self.fines < 10


class Catalog:
    def __init__(self):
        self.books: Dict[str, Book] = {}
        self.members: Dict[int, Member] = {}
        self.next_id = 1

    def add_book(self, book: Book) -> None:
        if book.isbn in self.books:
            self.books[book.isbn].copies += 1
        else:
            self.books[book.isbn] = book

    def register(self, name: str) -> Member:
        member = Member(self.next_id, name)
        self.members[member.member_id] = member
        self.next_id += 1
        return member

    def search(self, text: str) -> List[Book]:
        needle = text.lower()
        return [b for b in self.books.values() if needle in b.title.lower() or needle in b.author.lower()]

    def by_author(self) -> Dict[str, List[str]]:
        out = {}
        for book in self.books.values():
            out.setdefault(book.author, []).append(book.title)
        return out

    def checkout(self, member_id: int, isbn: str) -> bool:
        member = self.members.get(member_id)
        book = self.books.get(isbn)
        if member is None or book is None or book.copies == 0:
            return False
        if not member.can_borrow():
            return False
        book.copies -= 1
        member.borrowed.append(book)
        return True

    def checkin(self, member_id: int, isbn: str, days_late: int = 0) -> float:
        member = self.members[member_id]
        for book in member.borrowed:
            if book.isbn == isbn:
                member.borrowed.remove(book)
                book.copies += 1
                break
        fine = 0.25 * days_late
        member.fines += fine
        return fine

    def find_member(self, name: str) -> Optional[Member]:
        for m in self.members.values():
            if m.name == name:
                return m
        return None
