import A


def helper_from_B():
    return 1


def twice(n):
    return n * 2


def peek():
    return A.x
