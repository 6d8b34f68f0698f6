#!/usr/bin/env python3
"""Regenerates assets/corpus/algebra_sample.json.

The records are synthetic algebra word problems and equations with worked
solutions, in the {problem, solution} array layout the corpus loader reads.
Output is deterministic for a fixed seed.
"""
import json
import random
import sys

COUNT = 222


def linear(rng):
    x = rng.randint(-9, 12)
    a = rng.choice([2, 3, 4, 5, 6, 7, 8, 9])
    b = rng.randint(-20, 20)
    c = a * x + b
    sign = "+" if b >= 0 else "-"
    return (f"Solve for x: {a}x {sign} {abs(b)} = {c}",
            f"Subtract {b} from both sides: {a}x = {c - b}. Divide by {a}: x = {x}.")


def bracket(rng):
    x = rng.randint(-6, 10)
    a = rng.choice([2, 3, 4, 5])
    b = rng.randint(1, 9)
    c = a * (x + b)
    return (f"Solve for y: {a}(y + {b}) = {c}",
            f"Divide both sides by {a}: y + {b} = {c // a}. Subtract {b}: y = {x}.")


def both_sides(rng):
    x = rng.randint(-5, 10)
    a = rng.randint(5, 9)
    c = rng.randint(1, a - 1)
    b = rng.randint(-10, 10)
    d = a * x + b - c * x
    lhs = f"{a}n + {b}" if b >= 0 else f"{a}n - {-b}"
    rhs = f"{c}n + {d}" if d >= 0 else f"{c}n - {-d}"
    return (f"Solve for n: {lhs} = {rhs}",
            f"Move terms: {a - c}n = {d - b}. Divide by {a - c}: n = {x}.")


def fraction(rng):
    a = rng.choice([2, 3, 4, 5, 6])
    x = a * rng.randint(-4, 8)
    b = rng.randint(1, 12)
    c = x // a + b
    return (f"Solve for x: x/{a} + {b} = {c}",
            f"Subtract {b}: x/{a} = {c - b}. Multiply by {a}: x = {x}.")


def ages(rng):
    child = rng.randint(4, 15)
    k = rng.choice([2, 3, 4])
    years = rng.randint(2, 10)
    parent = k * child
    return (f"A parent is {k} times as old as a child. In {years} years their ages will add up to "
            f"{parent + child + 2 * years}. How old is the child now?",
            f"Let c be the child's age: c + {k}c + {2 * years} = {parent + child + 2 * years}, "
            f"so {k + 1}c = {parent + child}, c = {child}.")


def tickets(rng):
    adult = rng.randint(6, 15)
    child_price = rng.randint(2, adult - 1)
    na = rng.randint(3, 20)
    nc = rng.randint(3, 20)
    total = na * adult + nc * child_price
    return (f"Adult tickets cost {adult} dollars and child tickets cost {child_price} dollars. "
            f"{na + nc} tickets were sold for {total} dollars. How many adult tickets were sold?",
            f"Let a be adult tickets: {adult}a + {child_price}({na + nc} - a) = {total}, "
            f"so {adult - child_price}a = {total - child_price * (na + nc)}, a = {na}.")


def system(rng):
    x = rng.randint(-5, 9)
    y = rng.randint(-5, 9)
    return (f"Solve the system: x + y = {x + y}, x - y = {x - y}",
            f"Add the equations: 2x = {2 * x}, so x = {x}. Substitute: y = {x + y} - {x} = {y}.")


def consecutive(rng):
    n = rng.randint(1, 60)
    return (f"The sum of three consecutive integers is {3 * n + 3}. Find the smallest.",
            f"Let k be the smallest: k + (k + 1) + (k + 2) = {3 * n + 3}, so 3k = {3 * n}, k = {n}.")


def perimeter(rng):
    w = rng.randint(2, 20)
    extra = rng.randint(1, 10)
    p = 2 * (w + w + extra)
    return (f"A rectangle is {extra} cm longer than it is wide and its perimeter is {p} cm. "
            f"Find its width.",
            f"Let w be the width: 2(w + w + {extra}) = {p}, so 4w = {p - 2 * extra}, w = {w}.")


GENERATORS = [linear, bracket, both_sides, fraction, ages, tickets, system, consecutive, perimeter]


def main(path):
    rng = random.Random(20240222)
    records = []
    for i in range(COUNT):
        problem, solution = GENERATORS[i % len(GENERATORS)](rng)
        records.append({"problem": problem, "solution": solution})
    with open(path, "w") as f:
        json.dump(records, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "assets/corpus/algebra_sample.json")
