#!/usr/bin/env python3
"""Regenerates citations.train.conll / citations.test.conll.

Planted rule: a Title token is never directly followed by a Date token.
Some venues open with a year ("1999 Workshop on ..."), so a tagger without
the rule is tempted to emit Title -> Date.
"""
import random

rng = random.Random(11)

SURNAMES = ["Smith", "Chen", "Garcia", "Novak", "Okafor", "Larsen", "Ito", "Moreau", "Kumar", "Haddad",
            "Silva", "Brown", "Weber", "Rossi", "Tanaka", "Nguyen"]
INITIALS = ["A.", "B.", "C.", "D.", "J.", "K.", "M.", "R.", "S.", "T."]
TITLE_WORDS = [("learning", "VBG"), ("constraints", "NNS"), ("for", "IN"), ("structured", "JJ"),
               ("prediction", "NN"), ("with", "IN"), ("neural", "JJ"), ("networks", "NNS"), ("a", "DT"),
               ("study", "NN"), ("of", "IN"), ("parsing", "NN"), ("inference", "NN"), ("linear", "JJ"),
               ("models", "NNS"), ("sparse", "JJ"), ("graphs", "NNS"), ("on", "IN"), ("efficient", "JJ"),
               ("search", "NN")]
JOURNALS = [[("Journal", "NNP"), ("of", "IN"), ("Machine", "NNP"), ("Learning", "NNP")],
            [("Computational", "NNP"), ("Linguistics", "NNP")],
            [("Artificial", "NNP"), ("Intelligence", "NNP")],
            [("Proc.", "NNP"), ("ACL", "NNP")],
            [("Neural", "NNP"), ("Computation", "NNP")]]
YEAR_VENUES = [[("Workshop", "NNP"), ("on", "IN"), ("Parsing", "NNP")],
               [("Conference", "NNP"), ("on", "IN"), ("Learning", "NNP")],
               [("Symposium", "NNP"), ("on", "IN"), ("Search", "NNP")]]


def year():
    return str(rng.randint(1985, 2019))


def author():
    out = []
    for i in range(rng.randint(1, 2)):
        if i:
            out.append(("and", "CC"))
        out += [(rng.choice(SURNAMES), "NNP"), (",", ","), (rng.choice(INITIALS), "NNP")]
    return [(t, p, "Author") for t, p in out]


def title():
    words = [rng.choice(TITLE_WORDS) for _ in range(rng.randint(3, 6))]
    words[0] = (words[0][0].capitalize(), words[0][1])
    return [(t, p, "Title") for t, p in words] + [(".", ".", "Title")]


def journal():
    if rng.random() < 0.35:
        venue = [(year(), "CD")] + rng.choice(YEAR_VENUES)
    else:
        venue = list(rng.choice(JOURNALS))
    return [(t, p, "Journal") for t, p in venue]


def volume():
    return [(str(rng.randint(1, 60)), "CD", "Volume")]


def pages():
    a = rng.randint(1, 400)
    return [(f"{a}-{a + rng.randint(5, 30)}", "CD", "Pages")]


def date():
    return [(year(), "CD", "Date")]


FORMATS = [
    lambda: author() + title() + journal() + volume() + pages() + date(),
    lambda: author() + date() + title() + journal() + volume() + pages(),
    lambda: author() + title() + journal() + date() + volume() + pages(),
]


def bigrams(seq):
    return {(a[2], b[2]) for a, b in zip(seq, seq[1:])}


def write(path, corpus):
    with open(path, "w") as f:
        for seq in corpus:
            for tok in seq:
                f.write(" ".join(tok) + "\n")
            f.write("\n")


train = [rng.choice(FORMATS)() for _ in range(48)]
seen = set().union(*(bigrams(s) for s in train))
test = []
while len(test) < 12:
    s = rng.choice(FORMATS)()
    if bigrams(s) <= seen:
        test.append(s)
assert ("Title", "Date") not in seen
write("citations.train.conll", train)
write("citations.test.conll", test)
