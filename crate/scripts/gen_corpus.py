#!/usr/bin/env python3
"""Regenerates crates/core/data/{tree.json,corpus.txt}."""
import json
import random
from pathlib import Path

TREE = {
    "Location": {
        "City": ["Paris", "London", "Tokyo", "New York", "York", "Berlin", "Rome", "Sydney", "Cairo", "Chicago"],
        "Tourism Location": ["Las Vegas", "Taj Mahal", "Eiffel Tower", "Grand Canyon", "Washington",
                             "Niagara Falls", "Great Wall"],
        "Country": ["France", "Japan", "Brazil", "Canada", "Egypt", "India"],
    },
    "Person": {
        "Named Person": [("Mr Kee", "Mr. Kee"), "Alice", "Bob", ("Dr Smith", "Dr. Smith"), "Maria",
                         "George Washington"],
        "Family": [("children", "child", "kids"), ("grandmother", "grandma"), "uncle", "sister"],
        "Occupation": ["teacher", "doctor", "farmer", "chef", "pilot", "nurse"],
    },
    "Time": {
        "Season": ["spring", "summer", "autumn", "winter"],
        "Holiday": ["Monday", "Friday", "Christmas", "New Year"],
        "Duration": ["many years", "two weeks", "decades"],
        "Moment": ["midnight", "dawn", "noon"],
    },
    "Food": {
        "Fruit": [("apple", "apples"), ("banana", "bananas"), "orange", "mango", "grapes"],
        "Dish": ["soup", "pizza", "sushi", "curry", "dumplings", "pancakes"],
        "Drink": ["coffee", "tea", "lemonade"],
    },
    "Organization": {
        "Company": [("Apple Inc.", "Apple"), "Google", "Toyota", "Boeing"],
        "Institution": ["United Nations", "Red Cross", "Harvard", "NASA"],
        "Team": ["Lakers", "Real Madrid"],
    },
    "Animal": {
        "Pet": [("cat", "cats"), ("dog", "dogs"), "parrot", "hamster", "rabbit"],
        "Wild Animal": ["tiger", "elephant", "eagle", "dolphin", "wolf"],
    },
    "Activity": {
        "Sport": ["football", "tennis", "swimming", "chess", "cycling"],
        "Hobby": ["painting", "gardening", "fishing", "knitting", "photography"],
    },
}

FRAMES = {
    "Location": ["I still remember our trip to {}", "{} was busier than we imagined", "she moved to {} after school",
                 "they spent their savings visiting {}"],
    "Person": ["{} told us an odd story", "I met {} by chance", "{} had never cooked before",
               "we waited for {} outside"],
    "Time": ["everything changed in {}", "{} is when he feels happiest", "I have not slept well since {}",
             "we finished the job by {}"],
    "Food": ["he ordered {} without looking", "{} tastes better at home", "my neighbour sells {}",
             "she hates {}"],
    "Organization": ["{} is hiring again", "I read about {} online", "{} sent a polite reply",
                     "my friend works for {}"],
    "Animal": ["{} stared at me", "the photo shows {} asleep", "we saw {} near the river", "{} ran off"],
    "Activity": ["he took up {} last year", "{} keeps me sane", "we argued about {}", "I am hopeless at {}"],
}

PLAIN = [
    "I am not sure what to say.", "That sounds like a good idea.", "It rained all afternoon.",
    "Can you call me later?", "We should talk about it tomorrow.", "Nothing really happened today.",
    "I laughed so hard I cried.", "Thanks for listening to me.", "Let me think about it.",
    "The meeting ran long again.", "What a strange week it has been.", "I lost my keys twice.",
]

JOINERS = [", and ", ", but ", "; ", " while ", " because "]


def entities():
    out = []
    for concept, subs in TREE.items():
        for sub, leaves in subs.items():
            for leaf in leaves:
                surfaces = list(leaf) if isinstance(leaf, tuple) else [leaf]
                name = surfaces[0].rstrip(".")
                if concept == "Organization" and name == "Apple Inc":
                    name = "Apple"
                out.append({"path": f"{concept}/{sub}/{name}", "surfaces": surfaces})
    return out


def main():
    root = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"
    ents = entities()
    (root / "tree.json").write_text(json.dumps({"version": 1, "nodes": ents}, indent=2, ensure_ascii=False) + "\n")

    rng = random.Random(20240601)
    order = list(range(len(ents)))
    rng.shuffle(order)
    weights = [0.0] * len(ents)
    for rank, i in enumerate(order):
        weights[i] = 1.0 / (rank + 1) ** 0.9
    sizes = [0, 1, 2, 3, 4, 5]
    size_weights = [0.14, 0.44, 0.28, 0.10, 0.035, 0.005]
    lines = []
    for _ in range(6000):
        k = rng.choices(sizes, size_weights)[0]
        if k == 0:
            lines.append(rng.choice(PLAIN))
            continue
        picks = rng.choices(range(len(ents)), weights, k=k)
        clauses = []
        for i in picks:
            concept = ents[i]["path"].split("/")[0]
            surface = ents[i]["surfaces"][0]
            clauses.append(rng.choice(FRAMES[concept]).format(surface))
        text = clauses[0]
        for c in clauses[1:]:
            text += rng.choice(JOINERS) + c
        lines.append(text[0].upper() + text[1:] + ".")
    (root / "corpus.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
