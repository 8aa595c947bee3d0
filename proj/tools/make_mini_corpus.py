#!/usr/bin/env python3
"""Regenerates data/mini_corpus.jsonl, a small synthetic award-style corpus.

Output is deterministic for a given seed. Most descriptions open with a
problem sentence followed by the solution; the rest open with the product.
"""

import argparse
import json
import random

CATEGORIES = {
    "Personal Hygiene": {
        "users": ["travellers", "office workers", "elderly users", "parents", "hospital visitors", "students"],
        "problems": [
            "sharing public toilets raises the risk of skin infection and bacteria",
            "washing hands without running water is difficult in remote areas",
            "cleaning a toothbrush properly is time-consuming and often skipped",
            "bathroom surfaces collect germs that are hard to avoid",
            "a lack of private washing space makes daily care stressful",
        ],
        "objects": ["toilet seat", "hand wash station", "toothbrush holder", "soap dispenser", "shower unit"],
        "features": [
            "an ultraviolet lamp disinfects the surface after every use",
            "a sensor releases a measured dose of soap without any touch",
            "the antimicrobial ceramic body is easy to wipe clean",
            "a small water tank recycles grey water for flushing",
            "the seat lifts automatically when the user approaches",
        ],
    },
    "Life Science": {
        "users": ["doctors", "nurses", "lab technicians", "children", "patients", "researchers"],
        "problems": [
            "current heart monitoring uses many wires and is stressful for children",
            "taking blood samples is time-consuming and causes anxiety",
            "laboratory pipetting is repetitive and carries a risk of error",
            "patients often lack a simple way to track their vital signs at home",
            "sterilising instruments between tests is difficult in small clinics",
        ],
        "objects": ["sensor patch", "sample analyser", "pipette system", "diagnostic tablet", "monitoring band"],
        "features": [
            "data is sent to a tablet via bluetooth in real time",
            "a light ring shows the test status at a glance",
            "the spiral coil attaches to the skin without adhesive",
            "disposable tips click into place with one hand",
            "the device runs for a week on a single charge",
        ],
    },
    "Furniture": {
        "users": ["families", "students", "office workers", "small apartment owners", "cafe owners"],
        "problems": [
            "small apartments lack space for a proper dining table",
            "sitting for long hours causes back problems for office workers",
            "moving heavy furniture is difficult and risks damage to floors",
            "assembling flat pack furniture is time-consuming and frustrating",
            "stacking chairs often scratch each other and the wall",
        ],
        "objects": ["folding table", "modular shelf", "stacking chair", "sit stand desk", "storage bench"],
        "features": [
            "the top folds flat against the wall when not in use",
            "hidden castors let one person move it across the room",
            "tool free joints click together in minutes",
            "a gas spring raises the surface to standing height",
            "soft felt pads protect the floor and the frame",
        ],
    },
    "Lighting": {
        "users": ["campers", "readers", "night shift workers", "children", "architects"],
        "problems": [
            "harsh ceiling light makes reading at night tiring for the eyes",
            "outdoor lamps lack power when there is no socket nearby",
            "changing light bulbs at height carries a risk of falling",
            "children are often afraid of complete darkness at bedtime",
            "however bright, most desk lamps cast hard shadows on the work surface",
        ],
        "objects": ["desk lamp", "solar lantern", "night light", "pendant lamp", "wall light"],
        "features": [
            "the colour temperature shifts gently from day to evening",
            "a folding solar panel charges the battery during the day",
            "the shade is made of recycled paper pulp",
            "a touch ring on the base dims the light smoothly",
            "magnets hold the lamp head at any angle",
        ],
    },
    "Kitchen": {
        "users": ["home cooks", "chefs", "students", "elderly users", "busy parents"],
        "problems": [
            "chopping vegetables is time-consuming and risks cutting fingers",
            "food waste is a growing concern in every household",
            "small kitchens lack counter space for appliances",
            "cleaning blenders by hand is difficult and unhygienic",
            "boiling water wastes energy when the kettle is overfilled",
        ],
        "objects": ["kettle", "cutting board", "compost bin", "blender", "spice rack"],
        "features": [
            "a scale in the base shows exactly how much water is needed",
            "the blade guard retracts only when the lid is locked",
            "a charcoal filter keeps odours inside the bin",
            "the jug rinses itself with a short pulse of warm water",
            "nesting bowls stack inside the main unit",
        ],
    },
    "Mobility": {
        "users": ["commuters", "wheelchair users", "cyclists", "delivery riders", "tourists"],
        "problems": [
            "carrying a bicycle on public transport is difficult during rush hour",
            "wheelchair users face the risk of tipping on steep ramps",
            "last mile travel is a major issue in crowded cities",
            "charging electric scooters is time-consuming for shared fleets",
            "riding at night carries a risk of not being seen by drivers",
        ],
        "objects": ["folding bicycle", "wheelchair", "electric scooter", "cargo trailer", "helmet"],
        "features": [
            "the frame folds in three steps to the size of a suitcase",
            "a swappable battery slides out from under the deck",
            "integrated lights project the riding lane onto the road",
            "anti tip wheels deploy automatically on slopes",
            "the carbon frame weighs less than ten kilograms",
        ],
    },
    "Medical Devices": {
        "users": ["patients", "surgeons", "carers", "diabetics", "physiotherapists"],
        "problems": [
            "daily insulin injections are painful and stressful for children",
            "hospital beds are difficult to move through narrow corridors",
            "rehabilitation exercises at home lack feedback and motivation",
            "reading small dosage marks is difficult for elderly patients",
            "surgical lights cast shadows that risk hiding details",
        ],
        "objects": ["insulin pen", "hospital bed", "rehabilitation glove", "dosage dispenser", "surgical light"],
        "features": [
            "a large dial clicks at every unit so the dose can be felt",
            "sensors in the fingers report progress to a phone app",
            "the bed base steers with a single handle",
            "multiple light heads overlap to remove shadows",
            "a hidden needle reduces fear before the injection",
        ],
    },
    "Sports": {
        "users": ["runners", "swimmers", "climbers", "amateur players", "coaches"],
        "problems": [
            "runners often lack accurate feedback on their stride",
            "carrying water on long runs is a common concern",
            "climbing ropes wear out without visible warning and risk failure",
            "swimming goggles fog up and make lane lines difficult to see",
            "training alone at night carries a risk of injury",
        ],
        "objects": ["running shoe", "water belt", "climbing rope", "swim goggles", "training cone"],
        "features": [
            "a thin pressure sole measures every step",
            "the bottle flattens as it empties so it never bounces",
            "a coloured core shows through when the sheath wears thin",
            "an anti fog coating is renewed with a drop of water",
            "reflective panels glow in car headlights",
        ],
    },
    "Office": {
        "users": ["office workers", "designers", "teachers", "remote workers", "receptionists"],
        "problems": [
            "tangled cables under desks are a common safety issue",
            "open plan offices lack quiet space for phone calls",
            "sharing whiteboards during video calls is difficult",
            "paper filing is time-consuming and wastes space",
            "long typing sessions raise the risk of wrist strain",
        ],
        "objects": ["cable tray", "phone booth", "digital whiteboard", "filing cabinet", "keyboard"],
        "features": [
            "acoustic felt panels absorb most of the outside noise",
            "a camera in the frame streams the board to remote colleagues",
            "the split layout keeps the wrists straight",
            "power runs through tracks in the desk surface",
            "drawers open with a light push and close silently",
        ],
    },
    "Outdoor": {
        "users": ["hikers", "campers", "gardeners", "families", "fishermen"],
        "problems": [
            "pitching a tent in strong wind is difficult for one person",
            "watering plants during holidays is a recurring concern",
            "carrying heavy cooking gear makes hiking stressful",
            "garden tools left outside rust and become a risk",
            "campfires carry a risk of spreading in dry weather",
        ],
        "objects": ["tent", "watering system", "camping stove", "tool shed", "fire pit"],
        "features": [
            "inflatable beams raise the shelter in under a minute",
            "a clay cone releases water slowly into the soil",
            "the stove nests inside its own pot",
            "a steel mesh screen stops sparks from escaping",
            "wall hooks keep every tool dry and visible",
        ],
    },
    "Children": {
        "users": ["toddlers", "parents", "teachers", "babies", "young readers"],
        "problems": [
            "bath time is stressful when water temperature is hard to judge",
            "strollers are difficult to fold while holding a child",
            "small toys are a choking risk for babies",
            "children lack a safe way to learn to cook",
            "carrying school bags causes back problems",
        ],
        "objects": ["bath tub", "stroller", "toy set", "learning tower", "school bag"],
        "features": [
            "a colour strip changes when the water is too hot",
            "the stroller folds with one hand in a single motion",
            "all parts are too large to swallow",
            "a guard rail lets the child stand safely at counter height",
            "straps spread the load across the hips",
        ],
    },
    "Audio": {
        "users": ["musicians", "commuters", "podcasters", "gamers", "music lovers"],
        "problems": [
            "wearing headphones for hours is uncomfortable and risks hearing damage",
            "recording clean sound at home is difficult without a studio",
            "portable speakers lack bass at low volume",
            "tangled earphone cables are a daily annoyance",
            "noisy trains make listening at safe volume difficult",
        ],
        "objects": ["headphones", "microphone", "portable speaker", "earbuds", "audio interface"],
        "features": [
            "the ear cushions cool the skin with a gel layer",
            "active noise cancelling keeps the volume low",
            "a folding acoustic shield blocks room echo",
            "the charging case doubles as a stand",
            "a passive radiator adds depth to the sound",
        ],
    },
}

NAMES = [
    "Clean Seat", "Aura", "Flow", "Nimbus", "Pivot", "Loop", "Fold", "Halo", "Drift", "Kite", "Echo", "Sprout",
    "Nest", "Orbit", "Pulse", "Ripple", "Shell", "Tide", "Vela", "Wisp", "Arc", "Bloom", "Cove", "Dune",
]

OPENERS = [
    "One of the most common concerns is that {problem}.",
    "For many {users}, {problem}.",
    "The problem: {problem}.",
    "It is a well known issue that {problem}.",
    "However good existing products are, {problem}.",
]

SOLUTIONS = [
    "{name} is a {object} that solves this problem for {users}.",
    "To deal with this, {name} offers a new {object} designed for {users}.",
    "{name} provides a simple solution: a {object} that {users} can use every day.",
    "This {object} called {name} was developed to make life easier for {users}.",
]

PLAIN_OPENERS = [
    "{name} is a {object} for {users}.",
    "Designed for {users}, {name} is a compact {object}.",
    "{name} rethinks the {object} with a clear and friendly form.",
]

CLOSERS = [
    "The form is simple and the materials are durable.",
    "It is made of recycled materials and can be fully disassembled.",
    "The design stays quiet, light and easy to clean.",
    "Soft colours help it blend into any home.",
    "Every part can be replaced, which extends the product life.",
    "The product is easy to use and requires no instructions.",
]


def sentence(text):
    return text[0].upper() + text[1:]


def make_record(rng, idx):
    category = rng.choice(sorted(CATEGORIES))
    spec = CATEGORIES[category]
    name = rng.choice(NAMES)
    fill = {
        "name": name,
        "users": rng.choice(spec["users"]),
        "object": rng.choice(spec["objects"]),
        "problem": rng.choice(spec["problems"]),
    }
    features = rng.sample(spec["features"], 2)
    problem_first = rng.random() < 0.75
    parts = []
    if problem_first:
        parts.append(sentence(rng.choice(OPENERS).format(**fill)))
        parts.append(sentence(rng.choice(SOLUTIONS).format(**fill)))
    else:
        parts.append(sentence(rng.choice(PLAIN_OPENERS).format(**fill)))
    parts.append(sentence(features[0]) + ", and " + features[1] + ".")
    parts.append(rng.choice(CLOSERS))
    record = {
        "id": f"mc-{idx:04d}",
        "category": category,
        "title": f"{name} {fill['object'].title()}",
        "description": " ".join(parts),
    }
    if rng.random() < 0.9:
        record["year"] = rng.randrange(2012, 2022)
    record["kind"] = "concept" if rng.random() < 0.3 else "product"
    if rng.random() < 0.5:
        record["source_url"] = f"https://example.org/designs/{idx:04d}"
    if rng.random() < 0.1:
        del record["title"]
    return record


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20221)
    ap.add_argument("--out", default="data/mini_corpus.jsonl")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        for i in range(1, args.count + 1):
            f.write(json.dumps(make_record(rng, i), ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
