"""Question paraphrase pools.

Each template key maps to a fixed list of interchangeable phrasings.  The
variant index is recorded in a QA's provenance as ``<key>.<index>``, so the
pools are versioned: edit by appending, never by reordering.
"""

POOL_VERSION = 1

POOLS: dict[str, list[str]] = {
    "counting": [
        "How many {cat} objects are there in the {medium}?",
        "Count the number of {cat} objects that appear in the {medium}.",
        "What is the total number of {cat} instances shown in the {medium}?",
        "In this {medium}, how many distinct {cat} objects can be seen?",
    ],
    "relative_direction": [
        "{when}, in which direction is the {b} relative to the {a}?",
        "{when}, where is the {b} located with respect to the {a}?",
        "{when}, taking the {a} as the reference, which direction is the {b} in?",
        "{when}, from the {a}, in what direction would you look to find the {b}?",
    ],
    "relative_distance": [
        "{when}, what is the distance between the centers of the {a} and the {b}? Answer in {unit}.",
        "{when}, how far apart are the {a} and the {b}? Give the center-to-center distance in {unit}.",
        "{when}, measure the distance from the {a} to the {b} in {unit}.",
    ],
    "appearance_order": [
        "In what order do these objects first appear in the video: {objects}?",
        "Sort the following objects by when they first show up in the video: {objects}.",
        "Which sequence lists {objects} in the order they first appear in the video?",
    ],
    "object_size.dims": [
        "What is the {dim} of the {a} in meters?",
        "How large is the {a}? Give its {dim} in meters.",
        "Estimate the {dim} of the {a}, in meters.",
    ],
    "object_size.box": [
        "At frame {frame}, what is the {dim} of the {a}'s bounding box as a fraction of the frame {axis}?",
        "At frame {frame}, how much of the frame {axis} does the {a} span? Give its box {dim} as a fraction.",
        "At frame {frame}, estimate the bounding-box {dim} of the {a} relative to the frame {axis}.",
    ],
    "object_size.room": [
        "What is the area of the room in square meters?",
        "How large is this indoor space? Give its floor area in square meters.",
        "Estimate the floor area of the room, in square meters.",
    ],
    "motion_tracking": [
        "Track the {a} from frame {t0} to frame {t1}. Give its bounding box at every annotated frame in that range.",
        "Follow the {a} between frame {t0} and frame {t1} and output its bounding boxes.",
        "Provide the sequence of bounding boxes of the {a} from frame {t0} through frame {t1}.",
    ],
    "localization": [
        "{when}, where is the center of the {a}? Answer as a coordinate tuple{coords}.",
        "{when}, locate the {a} and give its center point{coords}.",
        "{when}, what are the center coordinates of the {a}{coords}?",
    ],
    "displacement": [
        "How far does the {a} travel between frame {t0} and frame {t1}? Answer in {unit}.",
        "What path length does the {a} cover from frame {t0} to frame {t1}, in {unit}?",
        "Between frame {t0} and frame {t1}, what distance does the {a} move? Give the answer in {unit}.",
    ],
}

DIRECTION_LABELS = ("right", "right-up", "up", "left-up", "left", "left-down", "down", "right-down")

UNIT_TEXT = {
    "meters": "meters",
    "square_meters": "square meters",
    "frame_diagonal": "fractions of the frame diagonal",
    "frame_fraction": "fractions of the frame",
    "count": "objects",
}
