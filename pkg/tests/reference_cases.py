"""Published worked examples, kept as plain data for the tests.

Neighbor rows are (distance, key, t, n, w_t, w_n) with the query key first.
"""

import math

# the tables' weights are consistent with this balance, not the rounded 263.7
TABLE_BALANCE = 263.0

CASE_ONE = {
    "query": (8, 1, 3, 2, 3),
    "rows": [
        (0.00, (8, 1, 3, 2, 3), 11, 0, 2893.0, 0.00),
        (1.00, (8, 2, 3, 2, 3), 0, 34, 0.00, 8.50),
        (1.00, (8, 1, 3, 1, 3), 1, 204, 65.75, 51.00),
        (math.sqrt(2), (8, 1, 4, 2, 4), 3, 0, 135.37, 0.00),
    ],
    "sums": (3094.12, 59.50),
    "counts": (15, 238),
    "correspondence": (0.981, 0.019),
    "prediction": 1,
}

CASE_TWO = {
    "query": (3, 3, 5, 3, 5),
    "rows": [
        (0.00, (3, 3, 5, 3, 5), 0, 57, 0.00, 57.00),
        (1.00, (4, 3, 5, 3, 5), 1, 24, 65.75, 6.00),
        (1.00, (2, 3, 5, 3, 5), 0, 104, 0.00, 26.00),
        (2.00, (5, 3, 5, 3, 5), 0, 11, 0.00, 1.22),
    ],
    "sums": (65.75, 90.22),
    "counts": (1, 196),
    "correspondence": (0.422, 0.578),
    "prediction": 0,
}

CASE_THREE = {
    "query": (5, 2, 14, 2, 14),
    "rows": [
        (0.00, (5, 2, 14, 2, 14), 0, 1, 0.00, 1.00),
        (math.sqrt(2), (5, 2, 13, 2, 13), 0, 2, 0.00, 0.34),
        (math.sqrt(3), (4, 2, 13, 2, 13), 7, 0, 246.65, 0.00),
        (math.sqrt(6), (3, 2, 13, 2, 13), 3, 0, 66.31, 0.00),
    ],
    "sums": (312.96, 1.34),
    "counts": (10, 3),
    "correspondence": (0.996, 0.004),
    "prediction": 0,
}

CASES = {"one": CASE_ONE, "two": CASE_TWO, "three": CASE_THREE}

# property id -> feature set, explainability (2 decimals)
PROPERTY_TABLE = {
    1: ("LGFi",), 2: ("FFi",), 3: ("FFo",), 4: ("PI",), 5: ("PO",),
    6: ("LGFi", "FFi"), 7: ("LGFi", "FFo"), 8: ("LGFi", "PI"), 9: ("LGFi", "PO"),
    10: ("FFi", "FFo"), 11: ("FFi", "PI"), 12: ("FFi", "PO"), 13: ("FFo", "PI"),
    14: ("FFo", "PO"), 15: ("PI", "PO"),
    16: ("LGFi", "FFi", "FFo"), 17: ("LGFi", "FFi", "PI"), 18: ("LGFi", "FFi", "PO"),
    19: ("LGFi", "FFo", "PI"), 20: ("LGFi", "FFo", "PO"), 21: ("LGFi", "PI", "PO"),
    22: ("FFi", "FFo", "PI"), 23: ("FFi", "FFo", "PO"), 24: ("FFi", "PI", "PO"),
    25: ("FFo", "PI", "PO"),
    26: ("LGFi", "FFi", "FFo", "PI"), 27: ("LGFi", "FFi", "FFo", "PO"),
    28: ("LGFi", "FFi", "PI", "PO"), 29: ("LGFi", "FFo", "PI", "PO"),
    30: ("FFi", "FFo", "PI", "PO"),
    31: ("LGFi", "FFi", "FFo", "PI", "PO"),
}
PROPERTY_X = {j: {1: 1.00, 2: 0.75, 3: 0.50, 4: 0.25, 5: 0.00}[len(f)] for j, f in PROPERTY_TABLE.items()}

# registered property lists and reported decision explainability
VOTE_EXAMPLES = {
    "one_t": ((31, 28, 26, 29, 27, 30, 21, 18, 16, 19, 24, 17, 22, 25, 15), 0.411),
    "two_t": ((30, 24, 22, 25, 15), 0.500),
    "two_n": ((31, 28, 26, 29, 27, 21, 18, 16, 19, 17), 0.350),
    "three_t": ((28, 26, 21, 18, 16, 20, 24, 22, 15), 0.472),
    "three_n": ((31, 29, 27, 30, 17, 24), 0.291),
}
# the reported 41.1% differs from the unweighted mean of its listed set
ONE_T_MEAN = 0.400

PUBLISHED_COUNTS = (42190, 160)
PUBLISHED_BALANCE = 263.7


def index_entries(case):
    """Training-index entries reproducing the neighbor counts of one case."""
    from netlist_sentinel.casexai import IndexEntry
    from netlist_sentinel.featex import Origin

    entries = {}
    for _, key, t, n, _, _ in case["rows"]:
        entries[key] = IndexEntry(
            [Origin("P", "T1", i + 1, "NAND4X1", f"t{i}.QN") for i in range(t)],
            [Origin("P", "T1", i + 1, "INVX1", f"n{i}.ZN") for i in range(n)],
        )
    return entries
