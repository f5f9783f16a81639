import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlist_sentinel.dataset import (
    Dataset,
    balance,
    balance_from_counts,
    combine,
    holdout_size,
    parse_csv,
    read_csv,
    split,
    write_csv,
    write_split_manifest,
)
from netlist_sentinel.featex import NON_TROJAN, TROJAN, FeatureVector, NetRecord, Origin


def rec(i, label=NON_TROJAN, part="P", version="T1"):
    return NetRecord(Origin(part, version, i + 1, "NAND2X1", f"U{i}.QN"), FeatureVector(i % 7, 1, 2, 3, i % 5), label)


def make(n, trojans=0, part="P"):
    return Dataset(tuple(rec(i, TROJAN if i < trojans else NON_TROJAN, part) for i in range(n)))


def test_split_sizes():
    sp = split(make(10), 0.2, seed=7)
    assert (len(sp.test), len(sp.train)) == (2, 8)
    assert not {r.key for r in sp.test} & {r.key for r in sp.train}


def test_split_deterministic_and_order_independent():
    ds = make(50, 5)
    shuffled = list(ds.records)
    random.Random(1).shuffle(shuffled)
    a = split(ds, 0.2, 3)
    b = split(Dataset(tuple(shuffled)), 0.2, 3)
    assert a.test_keys == b.test_keys
    assert split(ds, 0.2, 4).test_keys != a.test_keys


def test_holdout_rounding():
    assert holdout_size(52737, 0.2) == 10547
    assert holdout_size(52737 - 10547, 0.2) == 8438
    assert holdout_size(5, 0.5) == 3


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1])
def test_split_fraction_bounds(fraction):
    with pytest.raises(ValueError):
        split(make(4), fraction)


def test_split_empty():
    with pytest.raises(ValueError):
        split(Dataset(()), 0.2)


def test_balance():
    assert balance_from_counts(42190, 160) == pytest.approx(263.6875)
    assert round(balance_from_counts(42190, 160), 1) == 263.7
    assert balance(make(200, 100), TROJAN) == 1.0
    assert balance(make(10, 2), NON_TROJAN) == 1.0
    with pytest.raises(ValueError):
        balance(make(5), TROJAN)


def test_duplicate_keys_rejected():
    with pytest.raises(ValueError):
        Dataset((rec(1), rec(1)))


def test_combine_keeps_parts_apart():
    ds = combine([make(3, part="A"), make(3, part="B")])
    assert len(ds) == 6


def test_csv_round_trip(tmp_path):
    ds = make(12, 3)
    path = tmp_path / "f.csv"
    text = write_csv(ds.records, path)
    assert text.splitlines()[0] == "part,version,line,name,net,LGFi,FFi,FFo,PI,PO,class"
    back = read_csv(path)
    assert back.records == ds.records


@pytest.mark.parametrize("body", [
    "a,b\n",
    "part,version,line,name,net,LGFi,FFi,FFo,PI,PO,class\nP,T,1,X,U1.Q,1,2,3,4\n",
    "part,version,line,name,net,LGFi,FFi,FFo,PI,PO,class\nP,T,1,X,U1.Q,1,2,3,4,5,7\n",
    "part,version,line,name,net,LGFi,FFi,FFo,PI,PO,class\nP,T,x,X,U1.Q,1,2,3,4,5,0\n",
])
def test_csv_schema_errors(body):
    with pytest.raises(ValueError):
        parse_csv(body)


def test_split_manifest(tmp_path):
    sp = split(make(10, 2), 0.3, 1)
    write_split_manifest(sp, tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["seed"] == 1 and doc["test_fraction"] == 0.3
    assert len(doc["test_keys"]) == 3


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 300), fraction=st.floats(0.01, 0.99), seed=st.integers(0, 10**6))
def test_split_partition_invariants(n, fraction, seed):
    ds = make(n)
    sp = split(ds, fraction, seed)
    assert len(sp.test) == holdout_size(n, fraction)
    assert len(sp.train) + len(sp.test) == n
    assert {r.key for r in sp.train} | {r.key for r in sp.test} == {r.key for r in ds}


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 64), st.integers(0, 64), st.integers(0, 1),
                          st.text("abcXYZ_-", min_size=1, max_size=6)), min_size=1, max_size=30))
def test_csv_round_trip_property(rows):
    recs = tuple(
        NetRecord(Origin(name, "v,1", i + 1, "INV\"X1", f"U{i}.Z"), FeatureVector(a, b, a, b, a), lab)
        for i, (a, b, lab, name) in enumerate(rows)
    )
    assert parse_csv(write_csv(recs)).records == recs
