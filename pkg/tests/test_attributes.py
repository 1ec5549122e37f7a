import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import REFERENCE_GRAPHS, attributed_isomorphic
from placeweave.attributes import (
    SECTORS,
    AttributedMotifKey,
    attributed_census,
    canonical_key,
    category_frequency,
    sector_by_id,
    to_sector,
)
from placeweave.errors import MissingPoiError, UnknownSectorError
from placeweave.ingest import PoiCatalog, PoiRecord
from placeweave.motifs import MotifClass, instance_from_edges

ALL_PREFIXES = {
    "11", "21", "22", "23", "31", "32", "33", "42", "44", "45", "48", "49",
    "51", "52", "53", "54", "55", "56", "61", "62", "71", "72", "81", "92",
}


def catalog_for(labels_by_node: dict[str, int]) -> PoiCatalog:
    records = []
    for node, sector_id in labels_by_node.items():
        prefix = sorted(sector_by_id(sector_id).prefixes)[0]
        records.append(PoiRecord(node, node, 0.0, 0.0, prefix + "00"))
    return PoiCatalog(records)


def make_instance(cls: MotifClass, node_names: list[str]):
    n, ref_edges = REFERENCE_GRAPHS[cls]
    edges = [(node_names[a], node_names[b]) for a, b in ref_edges]
    inst = instance_from_edges(node_names[:n], edges)
    assert inst.motif_class is cls
    return inst


# -- sector mapping -----------------------------------------------------------


def test_food_services_code():
    assert to_sector("7225").id == 18
    assert to_sector("7225").label == "Accommodation and Food Services"


def test_manufacturing_group():
    assert to_sector("3254").label == "Manufacturing"
    assert to_sector("3254").id == 5


def test_unknown_prefix_errors():
    with pytest.raises(UnknownSectorError):
        to_sector("99")
    with pytest.raises(UnknownSectorError):
        to_sector("9")


def test_sectors_partition_known_prefixes():
    assert len(SECTORS) == 20
    covered = set()
    for sector in SECTORS:
        assert not (covered & sector.prefixes)
        covered |= sector.prefixes
    assert covered == ALL_PREFIXES
    for prefix in ALL_PREFIXES:
        assert prefix in to_sector(prefix + "11").prefixes
    for bad in ("00", "10", "99", "30", "47"):
        with pytest.raises(UnknownSectorError):
            to_sector(bad)


def test_retail_groups_44_and_45():
    assert to_sector("4411").id == to_sector("4539").id == 7
    assert to_sector("4811").id == to_sector("4931").id == 8


# -- category frequency -------------------------------------------------------


def test_all_retail_flows_share_one():
    catalog = catalog_for({"r1": 7, "r2": 7})
    ranked, unresolved = category_frequency([("r1", "r2")], catalog)
    assert ranked == [("Retail Trade", 1.0)]
    assert unresolved == 0


def test_category_shares_sum_to_one():
    catalog = catalog_for({"a": 7, "b": 18, "c": 16, "d": 19})
    flows = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")]
    for digits in (2, 4):
        ranked, _ = category_frequency(flows, catalog, digits=digits)
        assert abs(sum(share for _, share in ranked) - 1.0) < 1e-12


def test_category_frequency_counts_unresolved():
    catalog = catalog_for({"a": 7})
    ranked, unresolved = category_frequency([("a", "ghost")], catalog)
    assert unresolved == 1
    assert ranked == [("Retail Trade", 1.0)]


def test_category_frequency_four_digit_uses_code_with_name_fallback():
    catalog = PoiCatalog([PoiRecord("a", "a", 0, 0, "722511"), PoiRecord("b", "b", 0, 0, "4411")])
    ranked, _ = category_frequency([("a", "b")], catalog, digits=4)
    assert dict(ranked) == {"7225": 0.5, "4411": 0.5}
    named, _ = category_frequency(
        [("a", "b")], catalog, digits=4, names={"7225": "Restaurants and Other Eating Places"}
    )
    assert dict(named) == {"Restaurants and Other Eating Places": 0.5, "4411": 0.5}


def test_category_frequency_ranks_by_share_then_label():
    catalog = catalog_for({"a": 7, "b": 18, "c": 18})
    ranked, _ = category_frequency([("a", "b"), ("b", "c"), ("c", "a")], catalog)
    assert ranked[0][0] == "Accommodation and Food Services"
    assert ranked[0][1] == pytest.approx(4 / 6)


# -- canonical keys -----------------------------------------------------------


def test_edge_key_symmetric():
    cat = catalog_for({"x": 7, "y": 18})
    a = canonical_key(make_instance(MotifClass.M2_1, ["x", "y"]), cat)
    b = canonical_key(make_instance(MotifClass.M2_1, ["y", "x"]), cat)
    assert a == b == AttributedMotifKey(MotifClass.M2_1, (7, 18))


def test_chain_endpoint_swap():
    # center retail, endpoints food / health in either order
    cat = catalog_for({"e1": 18, "c": 7, "e2": 16})
    a = canonical_key(make_instance(MotifClass.M3_1, ["e1", "c", "e2"]), cat)
    b = canonical_key(make_instance(MotifClass.M3_1, ["e2", "c", "e1"]), cat)
    assert a == b
    assert a.labels == (16, 7, 18)  # endpoints sorted around the center


def test_ring_alternating_labels_identical():
    # cycle labeled A,B,A,B equals B,A,B,A after dihedral reduction
    cat = catalog_for({"n0": 7, "n1": 18, "n2": 7, "n3": 18})
    a = canonical_key(make_instance(MotifClass.M4_3, ["n0", "n1", "n2", "n3"]), cat)
    b = canonical_key(make_instance(MotifClass.M4_3, ["n1", "n2", "n3", "n0"]), cat)
    assert a == b
    # brute-force dihedral minimum over the labeled ring
    ring = (7, 18, 7, 18)
    variants = []
    for direction in (ring, ring[::-1]):
        for shift in range(4):
            variants.append(direction[shift:] + direction[:shift])
    assert a.labels == min(variants)


def test_missing_poi_rejected():
    cat = catalog_for({"x": 7})
    with pytest.raises(MissingPoiError):
        canonical_key(make_instance(MotifClass.M2_1, ["x", "ghost"]), cat)


ALPHABET = (7, 16, 18)


@pytest.mark.parametrize("cls", list(REFERENCE_GRAPHS))
def test_canonical_key_equals_attributed_isomorphism(cls):
    """Exhaustive: keys coincide exactly when a label-preserving
    automorphism exists, for every labeling over a 3-symbol alphabet."""
    n, _ = REFERENCE_GRAPHS[cls]
    nodes = [f"v{i}" for i in range(n)]
    assignments = list(itertools.product(ALPHABET, repeat=n))
    keys = {}
    for labels in assignments:
        cat = catalog_for(dict(zip(nodes, labels)))
        keys[labels] = canonical_key(make_instance(cls, nodes), cat)
    for la, lb in itertools.product(assignments, repeat=2):
        same_key = keys[la] == keys[lb]
        assert same_key == attributed_isomorphic(cls, la, lb), (cls, la, lb)


@settings(max_examples=40)
@given(st.permutations(list(range(4))), st.tuples(*[st.sampled_from(ALPHABET)] * 4))
def test_canonical_key_invariant_under_node_ids(perm, labels):
    """Renaming nodes (hence reordering the node list) never changes the key."""
    for cls in (MotifClass.M4_2, MotifClass.M4_3, MotifClass.M4_5, MotifClass.M4_6):
        plain = [f"v{i}" for i in range(4)]
        renamed = [f"w{perm[i]}" for i in range(4)]
        cat_a = catalog_for(dict(zip(plain, labels)))
        cat_b = catalog_for(dict(zip(renamed, labels)))
        a = canonical_key(make_instance(cls, plain), cat_a)
        b = canonical_key(make_instance(cls, renamed), cat_b)
        assert a == b


# -- attributed census --------------------------------------------------------


def test_single_instance_census():
    cat = catalog_for({"x": 7, "y": 18})
    inst = make_instance(MotifClass.M2_1, ["x", "y"])
    ranked = attributed_census({inst: 3}, cat)
    [entry] = ranked[MotifClass.M2_1]
    assert entry.share == 1.0
    assert entry.device_count == 3
    assert not entry.same_category


def test_same_category_flagged():
    cat = catalog_for({"x": 7, "y": 7})
    inst = make_instance(MotifClass.M2_1, ["x", "y"])
    [entry] = attributed_census({inst: 1}, cat)[MotifClass.M2_1]
    assert entry.same_category
    assert entry.key.labels == (7, 7)


def test_planted_mix_shares_recovered():
    # three edge lifestyles planted 50/30/20 over 10000 device-days
    cat = catalog_for({"r1": 7, "r2": 7, "f1": 18, "h1": 16})
    instances = [
        make_instance(MotifClass.M2_1, ["r1", "r2"]),
        make_instance(MotifClass.M2_1, ["r1", "f1"]),
        make_instance(MotifClass.M2_1, ["h1", "f1"]),
    ]
    rng = np.random.default_rng(77)
    counts = rng.multinomial(10_000, [0.5, 0.3, 0.2])
    ranked = attributed_census(dict(zip(instances, (int(c) for c in counts))), cat)
    shares = {entry.key: entry.share for entry in ranked[MotifClass.M2_1]}
    keys = [canonical_key(inst, cat) for inst in instances]
    for key, target in zip(keys, (0.5, 0.3, 0.2)):
        assert abs(shares[key] - target) <= 0.02


def test_top_k_and_tie_break():
    cat = catalog_for({"a": 7, "b": 18, "c": 16, "d": 19})
    insts = {
        make_instance(MotifClass.M2_1, ["a", "b"]): 2,
        make_instance(MotifClass.M2_1, ["a", "c"]): 2,
        make_instance(MotifClass.M2_1, ["a", "d"]): 1,
    }
    ranked = attributed_census(insts, cat, top_k=2)[MotifClass.M2_1]
    assert len(ranked) == 2
    # equal shares tie-break on label sequence
    assert ranked[0].key.labels < ranked[1].key.labels


def test_empty_census_rejected():
    with pytest.raises(ValueError):
        attributed_census({}, catalog_for({"a": 7}))
