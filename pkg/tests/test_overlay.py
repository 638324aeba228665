import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from prosa_sim.knowledge import Document, TermVector
from prosa_sim.overlay import LinkKind, LinkLabel, OverlayNetwork, read_edge_list

R2 = 1 / math.sqrt(2)


def t(term, w=1.0):
    return TermVector({term: w})


def make_net(n, docs=None):
    net = OverlayNetwork()
    for i in range(n):
        net.add_peer((docs or {}).get(i, []))
    return net


def test_add_peer_sequential_ids_and_knowledge():
    net = OverlayNetwork()
    assert net.add_peer([]) == 0
    assert not net.knowledge(0).vector and net.knowledge(0).doc_count == 0
    assert net.add_peer([]) == 1
    assert net.add_peer([Document(1, t(1))]) == 2
    assert net.knowledge(2).vector == t(1)
    assert net.neighborhood(2) == []


def test_join_clamps_to_available_peers():
    net = make_net(2)
    assert net.join(1, 5, random.Random(0)) == [0]
    assert net.label(1, 0) == LinkLabel.al()
    assert net.edge_count == 1


def test_join_fanout_and_determinism():
    targets = []
    for _ in range(2):
        net = make_net(10)
        targets.append(net.join(9, 3, random.Random(42)))
        hood = net.neighborhood(9)
        assert len(hood) == 3
        assert all(label.kind is LinkKind.AL and label.weight is None for _, label in hood)
        assert 9 not in targets[-1]
    assert targets[0] == targets[1]


def test_join_alone_fails():
    net = make_net(1)
    with pytest.raises(ValueError):
        net.join(0, 3, random.Random(0))


def test_update_link_creates_tsl_towards_forwarder():
    net = make_net(2)
    tr = net.update_link(1, 0, t(1))
    assert (tr.source, tr.target, tr.before) == (1, 0, None)
    assert net.label(1, 0) == LinkLabel.tsl(t(1), 1)
    assert net.label(0, 1) is None


def test_update_link_upgrades_al():
    net = make_net(2)
    net.join(1, 1, random.Random(0))
    net.update_link(1, 0, t(1, 2.0))
    assert net.label(1, 0) == LinkLabel.tsl(t(1), 1)


def test_update_link_folds_into_tsl():
    net = make_net(2)
    net.update_link(1, 0, t(1))
    net.update_link(1, 0, t(2))
    label = net.label(1, 0)
    assert label.kind is LinkKind.TSL and label.seen_count == 2
    assert label.weight[1] == pytest.approx(R2) and label.weight[2] == pytest.approx(R2)


def test_update_link_leaves_fsl_alone():
    net = make_net(2, {0: [Document(0, t(5))]})
    net.promote_to_fsl(1, 0)
    before = net.label(1, 0)
    tr = net.update_link(1, 0, t(1))
    assert not tr.changed
    assert net.label(1, 0) is before


def test_update_link_rejects_self():
    net = make_net(2)
    with pytest.raises(ValueError):
        net.update_link(1, 1, t(1))


def test_promote_to_fsl_cases():
    net = make_net(3, {1: [Document(0, t(1))]})
    net.promote_to_fsl(0, 1)
    assert net.label(0, 1) == LinkLabel.fsl(t(1))

    net.update_link(2, 1, t(3))
    assert net.label(2, 1).kind is LinkKind.TSL
    net.promote_to_fsl(2, 1)
    assert net.label(2, 1).kind is LinkKind.FSL
    assert net.label(1, 2) is None

    net.add_documents(1, [Document(1, t(2))])
    net.promote_to_fsl(0, 1)
    w = net.label(0, 1).weight
    assert w[1] == pytest.approx(R2) and w[2] == pytest.approx(R2)


def test_promote_rejects_self():
    net = make_net(1)
    with pytest.raises(ValueError):
        net.promote_to_fsl(0, 0)


def test_fsl_weight_is_snapshot():
    net = make_net(2, {1: [Document(0, t(1))]})
    net.promote_to_fsl(0, 1)
    net.add_documents(1, [Document(1, t(2))])
    assert net.label(0, 1).weight == t(1)


def test_neighborhood_sorted():
    net = make_net(4)
    net.update_link(0, 3, t(1))
    net.update_link(0, 1, t(1))
    assert [target for target, _ in net.neighborhood(0)] == [1, 3]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=LinkKind.AL, weight=t(1)),
        dict(kind=LinkKind.TSL, weight=t(1, 2.0), seen_count=1),
        dict(kind=LinkKind.TSL, weight=t(1), seen_count=0),
        dict(kind=LinkKind.FSL),
    ],
)
def test_label_invariants(kwargs):
    with pytest.raises(ValueError):
        LinkLabel(**kwargs)


ops = st.lists(
    st.tuples(st.sampled_from(["update", "promote", "docs"]), st.integers(0, 5),
              st.integers(0, 5), st.integers(0, 4)),
    max_size=60,
)


@given(ops, st.integers(0, 2**32))
@settings(max_examples=150)
def test_labels_only_strengthen(sequence, seed):
    net = make_net(6, {i: [Document(i, t(i % 3))] for i in range(0, 6, 2)})
    rng = random.Random(seed)
    for p in range(1, 6):
        net.join(p, 2, rng)

    strength = {(s, tt): label.kind for s, tt, label in net.links()}

    def observe(tr):
        assert tr.source != tr.target
        old = strength.get((tr.source, tr.target))
        if old is not None:
            assert tr.after.kind >= old
        strength[(tr.source, tr.target)] = tr.after.kind

    net.observers.append(observe)
    doc_ids = iter(range(100, 1000))
    for op, a, b, term in sequence:
        if op == "docs":
            net.add_documents(a, [Document(next(doc_ids), t(term))])
        elif a != b:
            if op == "update":
                net.update_link(a, b, t(term))
            else:
                net.promote_to_fsl(a, b)
        net.check_invariants()


def test_edge_list_round_trip(tmp_path):
    net = make_net(5)
    net.join(4, 2, random.Random(1))
    net.update_link(0, 2, t(1))
    net.promote_to_fsl(3, 0)
    path = tmp_path / "edges.txt"
    net.write_edge_list(path)
    n, edges = read_edge_list(path)
    assert n == 5
    assert edges == [(s, tt, label.kind) for s, tt, label in net.links()]
    for line in path.read_text().splitlines()[1:]:
        assert line.split()[2] in {"AL", "TSL", "FSL"}


def test_edge_list_without_header(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("0 3 AL\n3 1 FSL\n")
    assert read_edge_list(path) == (4, [(0, 3, LinkKind.AL), (3, 1, LinkKind.FSL)])
