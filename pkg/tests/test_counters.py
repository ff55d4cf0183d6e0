from slbm.counters import Counters


def test_defaults_zero():
    c = Counters()
    assert all(v == 0 for v in c.as_dict().values())


def test_add_and_copy():
    a = Counters(steps=1, cells_visited=10, pdf_accesses=180, idx_reads=80)
    b = Counters(steps=2, cells_visited=5, values_exchanged=7, messages=3)
    snap = a.copy()
    a.add(b)
    assert a.steps == 3
    assert a.cells_visited == 15
    assert a.pdf_accesses == 180
    assert a.idx_reads == 80
    assert a.values_exchanged == 7
    assert a.messages == 3
    # copy was unaffected
    assert snap.steps == 1 and snap.cells_visited == 10


def test_as_dict_keys():
    keys = set(Counters().as_dict())
    assert keys == {
        "steps",
        "cells_visited",
        "cells_visited_interior",
        "cells_visited_frame",
        "pdf_accesses",
        "idx_reads",
        "values_exchanged",
        "messages",
    }
