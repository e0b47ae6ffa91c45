"""Order-book transitions against worked examples and a reference engine."""
import itertools

import numpy as np
import pytest

from fracvol.errors import GenerationError, ParameterError
from fracvol.lob import (LIMIT_ASK, LIMIT_BID, MARKET_BUY, MARKET_SELL,
                         SIDES_ONLY, BookState, LobParams, apply_event,
                         lob_step, run_lob)
from fracvol.rng import substream

from oracles import book_as_dict, ref_lob_apply


def test_market_order_on_empty_book_waits():
    book = BookState()
    apply_event(book, MARKET_BUY, None, 2.0)
    assert book.pending_buys == 1.0
    assert book.price_slot == 0 and not book.asks
    apply_event(book, MARKET_SELL, None, 2.0)
    assert book.pending_sells == 1.0


def test_market_order_fill_moves_price():
    book = BookState(asks={2: 0.4})
    apply_event(book, MARKET_BUY, None, 2.0)
    assert book.price_slot == 2
    assert not book.asks
    assert book.pending_buys == pytest.approx(0.6)
    book = BookState(asks={2: 2.0})
    apply_event(book, MARKET_BUY, None, 2.0)
    assert book.asks == {2: 1.0}
    assert book.pending_buys == 0.0
    assert book.price_slot == 2


def test_tie_breaking_improves_price():
    book = BookState(asks={2: 1.0, -2: 1.0})
    apply_event(book, MARKET_BUY, None, 2.0)
    assert book.price_slot == -2  # buyer takes the cheaper ask
    book = BookState(bids={2: 1.0, -2: 1.0})
    apply_event(book, MARKET_SELL, None, 2.0)
    assert book.price_slot == 2  # seller hits the higher bid


def test_limit_order_serves_pending_register():
    book = BookState(pending_buys=1.5)
    apply_event(book, LIMIT_ASK, 3, 2.0)
    assert book.pending_buys == 0.0
    assert book.asks == {3: 0.5}
    assert book.price_slot == 3
    book = BookState(pending_buys=3.0)
    apply_event(book, LIMIT_ASK, -1, 2.0)
    assert book.pending_buys == 1.0
    assert not book.asks
    assert book.price_slot == -1


def test_price_move_evicts_stale_orders():
    book = BookState(half_width=3, asks={3: 1.0}, bids={-3: 1.0})
    apply_event(book, MARKET_BUY, None, 2.0)
    assert book.price_slot == 3
    assert not book.bids  # slot -3 fell out of [0, 6]
    book.validate()


def test_exhaustive_small_states_match_reference():
    sizes = [None, 0.5, 2.0]
    slots = [-2, 0, 2]
    events = [(MARKET_BUY, None), (MARKET_SELL, None)]
    events += [(e, s) for e in (LIMIT_ASK, LIMIT_BID) for s in (-2, 0, 2)]
    checked = 0
    for a_slot, a_sz, b_slot, b_sz in itertools.product(slots, sizes,
                                                        slots, sizes):
        asks = {a_slot: a_sz} if a_sz else {}
        bids = {b_slot: b_sz} if b_sz else {}
        for pb, ps in itertools.product((0.0, 0.7), repeat=2):
            # pendings coexist only with an empty opposite side
            if (pb > 0 and asks) or (ps > 0 and bids):
                continue
            for event, slot in events:
                book = BookState(price_slot=0, half_width=4, slot_size=0.1,
                                 asks=dict(asks), bids=dict(bids),
                                 pending_buys=pb, pending_sells=ps)
                ref = ref_lob_apply(book_as_dict(book), event, slot, 1.3)
                apply_event(book, event, slot, 1.3)
                assert book_as_dict(book) == ref
                checked += 1
    assert checked > 1000


def test_book_invariants_hold_under_stepping():
    params = LobParams(half_width=5, steps=1, seed=2)
    book = BookState(half_width=5)
    rng = substream(2, 99)
    for i in range(2000):
        lob_step(book, params, rng)
        if i % 100 == 0:
            book.validate()
    book.validate()


def test_symmetric_events_leave_no_drift():
    finals = []
    for s in range(40):
        path = run_lob(LobParams(steps=2000, seed=s))
        finals.append((path.prices[-1] - path.prices[0]) / 0.1)
    finals = np.array(finals)
    assert abs(finals.mean()) < 4 * finals.std(ddof=1) / np.sqrt(40)


def test_run_shapes_and_determinism():
    params = LobParams(steps=500, seed=3)
    a = run_lob(params)
    b = run_lob(params)
    assert len(a.prices) == 501
    np.testing.assert_array_equal(a.times, np.arange(501.0))
    np.testing.assert_array_equal(a.prices, b.prices)
    assert not np.array_equal(a.prices, run_lob(LobParams(steps=500, seed=4)).prices)


def test_trace_aligns_with_path():
    params = LobParams(steps=400, seed=6)
    trace = []
    traced = run_lob(params, trace)
    untraced = run_lob(params)
    np.testing.assert_array_equal(traced.prices, untraced.prices)
    assert len(trace) == 400
    for (event, slot, price), row_price in zip(trace, traced.prices[1:]):
        assert event in (0, 1, 2, 3)
        assert isinstance(slot, int)
        assert price == row_price


def test_one_sided_placement_keeps_sides_apart():
    params = LobParams(placement=SIDES_ONLY, steps=1, seed=5)
    book = BookState(half_width=10)
    rng = substream(5, 21)
    for _ in range(1500):
        before = book.price_slot
        asks0, bids0 = dict(book.asks), dict(book.bids)
        lob_step(book, params, rng)
        new_asks = set(book.asks) - set(asks0)
        new_bids = set(book.bids) - set(bids0)
        assert all(s > before for s in new_asks)
        assert all(s < before for s in new_bids)


def test_price_floor_guard():
    with pytest.raises(GenerationError):
        run_lob(LobParams(initial_price=0.5, steps=5000, seed=0))


def test_params_validation():
    for bad in (LobParams(half_width=0), LobParams(order_size=0.0),
                LobParams(steps=0), LobParams(slot_size=0.0),
                LobParams(initial_price=-1.0), LobParams(placement="x"),
                LobParams(event_probs=(0.3, 0.3, 0.3, 0.3))):
        with pytest.raises(ParameterError):
            bad.validate()
    with pytest.raises(ParameterError):
        BookState(asks={99: 1.0}).validate()
    with pytest.raises(ParameterError):
        BookState(pending_buys=-1.0).validate()
    with pytest.raises(ParameterError):
        apply_event(BookState(), 7, None, 1.0)
