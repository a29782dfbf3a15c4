import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depcons.dataset import (
    REVIEW_LABELS,
    SEQUENTIAL,
    TWO_PHASE,
    decode,
    encode,
    make_scale,
    numeric_scale,
    to_raw,
    validate_dataset,
)
from depcons.errors import (
    DepconsError,
    DuplicateLabel,
    DuplicateOpinion,
    EmptyDataset,
    GapInArrivalOrder,
    InvalidRecord,
    ScaleTooSmall,
    UnknownLabel,
)


def test_review_scale_positions():
    scale = make_scale(list(REVIEW_LABELS))
    assert scale.k == 7
    assert scale.encode("borderline") == 4
    assert encode(scale, "strong accept") == 7
    assert encode(scale, "strong reject") == 1


def test_minimal_scale():
    scale = make_scale(["no", "yes"])
    assert scale.k == 2
    assert (scale.encode("no"), scale.encode("yes")) == (1, 2)


@pytest.mark.parametrize(
    "labels, exc",
    [(["yes", "yes"], DuplicateLabel), (["only"], ScaleTooSmall), ([], ScaleTooSmall)],
)
def test_bad_scales(labels, exc):
    with pytest.raises(exc):
        make_scale(labels)


def test_unknown_label(review):
    with pytest.raises(UnknownLabel):
        encode(review, "maybe")


def test_encode_decode_roundtrip(review):
    for label in review.labels:
        assert decode(review, encode(review, label)) == label


def test_valid_sequential(review):
    raw = [
        {"question_id": "q1", "worker_id": "a", "order_index": 0, "label": "accept"},
        {"question_id": "q1", "worker_id": "b", "order_index": 1, "label": "reject"},
    ]
    ds = validate_dataset(raw, review, SEQUENTIAL)
    assert (ds.m, ds.n) == (1, 2)
    assert [e.worker_id for e in ds.sequence("q1")] == ["a", "b"]


def test_gap_in_order(review):
    raw = [
        {"question_id": "q1", "worker_id": "a", "order_index": 0, "label": "accept"},
        {"question_id": "q1", "worker_id": "b", "order_index": 2, "label": "reject"},
    ]
    with pytest.raises(GapInArrivalOrder):
        validate_dataset(raw, review, SEQUENTIAL)


def test_empty(review):
    with pytest.raises(EmptyDataset):
        validate_dataset([], review, SEQUENTIAL)


def test_duplicate_opinion_two_phase(review):
    rec = {"question_id": "q", "worker_id": "a", "prior_label": "accept", "posterior_label": "accept"}
    with pytest.raises(DuplicateOpinion):
        validate_dataset([rec, dict(rec)], review, TWO_PHASE)


def test_duplicate_opinion_sequential(review):
    raw = [
        {"question_id": "q", "worker_id": "a", "order_index": 0, "label": "accept"},
        {"question_id": "q", "worker_id": "a", "order_index": 1, "label": "accept"},
    ]
    with pytest.raises(DuplicateOpinion):
        validate_dataset(raw, review, SEQUENTIAL)


def test_unknown_label_reports_line(review):
    raw = [{"question_id": "q", "worker_id": "a", "prior_label": "accept", "posterior_label": "meh"}]
    with pytest.raises(UnknownLabel) as info:
        validate_dataset(raw, review, TWO_PHASE, lines=[7])
    assert info.value.line == 7


def test_order_assigned_in_input_order(review):
    raw = [
        {"question_id": "q", "worker_id": "b", "label": "accept"},
        {"question_id": "q", "worker_id": "a", "label": "reject"},
    ]
    ds = validate_dataset(raw, review, SEQUENTIAL)
    assert [(e.worker_id, e.order_index) for e in ds.events] == [("b", 0), ("a", 1)]


def test_mixed_order_presence_rejected(review):
    raw = [
        {"question_id": "q", "worker_id": "b", "order_index": 0, "label": "accept"},
        {"question_id": "q", "worker_id": "a", "label": "reject"},
    ]
    with pytest.raises(InvalidRecord):
        validate_dataset(raw, review, SEQUENTIAL)


def test_timestamp_is_inert(review):
    base = {"question_id": "q", "worker_id": "a", "order_index": 0, "label": "accept"}
    later = {"question_id": "q", "worker_id": "b", "order_index": 1, "label": "reject", "timestamp": 0.5}
    ds = validate_dataset([dict(base, timestamp=9.0), later], review, SEQUENTIAL)
    # earlier timestamp on the second arrival does not reorder anything
    assert [e.worker_id for e in ds.sequence("q")] == ["a", "b"]


_ids = st.sampled_from(["q1", "q2", "q3"])


@st.composite
def sequential_raw(draw):
    k = draw(st.integers(2, 7))
    scale = numeric_scale(k)
    rows = []
    for q in draw(st.lists(_ids, min_size=1, max_size=3, unique=True)):
        workers = draw(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=6, unique=True))
        for rank, w in enumerate(workers):
            rows.append(
                {"question_id": q, "worker_id": w, "order_index": rank, "label": str(draw(st.integers(1, k)))}
            )
    return scale, rows


@st.composite
def two_phase_raw(draw):
    k = draw(st.integers(2, 7))
    scale = numeric_scale(k)
    keys = draw(st.lists(st.tuples(_ids, st.sampled_from("abcdef")), min_size=1, max_size=12, unique=True))
    rows = [
        {
            "question_id": q,
            "worker_id": w,
            "prior_label": str(draw(st.integers(1, k))),
            "posterior_label": str(draw(st.integers(1, k))),
        }
        for q, w in keys
    ]
    return scale, rows


@given(sequential_raw(), st.randoms())
@settings(max_examples=60)
def test_sequential_roundtrip_and_order_independence(case, rnd):
    scale, rows = case
    ds = validate_dataset(rows, scale, SEQUENTIAL)
    assert validate_dataset(to_raw(ds), scale, SEQUENTIAL) == ds
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert validate_dataset(shuffled, scale, SEQUENTIAL) == ds


@given(two_phase_raw(), st.randoms())
@settings(max_examples=60)
def test_two_phase_roundtrip_and_order_independence(case, rnd):
    scale, rows = case
    ds = validate_dataset(rows, scale, TWO_PHASE)
    assert validate_dataset(to_raw(ds), scale, TWO_PHASE) == ds
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert validate_dataset(shuffled, scale, TWO_PHASE) == ds


@given(
    st.lists(
        st.dictionaries(
            st.sampled_from(["question_id", "worker_id", "order_index", "label", "timestamp"]),
            st.one_of(st.none(), st.integers(-2, 3), st.sampled_from(["1", "2", "x", ""]), st.floats(-1, 5)),
        ),
        max_size=5,
    )
)
@settings(max_examples=150)
def test_validate_is_total(rows):
    scale = numeric_scale(3)
    try:
        ds = validate_dataset(rows, scale, SEQUENTIAL)
    except DepconsError:
        return
    assert ds.m >= 1 and ds.n >= 1


def test_shuffle_many_questions(k7):
    rng = random.Random(3)
    rows = []
    for q in range(5):
        for rank, w in enumerate(rng.sample("abcdefg", 4)):
            rows.append({"question_id": f"q{q}", "worker_id": w, "order_index": rank, "label": str(rng.randint(1, 7))})
    ds = validate_dataset(rows, k7, SEQUENTIAL)
    keys = [(e.question_id, e.order_index) for e in ds.events]
    assert keys == sorted(keys)
