import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from causalkit.bn import forward_sample, parse_gaussian_network
from causalkit.dataset import Dataset, DatasetFormatError, load_dataset, read_dataset, save_dataset, write_dataset
from causalkit.networks import load_network


def test_empty_dataset_roundtrip():
    data = Dataset(("a", "b"), (2, None), np.zeros((0, 2)))
    text = write_dataset(data)
    assert text == "a\tb\nd2\tc\n"
    assert read_dataset(text) == data
    assert write_dataset(read_dataset(text)) == text


def test_small_discrete_roundtrip_bit_identical():
    data = Dataset(("x", "y"), (3, 2), np.array([[0, 1], [2, 0], [1, 1]]))
    text = write_dataset(data)
    assert text == "x\ty\nd3\td2\n0\t1\n2\t0\n1\t1\n"
    again = read_dataset(text)
    assert again == data and again.values.dtype == np.int64
    assert write_dataset(again) == text


def test_asia_sample_roundtrip(tmp_path):
    data = forward_sample(load_network("asia"), 1000, seed=7)
    path = tmp_path / "asia.txt"
    save_dataset(data, path)
    assert load_dataset(path) == data
    assert data.n == 1000 and data.n_columns == 8


def test_gaussian_roundtrip_exact_doubles():
    bn = parse_gaussian_network("node A 0 1\nnode B 0.5 2\narc A B 1.7\n")
    data = forward_sample(bn, 200, seed=1)
    again = read_dataset(write_dataset(data))
    assert np.array_equal(again.values, data.values)


def test_crlf_accepted():
    assert read_dataset("a\r\nd2\r\n1\r\n") == Dataset(("a",), (2,), np.array([[1]]))


@pytest.mark.parametrize("text, line, column", [
    ("a\tb\nd2\td2\n0\t1\n1\n", 4, None),
    ("a\tb\nd2\td2\n0\tz\n", 3, 2),
    ("a\tb\nd2\td2\n0\t2\n", 3, 2),
    ("a\tb\nd2\tq\n", 2, 2),
    ("a\tb\nd2\n", 2, None),
    ("a\nc\nnan\n", 3, 1),
])
def test_parse_errors_carry_location(text, line, column):
    with pytest.raises(DatasetFormatError) as info:
        read_dataset(text)
    assert info.value.line == line and info.value.column == column


def test_out_of_range_message():
    with pytest.raises(DatasetFormatError, match="out of range"):
        read_dataset("a\nd2\n5\n")


def test_ragged_message():
    with pytest.raises(DatasetFormatError, match="ragged"):
        read_dataset("a\tb\nd2\td2\n0\n")


@pytest.mark.parametrize("names", [("a", "a"), ("a\tb",), ("",)])
def test_bad_names(names):
    with pytest.raises(DatasetFormatError):
        Dataset(names, (2,) * len(names), np.zeros((1, len(names))))


def test_value_validation():
    with pytest.raises(DatasetFormatError):
        Dataset(("a",), (2,), np.array([[2]]))
    with pytest.raises(DatasetFormatError):
        Dataset(("a",), (2,), np.array([[0.5]]))
    with pytest.raises(DatasetFormatError):
        Dataset(("a",), (None,), np.array([[np.nan]]))


def test_values_are_read_only():
    data = Dataset(("a",), (2,), np.array([[1]]))
    with pytest.raises(ValueError):
        data.values[0, 0] = 0


def test_select_and_kind():
    data = Dataset(("a", "b", "c"), (2, None, 3), np.array([[1, 0.5, 2]]))
    assert data.kind == "mixed"
    sub = data.select(["c", "a"])
    assert sub.column_names == ("c", "a") and sub.is_discrete
    assert sub.values.tolist() == [[2, 1]]


@st.composite
def datasets(draw):
    p = draw(st.integers(1, 4))
    n = draw(st.integers(0, 12))
    cards = tuple(draw(st.one_of(st.none(), st.integers(1, 4))) for _ in range(p))
    if all(c is not None for c in cards):
        vals = np.column_stack([draw(arrays(np.int64, n, elements=st.integers(0, c - 1))) for c in cards])
    else:
        cols = []
        for c in cards:
            if c is None:
                cols.append(draw(arrays(np.float64, n, elements=st.floats(allow_nan=False, allow_infinity=False))))
            else:
                cols.append(draw(arrays(np.int64, n, elements=st.integers(0, c - 1))).astype(float))
        vals = np.column_stack(cols)
    return Dataset(tuple(f"v{i}" for i in range(p)), cards, vals.reshape(n, p))


@settings(max_examples=100, deadline=None)
@given(datasets())
def test_roundtrip_property(data):
    text = write_dataset(data)
    assert read_dataset(text) == data
    assert write_dataset(read_dataset(text)) == text
