import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vropt.data import Dataset, ParseError, RandomSource, SparseRow, dataset_hash, parse_libsvm, write_libsvm


def test_sparse_row_validation():
    SparseRow([0, 3], [1.0, -2.0], 5)
    with pytest.raises(ValueError):
        SparseRow([3, 0], [1.0, 1.0], 5)  # not increasing
    with pytest.raises(ValueError):
        SparseRow([0, 0], [1.0, 1.0], 5)  # duplicate
    with pytest.raises(ValueError):
        SparseRow([0, 5], [1.0, 1.0], 5)  # out of range
    with pytest.raises(ValueError):
        SparseRow([0], [1.0, 2.0], 5)  # length mismatch


def test_parse_basic():
    text = "+1 1:0.5 3:2\n-1 2:1\n"
    ds = parse_libsvm(io.StringIO(text))
    assert ds.n == 2 and ds.d == 3
    assert ds.labels.tolist() == [1.0, -1.0]
    # libsvm indices are 1-based
    assert ds.rows[0].indices.tolist() == [0, 2]
    assert ds.rows[0].values.tolist() == [0.5, 2.0]


def test_parse_dim_override_and_errors():
    ds = parse_libsvm(io.StringIO("1 1:1\n"), dim=7)
    assert ds.d == 7
    with pytest.raises(ParseError):
        parse_libsvm(io.StringIO("1 0:1\n"))  # sub-1 index
    with pytest.raises(ParseError):
        parse_libsvm(io.StringIO("1 2:1 2:2\n"))  # non-increasing
    with pytest.raises(ParseError):
        parse_libsvm(io.StringIO("x 1:1\n"))  # bad label
    with pytest.raises(ParseError):
        parse_libsvm(io.StringIO("1 1:one\n"))  # bad value


def test_round_trip():
    text = "1 1:0.25 4:-3\n-1 2:1.5\n1\n"
    ds = parse_libsvm(io.StringIO(text))
    again = parse_libsvm(io.StringIO(write_libsvm(ds)))
    assert again.n == ds.n and again.d == ds.d
    for a, b in zip(ds.rows, again.rows):
        assert a.indices.tolist() == b.indices.tolist()
        assert a.values.tolist() == b.values.tolist()


@settings(max_examples=50, deadline=None)
@given(st.lists(
    st.tuples(
        st.sampled_from([-1.0, 1.0]),
        st.dictionaries(st.integers(0, 20), st.floats(-100, 100,
                        allow_nan=False, allow_infinity=False).filter(lambda v: v != 0),
                        max_size=6),
    ),
    min_size=1, max_size=8,
))
def test_round_trip_property(rows):
    d = 21
    built = [SparseRow(sorted(cols), [cols[k] for k in sorted(cols)], d) for _, cols in rows]
    ds = Dataset(built, [lab for lab, _ in rows])
    again = parse_libsvm(io.StringIO(write_libsvm(ds)), dim=d)
    assert again.labels.tolist() == ds.labels.tolist()
    for a, b in zip(ds.rows, again.rows):
        assert a.indices.tolist() == b.indices.tolist()
        assert np.array_equal(a.values, b.values)


def test_csr_matches_rows():
    ds = parse_libsvm(io.StringIO("1 1:2 3:4\n-1 2:-1\n1 1:1 2:1 3:1\n"))
    m = ds.to_csr().toarray()
    dense = np.zeros((3, 3))
    for i, row in enumerate(ds.rows):
        dense[i, row.indices] = row.values
    assert np.array_equal(m, dense)
    x = np.array([1.0, -2.0, 0.5])
    assert np.allclose(ds.margins(x), dense @ x)


def test_random_source_streams():
    a = RandomSource(7)
    b = RandomSource(7)
    assert [a.integers(100) for _ in range(5)] == [b.integers(100) for _ in range(5)]
    # child streams are decoupled from the parent's draw position
    c1 = RandomSource(7).child(3)
    RandomSource(7).integers(100)
    c2 = RandomSource(7).child(3)
    assert c1.integers(10**9) == c2.integers(10**9)
    assert RandomSource(7, stream=1).integers(10**9) != RandomSource(7, stream=2).integers(10**9)


def test_dataset_hash_sensitivity():
    ds1 = parse_libsvm(io.StringIO("1 1:1\n-1 2:1\n"))
    ds2 = parse_libsvm(io.StringIO("1 1:1\n-1 2:1\n"))
    ds3 = parse_libsvm(io.StringIO("1 1:1\n-1 2:1.0000001\n"))
    assert dataset_hash(ds1) == dataset_hash(ds2)
    assert dataset_hash(ds1) != dataset_hash(ds3)
