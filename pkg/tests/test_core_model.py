import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, load_fixture
from tingley_lab.core_model import (
    ComplexFunction,
    ParseError,
    PointEvaluation,
    PointSpace,
    deserialize,
    function_to_json,
    serialize,
    sphere_check,
    sup_norm,
    unit_level_set,
    unit_roots,
)

PQ = PointSpace(("p", "q"))

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)
complexes = st.builds(complex, finite, finite)


@st.composite
def functions(draw, min_size=1, max_size=6):
    size = draw(st.integers(min_size, max_size))
    values = draw(st.lists(complexes, min_size=size, max_size=size))
    return ComplexFunction(PointSpace(tuple(f"x{i}" for i in range(size))), values)


# -- point spaces and functions ----------------------------------------------------

def test_point_space_rejects_empty_and_duplicates():
    with pytest.raises(ValueError):
        PointSpace(())
    with pytest.raises(ValueError):
        PointSpace(("p", "p"))


def test_point_space_orders_sets_by_declaration():
    space = PointSpace(("c", "a", "b"))
    assert space.ordered({"b", "c"}) == ["c", "b"]


def test_function_rejects_nonfinite_and_wrong_length():
    with pytest.raises(ValueError):
        ComplexFunction(PQ, [1, float("nan")])
    with pytest.raises(ValueError):
        ComplexFunction(PQ, [1])


def test_function_values_are_read_only():
    f = ComplexFunction(PQ, [1, 0.3])
    with pytest.raises(ValueError):
        f.values[0] = 2


def test_point_evaluation_and_conjugate():
    f = ComplexFunction(PQ, [1j, 0.3])
    assert PointEvaluation("p")(f) == 1j
    assert PointEvaluation("p", conjugated=True)(f) == -1j
    with pytest.raises(KeyError):
        PointEvaluation("z")(f)


# -- norm and level sets --------------------------------------------------------------

def test_sup_norm_zero_function():
    assert sup_norm(ComplexFunction.zeros(PointSpace(("a", "b", "c")))) == 0


def test_sup_norm_max_of_moduli():
    assert sup_norm(ComplexFunction(PQ, [1, 0.3])) == 1


def test_sup_norm_three_four_five():
    # |3 + 4i| = 5
    f = ComplexFunction(PointSpace(("p",)), [(3 + 4j) / 5])
    assert sup_norm(f) == pytest.approx(1, abs=1e-15)


def test_unit_level_set_examples():
    assert unit_level_set(ComplexFunction(PQ, [1, 0.3]), 0) == ["p"]
    assert unit_level_set(ComplexFunction(PQ, [1j, -1]), 0) == ["p", "q"]
    assert unit_level_set(ComplexFunction(PQ, [0.999999, 0.5]), 1e-5) == ["p"]


def test_unit_level_set_rejects_negative_tol():
    with pytest.raises(ValueError):
        unit_level_set(ComplexFunction(PQ, [1, 0]), -1)


def test_sphere_check_examples():
    assert sphere_check(ComplexFunction(PQ, [1, 0]))
    assert not sphere_check(ComplexFunction.zeros(PQ))
    # sup norm is |0.5 + 0.5i| = sqrt(1/2)
    assert not sphere_check(ComplexFunction(PQ, [0.5 + 0.5j, 0.7]), 1e-12)


@settings(max_examples=200)
@given(functions(), complexes)
def test_sup_norm_homogeneous(f, c):
    scaled = f.with_values(c * f.values)
    assert math.isclose(sup_norm(scaled), abs(c) * sup_norm(f), rel_tol=1e-12, abs_tol=1e-12)


def test_sup_norm_triangle_on_random_triples():
    rng = np.random.default_rng(0)
    space = PointSpace(tuple("abcde"))
    for _ in range(1000):
        f, g = (ComplexFunction(space, rng.normal(size=5) + 1j * rng.normal(size=5)) for _ in range(2))
        assert sup_norm(f.with_values(f.values + g.values)) <= sup_norm(f) + sup_norm(g) + 1e-12


@given(functions(), st.floats(min_value=0, max_value=1))
def test_unit_level_set_grows_with_tolerance(f, eps):
    assert set(unit_level_set(f, 0)) <= set(unit_level_set(f, eps))


# -- serialization ----------------------------------------------------------------------

@given(functions())
def test_serialization_round_trip_is_bit_exact(f):
    g = deserialize(serialize(f))
    assert g.domain == f.domain
    assert g.values.tobytes() == f.values.tobytes()


def test_serialization_round_trip_three_points():
    f = ComplexFunction(PointSpace(("p", "q", "r")), [1, -0.25j, 0.5 + 0.5j])
    assert deserialize(serialize(f)) == f


def test_deserialize_rejects_nan():
    with pytest.raises(ParseError):
        deserialize('{"domain": ["p"], "values": [[NaN, 0]]}')


@pytest.mark.parametrize(
    "text, field",
    [
        ('{"values": [[1, 0]]}', "domain"),
        ('{"domain": ["p"]}', "values"),
        ('{"domain": ["p"], "values": [[1]]}', "values[0]"),
        ('{"domain": ["p"], "values": [["a", 0]]}', "values[0]"),
        ('{"domain": ["p", "p"], "values": [[1, 0], [0, 0]]}', "domain"),
        ('{"domain": ["p"], "values": [[1, 0], [0, 0]]}', "values"),
        ("not json", "<json>"),
    ],
)
def test_parse_errors_name_the_field(text, field):
    with pytest.raises(ParseError) as info:
        deserialize(text)
    assert info.value.field == field


def test_fixture_file_round_trips():
    raw = load_fixture("e2_function.json")
    f = deserialize((FIXTURES / "e2_function.json").read_text())
    assert f("q") == 0.3j
    assert function_to_json(f) == raw


def test_unit_roots_are_exact_at_quarter_turns():
    r = unit_roots(16)
    assert list(r[::4]) == [1, 1j, -1, -1j]
    assert np.allclose(np.abs(r), 1, atol=1e-15)
