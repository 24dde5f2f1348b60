import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishpoc.dataset import Dataset, Sample, canonical_schema, synthetic_phishing
from phishpoc.errors import EmptyFeatureSet, ParseError, PrevalenceUnreachable, SchemaMismatch
from phishpoc.opchain import (
    BINARY_TAGS,
    EPS,
    UNARY_TAGS,
    Binary,
    FeatureMap,
    FmopSet,
    Leaf,
    Unary,
    choose_features,
    compute_new_feature,
    deserialize_map,
    eval_chain,
    evaluate,
    generate_map,
    leaves,
    parse_chain,
    prevalence,
    serialize_map,
    transform,
)

from conftest import tiny_schema


def chains(n_features=27, max_leaves=6):
    """Arbitrary chain trees, not only the shapes the generator draws."""
    leaf = st.integers(0, n_features - 1).map(Leaf)
    return st.recursive(
        leaf,
        lambda kids: st.one_of(
            st.builds(Unary, st.sampled_from(UNARY_TAGS), kids),
            st.builds(Binary, st.sampled_from(BINARY_TAGS), kids, kids),
        ),
        max_leaves=max_leaves,
    )


# -- operators and chains ---------------------------------------------------


def test_default_operator_urns():
    f = FmopSet()
    assert len(f.unary) == 10 and len(f.binary) == 4
    assert "id" in f.unary and "pow1" not in f.unary


def test_identity_has_one_spelling():
    assert Unary("pow1", Leaf(0)) == Unary("id", Leaf(0))
    with pytest.raises(ValueError):
        FmopSet(unary=("id", "pow1"))


def test_size_examples():
    f1, f2 = Leaf(0), Leaf(1)
    assert f1.size == 0
    assert Unary("sin", f1).size == 1
    s = Binary("add", Unary("sin", f1), Unary("cos", f2))
    assert s.size == 3
    assert Unary("pow2", s).size == 4


@settings(max_examples=300, deadline=None)
@given(chains())
def test_size_law_matches_rendering(ch):
    # every operator node renders exactly one "("
    assert ch.size == str(ch).count("(")


@settings(max_examples=200, deadline=None)
@given(chains())
def test_parse_inverts_rendering(ch):
    assert parse_chain(str(ch)) == ch


def test_parse_examples():
    ch = parse_chain("(add f1 f2)")
    assert ch == Binary("add", Leaf(1), Leaf(2)) and ch.size == 1
    assert str(parse_chain(" (add (sin f1)\n (cos f2) ) ")) == "(add (sin f1) (cos f2))"


@pytest.mark.parametrize(
    "text, pos",
    [("(add f1", 7), ("(add f1 f2", 10), ("(foo f1)", 1), ("(add f1 f2))", 11), ("(sin x1)", 5), ("(add f1 $)", 8)],
)
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as e:
        parse_chain(text)
    assert e.value.position == pos


def test_eval_examples():
    add = Binary("add", Leaf(0), Leaf(1))
    assert eval_chain(add, Sample([1, 1], 1)) == 2
    assert eval_chain(add, Sample([0, 1], 1)) == 1
    div = Binary("div", Leaf(0), Leaf(1))
    assert eval_chain(div, np.array([1.0, 0.0])) == 1 / EPS
    assert eval_chain(div, np.array([-1.0, 0.0])) == -1 / EPS
    assert eval_chain(Unary("log", Leaf(0)), np.array([-(math.e - 1)])) == pytest.approx(-1.0)
    assert eval_chain(Unary("pow-1", Leaf(0)), np.array([0.0])) == 1 / EPS
    assert eval_chain(Unary("tan", Leaf(0)), np.array([math.pi / 2])) <= 1e6


def test_additive_chain_damps_one_flip():
    add = Binary("add", Leaf(0), Leaf(1))
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.choice([-1.0, 0.0, 1.0], size=2)
        y = x.copy()
        y[rng.integers(2)] = rng.choice([-1.0, 0.0, 1.0])
        m = np.abs(x - y).max()
        assert abs(eval_chain(add, x) - eval_chain(add, y)) <= m


@settings(max_examples=300, deadline=None)
@given(chains(n_features=4, max_leaves=8), st.lists(st.floats(-1e6, 1e6), min_size=4, max_size=4))
def test_eval_is_total(ch, xs):
    assert math.isfinite(eval_chain(ch, np.array(xs)))


def test_eval_vectorized_matches_rowwise():
    rng = np.random.default_rng(1)
    X = rng.choice([-1.0, 0.0, 1.0], size=(50, 27))
    for s in range(30):
        ch = compute_new_feature(range(27), 3, None, s)
        col = evaluate(ch, X)
        assert np.array_equal(col, [eval_chain(ch, row) for row in X])


# -- generation ---------------------------------------------------------------


def test_choose_features_examples():
    assert len(choose_features(range(27), 1, 0)) == 1
    assert set(choose_features([7], 3, 5)) == {7}
    with pytest.raises(EmptyFeatureSet):
        choose_features([], 3, 0)


def test_block_length_is_uniform():
    rng = np.random.default_rng(2021)
    counts = np.bincount([len(choose_features(range(27), 3, rng)) for _ in range(10_000)], minlength=4)[1:]
    expected = 10_000 / 3
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # chi-square survival function with 2 degrees of freedom is exp(-x/2)
    assert math.exp(-chi2 / 2) > 0.01


def test_compute_new_feature_shape():
    rng = np.random.default_rng(3)
    for _ in range(2000):
        ch = compute_new_feature(range(27), 3, None, rng)
        k = len(leaves(ch))
        # k unaries and k - 1 binaries, folded from the left
        assert ch.size == 2 * k - 1 <= 2 * 3 + 2
        node = ch
        for _ in range(k - 1):
            assert isinstance(node, Binary) and isinstance(node.right, Unary)
            node = node.left
        assert isinstance(node, Unary) and isinstance(node.child, Leaf)


def test_generated_chain_deterministic():
    assert compute_new_feature(range(27), 3, None, 42) == compute_new_feature(range(27), 3, None, 42)


def test_full_prevalence_default_map(canonical):
    for seed in range(25):
        m = generate_map(canonical, rng=seed)
        assert m.psi == 20
        assert m.covered() == set(range(27))
        assert prevalence(canonical, m) == 100.0


def test_unreachable_prevalence(canonical):
    with pytest.raises(PrevalenceUnreachable):
        generate_map(canonical, psi=1, max_size=1, prevalence_target=100)


@pytest.mark.parametrize("target, need", [(65, 18), (70, 19), (75, 21), (80, 22), (85, 23), (90, 25), (100, 27)])
def test_partial_prevalence_is_exact(canonical, target, need):
    for seed in range(10):
        m = generate_map(canonical, prevalence_target=target, rng=seed)
        assert len(m.covered()) == need
        assert prevalence(canonical, m) >= target


def test_prevalence_example():
    s = tiny_schema(4)
    psi = (Binary("add", Leaf(0), Leaf(1)), Binary("add", Unary("sin", Leaf(2)), Leaf(0)))
    m = FeatureMap(s, psi, None, range(4), 3, 75.0)
    assert prevalence(s, m) == 75.0
    single = FeatureMap(canonical_schema(), (Leaf(0),), None, range(27), 1, 0.0)
    assert prevalence(canonical_schema(), single) == 100 / 27
    with pytest.raises(SchemaMismatch):
        prevalence(s, single)


def test_map_respects_fbar(canonical):
    fbar = [0, 3, 9, 10, 20]
    m = generate_map(canonical, psi=5, fbar=fbar, prevalence_target=18.0, rng=1)
    assert m.covered() <= set(fbar)


def test_transform_shape_and_identity(canonical, small_synthetic):
    d = small_synthetic.take(range(100))
    m = generate_map(canonical, rng=7)
    t = transform(d, m)
    assert t.X.shape == (100, 20)
    assert t.schema.names[0] == "oc_0" and t.y.tolist() == d.y.tolist()
    ident = FeatureMap(canonical, tuple(Leaf(i) for i in range(27)), None, range(27), 1, 100.0)
    assert np.array_equal(transform(d, ident).X, d.X)
    with pytest.raises(SchemaMismatch):
        transform(Dataset(tiny_schema(27), d.X, d.y), m)


def test_transform_is_row_independent(canonical, small_synthetic):
    m = generate_map(canonical, rng=8)
    perm = np.random.default_rng(0).permutation(len(small_synthetic))
    a = transform(small_synthetic, m).X[perm]
    b = transform(small_synthetic.take(perm), m).X
    assert np.array_equal(a, b)


def test_serialization_round_trip(canonical):
    rng = np.random.default_rng(99)
    for k in range(1000):
        m = generate_map(canonical, psi=int(rng.integers(14, 25)), max_size=int(rng.integers(2, 5)),
                         prevalence_target=float(rng.choice([60, 75.5, 100])), rng=k)
        text = serialize_map(m)
        back = deserialize_map(text)
        assert back == m
        assert serialize_map(back) == text


def test_same_seed_same_bytes(canonical):
    assert serialize_map(generate_map(canonical, rng=5)) == serialize_map(generate_map(canonical, rng=5))
    assert serialize_map(generate_map(canonical, rng=5)) != serialize_map(generate_map(canonical, rng=6))


def test_deserialize_errors(canonical):
    text = serialize_map(generate_map(canonical, rng=1))
    with pytest.raises(ParseError):
        deserialize_map(text.replace("chains:", ""))
    broken = text.rstrip("\n")[:-1] + "\n"
    with pytest.raises(ParseError) as e:
        deserialize_map(broken)
    assert e.value.position == len(broken) - 1
    with pytest.raises(ParseError):
        deserialize_map(text.replace("schema_hash: ", "schema_hash: 0"))
