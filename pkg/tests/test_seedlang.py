import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidves.errors import (
    SeedSyntaxError,
    SingularEvaluationError,
    UnknownIdentifierError,
)
from rigidves import seedlang as sl


def test_parse_basic_shapes():
    node = sl.parse_seed("w + 1i")
    assert isinstance(node, sl.BinOp) and node.op == "+"
    assert isinstance(node.left, sl.Var)
    assert node.right == sl.Lit(1j)

    node = sl.parse_seed("i*exp(w)")
    assert isinstance(node, sl.BinOp) and node.op == "*"
    assert node.left == sl.Lit(1j)
    assert node.right == sl.Call("exp", sl.Var("w"))


def test_parameters_parse_and_evaluate():
    node = sl.parse_seed("(w + delta*1i)")
    assert sl.free_params(node) == {"delta"}
    assert sl.eval_seed(node, 2.0 + 0j, {"delta": 1.0}) == 2 + 1j
    with pytest.raises(UnknownIdentifierError):
        sl.eval_seed(node, 2.0 + 0j, {})


def test_precedence_and_associativity():
    # unary minus binds tighter than power
    node = sl.parse_seed("-w^2")
    assert node == sl.Pow(sl.Neg(sl.Var("w")), 2)
    assert sl.eval_seed(node, 3.0 + 0j) == 9.0
    # left associativity
    node = sl.parse_seed("1 - 2 - 3")
    assert sl.eval_seed(node, 0j) == -4.0
    node = sl.parse_seed("w^2^3")
    assert node == sl.Pow(sl.Pow(sl.Var("w"), 2), 3)
    # mul binds tighter than add, power tighter than mul
    assert sl.eval_seed(sl.parse_seed("1 + 2*3^2"), 0j) == 19.0
    # ** is an alias for ^
    assert sl.parse_seed("w**3") == sl.Pow(sl.Var("w"), 3)


def test_eval_examples():
    assert sl.eval_seed(sl.parse_seed("w + 1i"), 3.0 + 0j) == 3 + 1j
    assert sl.eval_seed(sl.parse_seed("i*exp(w)"), 0j) == 1j


def test_dual_examples():
    v, d = sl.eval_seed_dual(sl.parse_seed("w + 1i"), 5.0 + 2j)
    assert v == 5 + 3j and d == 1.0
    v, d = sl.eval_seed_dual(sl.parse_seed("i*exp(w)"), 0j)
    assert v == 1j and d == 1j


def test_dual_value_bitwise_identical_to_eval():
    corpus = [
        "w^3 - 2*w + 1i",
        "exp(w)/(1 + w^2)",
        "sin(w)*cos(w) + sqrt(w + 4)",
        "log(w + 3) - w/(w - 10)",
    ]
    w = np.array([0.3 + 0.4j, -0.2 + 1.1j, 2.0 - 0.5j])
    for text in corpus:
        node = sl.parse_seed(text)
        plain = sl.eval_seed(node, w)
        dual_v, _ = sl.eval_seed_dual(node, w)
        assert np.array_equal(plain, dual_v)


DERIV_CORPUS = [
    "w", "w^2", "w^3 - w", "-w^4", "1/(w + 3)", "w/(w^2 + 5)",
    "exp(w)", "i*exp(w)", "exp(-w^2)", "log(w + 4)", "sqrt(w + 5)",
    "sin(w)", "cos(w)", "sin(w)*exp(w)", "cos(w)/(2 + sin(w))",
    "(w + 1i)^2", "w*w*w", "exp(w)*log(w + 6)", "2.5*w - 0.5i",
    "sqrt(exp(w) + 2)", "sin(cos(w))",
]


@pytest.mark.parametrize("text", DERIV_CORPUS)
def test_dual_matches_fd_oracle(text):
    # central complex FD: combine steps in the two real directions
    node = sl.parse_seed(text)
    w0 = 0.37 + 0.21j
    h = 1e-6
    d_re = (sl.eval_seed(node, w0 + h) - sl.eval_seed(node, w0 - h)) / (2 * h)
    d_im = (sl.eval_seed(node, w0 + 1j * h)
            - sl.eval_seed(node, w0 - 1j * h)) / (2j * h)
    fd = 0.5 * (d_re + d_im)
    _, dual = sl.eval_seed_dual(node, w0)
    assert abs(dual - fd) <= 1e-8 * max(1.0, abs(fd))


@pytest.mark.parametrize("text", DERIV_CORPUS + [
    "w + delta*1i", "exp(c*w) - b", "a*w^2 + b*w + c",
])
def test_printer_roundtrip_fixed_point(text):
    params = {name: 1.0 for name in ("a", "b", "c", "delta")}
    node = sl.parse_expr(text)
    printed = sl.print_expr(node)
    again = sl.parse_expr(printed)
    assert again == node
    # and evaluation agrees where defined
    val1 = sl.eval_seed(node, 0.3 + 0.7j, params)
    val2 = sl.eval_seed(again, 0.3 + 0.7j, params)
    assert val1 == val2


_leaf = st.sampled_from([sl.Var("w"), sl.Lit(1j), sl.Lit(2.0 + 0j),
                         sl.Lit(0.5j), sl.Param("a")])


def _ast_strategy():
    return st.recursive(
        _leaf,
        lambda children: st.one_of(
            st.builds(sl.Neg, children),
            st.builds(sl.BinOp, st.sampled_from(list("+-*/")), children,
                      children),
            st.builds(sl.Pow, children, st.integers(0, 3)),
            st.builds(sl.Call, st.sampled_from(sl.FUNCTIONS), children),
        ),
        max_leaves=12,
    )


@given(_ast_strategy())
@settings(max_examples=120, deadline=None)
def test_printer_roundtrip_random_ast(node):
    assert sl.parse_expr(sl.print_expr(node)) == node


def test_errors_carry_positions():
    with pytest.raises(SeedSyntaxError) as err:
        sl.parse_seed("w + ")
    assert err.value.offset == 4
    with pytest.raises(SeedSyntaxError):
        sl.parse_seed("")
    with pytest.raises(UnknownIdentifierError):
        sl.parse_seed("foo(w)")
    with pytest.raises(SeedSyntaxError):
        sl.parse_seed("exp(w, w)")
    with pytest.raises(SeedSyntaxError):
        sl.parse_seed("w^w")


def test_singularities_raise_not_nan():
    with pytest.raises(SingularEvaluationError):
        sl.eval_seed(sl.parse_seed("1/w"), 0j)
    with pytest.raises(SingularEvaluationError):
        sl.eval_seed(sl.parse_seed("log(w)"), 0j)
    with pytest.raises(SingularEvaluationError):
        sl.eval_seed_dual(sl.parse_seed("sqrt(w)"), 0j)
    # sqrt(0) itself is fine without the derivative
    assert sl.eval_seed(sl.parse_seed("sqrt(w)"), 0j) == 0
    # array evaluation reports the offending point
    with pytest.raises(SingularEvaluationError):
        sl.eval_seed(sl.parse_seed("1/(w - 1)"),
                     np.array([0j, 1.0 + 0j, 2.0 + 0j]))


def test_builtin_seeds():
    delta = sl.make_builtin_seed("delta", {"delta": 0.5})
    h, hp = delta.h_dual(np.array([1.0 + 0j, 2.0 + 0j]))
    assert np.allclose(h, [1 + 0.5j, 2 + 0.5j])
    assert np.allclose(hp, 1.0)

    affine = sl.make_builtin_seed("affine", {"a": 2j, "b": 1.0})
    h, hp = affine.h_dual(3.0 + 0j)
    assert h == 1 + 6j and hp == 2j

    exp_seed = sl.make_builtin_seed("exp", {"c": 0.5})
    h, hp = exp_seed.h_dual(0j)
    assert h == 1j and hp == 0.5j

    with pytest.raises(ValueError):
        sl.make_builtin_seed("delta", {"delta": -1.0})
    with pytest.raises(UnknownIdentifierError):
        sl.make_builtin_seed("nope")


def test_expr_seed_requires_declared_params():
    with pytest.raises(UnknownIdentifierError):
        sl.ExprSeed("w + delta*1i")
    seed = sl.ExprSeed("w + delta*1i", {"delta": 1.0})
    assert seed.h(0j) == 1j
    assert "delta=" in seed.describe()


def test_parse_constant():
    assert sl.parse_constant("1.5") == 1.5
    assert sl.parse_constant("1+2i") == 1 + 2j
    assert sl.parse_constant("-0.5i") == -0.5j
    assert sl.parse_constant("2*3") == 6.0


def test_field_expressions_with_partials():
    node = sl.parse_field_expr("x^2*y + 1i*sin(y)")
    X, Y = np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5),
                       indexing="ij")
    f, fx, fy = sl.eval_field_with_partials(node, X, Y)
    assert np.allclose(f, X ** 2 * Y + 1j * np.sin(Y))
    assert np.allclose(fx, 2 * X * Y)
    assert np.allclose(fy, X ** 2 + 1j * np.cos(Y))
