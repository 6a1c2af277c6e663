import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msef import tensor as T
from msef.errors import ContractError, DimensionError, NumericError
from msef.tensor import Adam, ComputeGraph, OptimizerState, Tensor, adam_step, finite_diff_check


def rand(rng, *shape, grad=True):
    return Tensor(rng.normal(size=shape), requires_grad=grad)


# --- matmul -----------------------------------------------------------------

def test_matmul_identity():
    M = np.array([[2.0, -1.0], [0.5, 3.0]])
    assert np.array_equal(T.matmul(Tensor(np.eye(2)), Tensor(M)).data, M)


def test_matmul_hand_example():
    out = T.matmul(Tensor([[1, 2], [3, 4]]), Tensor([[0], [1]]))
    assert out.data.tolist() == [[2.0], [4.0]]


def test_matmul_zero_annihilates():
    out = T.matmul(Tensor(np.zeros((3, 4))), Tensor(np.arange(8.0).reshape(4, 2)))
    assert out.shape == (3, 2) and not out.data.any()


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        T.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_matmul_overflow_is_numeric_error():
    big = Tensor(np.full((1, 2), 1e200))
    with pytest.raises(NumericError):
        T.matmul(big, Tensor(np.full((2, 1), 1e200)))


def test_non_finite_input_rejected():
    with pytest.raises(NumericError):
        Tensor([1.0, float("nan")])


@pytest.mark.parametrize("seed", range(20))
def test_matmul_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (Tensor(rng.normal(size=s)) for s in [(3, 4), (4, 5), (5, 2)])
    left = T.matmul(T.matmul(a, b), c).data
    right = T.matmul(a, T.matmul(b, c)).data
    assert np.allclose(left, right, rtol=0, atol=1e-9)


# --- softmax ----------------------------------------------------------------

def test_softmax_single_column():
    out = T.softmax_rows(Tensor([[3.0], [-7.0]]))
    assert out.data.tolist() == [[1.0], [1.0]]


def test_softmax_symmetric_row():
    assert T.softmax_rows(Tensor([[0.0, 0.0]])).data.tolist() == [[0.5, 0.5]]


def test_softmax_closed_form():
    out = T.softmax_rows(Tensor([[math.log(1), math.log(3)]])).data[0]
    assert out == pytest.approx([0.25, 0.75], abs=1e-15)


def test_softmax_mask_zeroes_entries():
    out = T.softmax_rows(Tensor([[1.0, 2.0, 3.0]]), mask=np.array([[True, False, True]]))
    assert out.data[0, 1] == 0.0
    assert out.data.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8),
       st.floats(-50, 50, allow_nan=False))
def test_softmax_rows_normalised_and_shift_invariant(seed, r, c, shift):
    x = np.random.default_rng(seed).normal(scale=5.0, size=(r, c))
    out = T.softmax_rows(Tensor(x)).data
    assert np.all(out >= 0)
    assert np.all(np.abs(out.sum(axis=1) - 1.0) <= 1e-12)
    shifted = T.softmax_rows(Tensor(x + shift)).data
    assert np.all(np.abs(shifted - out) <= 1e-12)


# --- layer norm -------------------------------------------------------------

def test_layer_norm_constant_row_is_zero():
    out = T.layer_norm(Tensor(np.full((1, 4), 7.0)), Tensor(np.ones(4)), Tensor(np.zeros(4)))
    assert np.array_equal(out.data, np.zeros((1, 4)))


def test_layer_norm_two_values():
    out = T.layer_norm(Tensor([[1.0, 3.0]]), Tensor(np.ones(2)), Tensor(np.zeros(2))).data[0]
    expected = 1.0 / math.sqrt(1.0 + 1e-5)
    assert out == pytest.approx([-expected, expected], abs=1e-15)
    assert out == pytest.approx([-1.0, 1.0], abs=1e-5)


def test_layer_norm_zero_gain_gives_bias():
    bias = np.array([0.5, -1.0, 2.0])
    out = T.layer_norm(Tensor(np.random.default_rng(1).normal(size=(4, 3))),
                       Tensor(np.zeros(3)), Tensor(bias))
    assert np.array_equal(out.data, np.tile(bias, (4, 1)))


def test_layer_norm_needs_two_features():
    with pytest.raises(DimensionError):
        T.layer_norm(Tensor([[1.0]]), Tensor([1.0]), Tensor([0.0]))


# --- backward ---------------------------------------------------------------

def test_backward_sum_gives_ones():
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    T.backward(T.sum(x))
    assert x.grad.tolist() == [1.0, 1.0, 1.0]


def test_backward_square():
    x = Tensor([1.0, 2.0], requires_grad=True)
    T.backward(T.sum(T.mul(x, x)))
    assert x.grad.tolist() == [2.0, 4.0]


def test_backward_fan_out_accumulates():
    x = Tensor(np.arange(4.0), requires_grad=True)
    T.backward(T.add(T.sum(x), T.sum(x)))
    assert x.grad.tolist() == [2.0] * 4


def test_detached_leaf_gets_no_buffer():
    x = Tensor([1.0, 2.0], requires_grad=True)
    c = Tensor([3.0, 4.0])
    T.backward(T.sum(T.mul(x, c)))
    assert c.grad is None
    assert x.grad.tolist() == [3.0, 4.0]


def test_backward_rejects_non_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ContractError):
        T.backward(T.scale(x, 2.0))


def test_graph_is_topological_and_visits_once():
    rng = np.random.default_rng(0)
    a, b = rand(rng, 3, 3), rand(rng, 3, 3)
    h = T.matmul(a, b)
    loss = T.sum(T.add(h, T.softmax_rows(h)))
    graph = ComputeGraph.trace(loss)
    assert graph.is_topological()
    outputs = [n.output_id for n in graph.nodes]
    assert len(outputs) == len(set(outputs))


def test_no_grad_records_nothing():
    x = Tensor([1.0], requires_grad=True)
    with T.no_grad():
        y = T.scale(x, 2.0)
    assert not y.requires_grad


# --- finite differences -----------------------------------------------------

def test_finite_diff_linear_exact():
    x = rand(np.random.default_rng(0), 5)
    assert finite_diff_check(T.sum, x) < 1e-9


def test_finite_diff_softmax_cross_entropy():
    x = Tensor([[0.3, -1.2, 2.0]], requires_grad=True)
    assert finite_diff_check(lambda t: T.cross_entropy(t, [1]), x) < 1e-6


def test_cross_entropy_value():
    logits = np.array([[0.3, -1.2, 2.0]])
    expected = -(logits[0, 1] - math.log(np.exp(logits[0]).sum()))
    assert T.cross_entropy(Tensor(logits), [1]).item() == pytest.approx(expected, abs=1e-14)


def _op_cases(rng):
    def shape():
        return tuple(int(s) for s in rng.integers(2, 9, size=2))

    n, d = shape()
    k = int(rng.integers(1, 9))
    w = Tensor(rng.normal(size=(d, k)))
    g, b = Tensor(rng.normal(size=d)), Tensor(rng.normal(size=d))
    mask = rng.random((n, d)) < 0.7
    mask[:, 0] = True
    other = Tensor(rng.normal(size=(n, d)))
    left = Tensor(rng.normal(size=(3, n)))
    targets = rng.integers(0, d, size=n)
    return n, d, [
        ("matmul_left", lambda x: T.sum(T.mul(T.matmul(x, w), T.matmul(x, w)))),
        ("matmul_right", lambda x: T.sum(T.tanh(T.matmul(left, x)))),
        ("softmax", lambda x: T.sum(T.mul(T.softmax_rows(x), other))),
        ("softmax_masked", lambda x: T.sum(T.mul(T.softmax_rows(x, mask), other))),
        ("layer_norm", lambda x: T.sum(T.mul(T.layer_norm(x, g, b), other))),
        ("sigmoid_gelu", lambda x: T.sum(T.mul(T.gelu(x), T.sigmoid(x)))),
        ("rowwise", lambda x: T.sum(T.mul(T.add(x, g), T.sub(x, b)))),
        ("rows", lambda x: T.mse(T.mean_rows(T.concat_rows([x, T.slice_rows(x, 0, 1)])), np.zeros(d))),
        ("cols", lambda x: T.sum(T.mul(T.concat_cols([T.slice_cols(x, 0, 1), x]),
                                        T.concat_cols([T.slice_cols(other, 0, 1), other])))),
        ("transpose", lambda x: T.sum(T.matmul(T.transpose(x), other))),
        ("gather", lambda x: T.sum(T.mul(T.gather(x, [0, n - 1, 0]), T.gather(other, [1, 0, 1])))),
        ("xent", lambda x: T.cross_entropy(x, targets)),
        ("mean", lambda x: T.mean(T.mul(x, x))),
    ]


@pytest.mark.parametrize("seed", range(100))
def test_every_op_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n, d, cases = _op_cases(rng)
    for name, f in cases:
        x = Tensor(rng.normal(size=(n, d)), requires_grad=True)
        err = finite_diff_check(f, x)
        assert err <= 1e-4, (name, err)


def test_gated_vector_grad():
    rng = np.random.default_rng(5)
    W = Tensor(rng.normal(size=(4, 3)))
    x = Tensor(rng.normal(size=4), requires_grad=True)
    assert finite_diff_check(lambda v: T.sum(T.sigmoid(T.matmul(v, W))), x) < 1e-8


# --- Adam -------------------------------------------------------------------

def test_adam_zero_gradient_no_move():
    p = [np.array([1.0, -2.0])]
    new, state = adam_step(p, [np.zeros(2)], OptimizerState(lr=0.1))
    assert np.array_equal(new[0], p[0]) and state.step == 1


def test_adam_constant_gradient_descends():
    x = Tensor([0.0, 0.0], requires_grad=True)
    opt = Adam([x], lr=0.05)
    for _ in range(50):
        x.grad = np.array([2.0, -0.5])
        opt.step()
    assert x.data[0] < 0 < x.data[1]


def test_adam_quadratic_converges():
    x = Tensor([0.0], requires_grad=True)
    opt = Adam([x], lr=0.1)
    for _ in range(500):
        opt.zero_grad()
        diff = T.add_const(x, -3.0)
        T.backward(T.sum(T.mul(diff, diff)))
        opt.step()
    assert abs(x.data[0] - 3.0) < 0.01


def test_adam_shape_mismatch():
    with pytest.raises(DimensionError):
        adam_step([np.zeros(2)], [np.zeros(3)], OptimizerState())


def test_adam_step_counter_increases_and_is_deterministic():
    rng = np.random.default_rng(2)
    p, g = [rng.normal(size=(2, 2))], [rng.normal(size=(2, 2))]
    a1, s1 = adam_step(p, g, OptimizerState(lr=0.01))
    a2, s2 = adam_step(p, g, OptimizerState(lr=0.01))
    assert np.array_equal(a1[0], a2[0])
    _, s3 = adam_step(a1, g, s1)
    assert s3.step == s1.step + 1 == 2


def test_ops_are_bit_deterministic():
    def run():
        rng = T.make_rng(42, 7)
        x = Tensor(rng.normal(size=(4, 6)))
        return T.layer_norm(T.softmax_rows(x), Tensor(np.ones(6)), Tensor(np.zeros(6))).data.tobytes()

    assert run() == run()
