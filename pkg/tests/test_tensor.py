"""Core tensor ops: elementwise semantics, affine, tape backward, broadcasting rules."""

import numpy as np
import pytest

from dpsep import numerics as nt
from dpsep.numerics import GradTape, NumericsError, ShapeError, Tensor


def test_tensor_shape_data_invariant():
    t = Tensor(np.arange(6, dtype=np.float32).reshape(2, 3))
    assert t.shape == (2, 3)
    assert t.size == 6
    assert t.data.dtype == np.float32


def test_tensor_rejects_zero_extent():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((2, 0)))


def test_tensor_rejects_non_finite():
    with pytest.raises(NumericsError):
        Tensor([1.0, np.nan])


def test_relu_trivial():
    out = nt.relu(Tensor([-1.0, 0.0, 2.0]))
    np.testing.assert_array_equal(out.data, [0.0, 0.0, 2.0])


def test_mul_identity():
    x = Tensor([1.5, -2.0, 3.0])
    out = nt.mul(x, nt.ones((3,)))
    np.testing.assert_array_equal(out.data, x.data)


def test_sigmoid_at_zero():
    assert float(nt.sigmoid(Tensor(np.zeros(()))).data) == pytest.approx(0.5)


def test_elementwise_dispatch():
    x = Tensor([-1.0, 2.0])
    np.testing.assert_array_equal(nt.elementwise("relu", x).data, [0.0, 2.0])
    np.testing.assert_array_equal(
        nt.elementwise("add", x, Tensor([1.0, 1.0])).data, [0.0, 3.0]
    )
    with pytest.raises(ValueError):
        nt.elementwise("softmax", x)


def test_affine_identity():
    x = Tensor([1.0, 2.0])
    w = Tensor(np.eye(2))
    b = Tensor([0.0, 0.0])
    np.testing.assert_array_equal(nt.affine(x, w, b).data, [1.0, 2.0])


def test_affine_sum_plus_bias():
    out = nt.affine(Tensor([1.0, 1.0]), Tensor([[1.0, 1.0]]), Tensor([3.0]))
    np.testing.assert_array_equal(out.data, [5.0])


def test_affine_matches_scalar_loop_oracle():
    rng = np.random.default_rng(3)
    w = rng.standard_normal((3, 2)).astype(np.float32)
    b = rng.standard_normal(3).astype(np.float32)
    x = rng.standard_normal(2).astype(np.float32)
    # scalar-loop oracle: hand-rolled dot products
    expected = np.array(
        [sum(w[i, j] * x[j] for j in range(2)) + b[i] for i in range(3)],
        dtype=np.float32,
    )
    got = nt.affine(Tensor(x), Tensor(w), Tensor(b))
    np.testing.assert_allclose(got.data, expected, rtol=1e-6)


def test_affine_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as exc:
        nt.affine(Tensor(np.ones(3)), Tensor(np.ones((2, 2))))
    assert "(2, 2)" in str(exc.value) and "(3,)" in str(exc.value)


def test_backward_sum_gives_ones():
    x = Tensor(np.arange(4, dtype=np.float32), requires_grad=True)
    with GradTape() as tape:
        loss = nt.tsum(x)
    tape.backward(loss)
    np.testing.assert_array_equal(x.grad, np.ones(4, dtype=np.float32))


def test_backward_sum_of_squares_gives_two_x():
    x = Tensor([1.0, -2.0, 0.5], requires_grad=True)
    with GradTape() as tape:
        loss = nt.tsum(nt.mul(x, x))
    tape.backward(loss)
    np.testing.assert_allclose(x.grad, 2 * x.data, rtol=1e-6)


def test_backward_accumulates_across_calls():
    x = Tensor([1.0, 1.0], requires_grad=True)
    for _ in range(2):
        with GradTape() as tape:
            loss = nt.tsum(x)
        tape.backward(loss)
    np.testing.assert_array_equal(x.grad, [2.0, 2.0])
    x.zero_grad()
    assert x.grad is None


def test_backward_rejects_non_scalar_loss():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with GradTape() as tape:
        y = nt.mul(x, x)
    with pytest.raises(NumericsError):
        tape.backward(y)


def test_backward_rejects_detached_loss():
    x = Tensor([1.0], requires_grad=True)
    with GradTape() as tape:
        nt.tsum(x)
    with GradTape():
        other = nt.tsum(x)
    with pytest.raises(NumericsError):
        tape.backward(other)


def test_backward_rejects_repeat_without_reset():
    x = Tensor([1.0], requires_grad=True)
    with GradTape() as tape:
        loss = nt.tsum(x)
    tape.backward(loss)
    with pytest.raises(NumericsError):
        tape.backward(loss)
    tape.reset()
    assert len(tape) == 0


def test_broadcast_trailing_singleton():
    x = Tensor(np.ones((2, 3, 4)), requires_grad=True)
    z = Tensor(np.full((2, 1, 1), 2.0), requires_grad=True)
    with GradTape() as tape:
        loss = nt.tsum(nt.mul(x, z))
    assert float(loss.data) == pytest.approx(48.0)
    tape.backward(loss)
    np.testing.assert_array_equal(z.grad, np.full((2, 1, 1), 12.0))
    np.testing.assert_array_equal(x.grad, np.full((2, 3, 4), 2.0))


def test_broadcast_scalar():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    s = Tensor(np.asarray(3.0), requires_grad=True)
    with GradTape() as tape:
        loss = nt.tsum(nt.mul(x, s))
    tape.backward(loss)
    assert float(s.grad) == pytest.approx(4.0)


def test_broadcast_rejects_leading_singleton():
    a = Tensor(np.ones((1, 3)))
    b = Tensor(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        nt.add(a, b)


def test_broadcast_rejects_rank_mismatch():
    with pytest.raises(ShapeError):
        nt.add(Tensor(np.ones((2, 3))), Tensor(np.ones(3)))


def test_mixed_dtypes_rejected():
    with pytest.raises(ShapeError):
        nt.add(Tensor(np.ones(2)), Tensor(np.ones(2), dtype=np.float64))


def test_nan_surveillance_names_op():
    x = Tensor([700.0], requires_grad=True)
    nt.set_nan_checks(True)
    try:
        with GradTape():
            with pytest.raises(NumericsError) as exc:
                nt.exp(x)  # overflows float32
        assert "exp" in str(exc.value)
    finally:
        nt.set_nan_checks(False)


def test_no_recording_without_tape():
    x = Tensor([1.0], requires_grad=True)
    y = nt.mul(x, x)
    assert not y.requires_grad  # nothing to attach gradients to


def test_tape_determinism_bit_identical():
    rng = np.random.default_rng(11)
    data = rng.standard_normal((4, 5)).astype(np.float32)
    results = []
    for _ in range(2):
        x = Tensor(data, requires_grad=True)
        with GradTape() as tape:
            y = nt.tsum(nt.tanh(nt.mul(x, x)))
        tape.backward(y)
        results.append((float(y.data), x.grad.copy()))
    assert results[0][0] == results[1][0]
    assert np.array_equal(results[0][1], results[1][1])


def test_slice_and_concat_round_trip():
    x = Tensor(np.arange(12, dtype=np.float32).reshape(3, 4), requires_grad=True)
    with GradTape() as tape:
        left = nt.slice_axis(x, 1, 0, 2)
        right = nt.slice_axis(x, 1, 2, 4)
        back = nt.concat([left, right], axis=1)
        loss = nt.tsum(nt.mul(back, back))
    np.testing.assert_array_equal(back.data, x.data)
    tape.backward(loss)
    np.testing.assert_allclose(x.grad, 2 * x.data)


def test_stack_and_index_axis0():
    a = Tensor([1.0, 2.0], requires_grad=True)
    b = Tensor([3.0, 4.0], requires_grad=True)
    with GradTape() as tape:
        s = nt.stack([a, b], axis=0)
        loss = nt.tsum(nt.index_axis0(s, 1))
    tape.backward(loss)
    np.testing.assert_array_equal(a.grad, [0.0, 0.0])
    np.testing.assert_array_equal(b.grad, [1.0, 1.0])


def test_pad_last_axis():
    x = Tensor(np.ones((2, 3)), requires_grad=True)
    with GradTape() as tape:
        y = nt.pad_last_axis(x, 5)
        loss = nt.tsum(y)
    assert y.shape == (2, 5)
    np.testing.assert_array_equal(y.data[:, 3:], np.zeros((2, 2)))
    tape.backward(loss)
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))
