"""
Forward-mode dual numbers and the generic math primitives the interpreter uses.

A ``Dual`` pairs a value with the vector of its partial derivatives with
respect to the parameters θ. Values may be Python floats or numpy arrays
(one entry per execution lane); tangents then carry a leading θ axis, so a
lane batch of shape ``(B,)`` has a tangent of shape ``(k, B)``.

The module-level functions (``exp``, ``log``, ``sqrt``, ``floor``,
``where``) accept floats, arrays and duals alike, which lets every operator
in the operator table be written once.
"""

from typing import Any, Sequence, Union

import numpy as np


class Dual:
    """
    A value together with its gradient with respect to θ.

    Attributes:
        value: Primal value (float or ndarray of lanes)
        grad (np.ndarray): Tangent with shape ``(k,) + shape(value)``
    """

    __slots__ = ("value", "grad")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, value: Any, grad: Any):
        self.value = value
        self.grad = np.asarray(grad, dtype=float)

    @classmethod
    def variable(cls, value: float, index: int, size: int) -> "Dual":
        """Seed the ``index``-th of ``size`` independent variables."""
        grad = np.zeros(size)
        grad[index] = 1.0
        return cls(float(value), grad)

    @property
    def size(self) -> int:
        return int(self.grad.shape[0])

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.grad!r})"

    def __add__(self, other):
        return _combine(self, other, lambda a, b: a + b, lambda a, b: 1.0, lambda a, b: 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return _combine(self, other, lambda a, b: a - b, lambda a, b: 1.0, lambda a, b: -1.0)

    def __rsub__(self, other):
        return _combine(other, self, lambda a, b: a - b, lambda a, b: 1.0, lambda a, b: -1.0)

    def __mul__(self, other):
        return _combine(self, other, lambda a, b: a * b, lambda a, b: b, lambda a, b: a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _combine(
            self, other, lambda a, b: a / b, lambda a, b: 1.0 / b, lambda a, b: -a / (b * b)
        )

    def __rtruediv__(self, other):
        return _combine(
            other, self, lambda a, b: a / b, lambda a, b: 1.0 / b, lambda a, b: -a / (b * b)
        )

    def __neg__(self):
        return Dual(-self.value, -self.grad)


Number = Union[float, np.ndarray, Dual]


def is_dual(x: Any) -> bool:
    return isinstance(x, Dual)


def value_of(x: Any) -> Any:
    """Strip the tangent of a dual; other values pass through."""
    return x.value if isinstance(x, Dual) else x


def _tangent(grad: np.ndarray, ndim: int) -> np.ndarray:
    extra = ndim - (grad.ndim - 1)
    if extra > 0:
        return grad.reshape(grad.shape + (1,) * extra)
    return grad


def _combine(a, b, fn, da, db):
    av, bv = value_of(a), value_of(b)
    value = fn(av, bv)
    ndim = np.ndim(value)
    grad = None
    if isinstance(a, Dual):
        grad = np.multiply(da(av, bv), _tangent(a.grad, ndim))
    if isinstance(b, Dual):
        term = np.multiply(db(av, bv), _tangent(b.grad, ndim))
        grad = term if grad is None else grad + term
    return Dual(value, grad)


def _unary(x, fn, deriv):
    if not isinstance(x, Dual):
        return fn(x)
    value = fn(x.value)
    return Dual(value, np.multiply(deriv(x.value, value), _tangent(x.grad, np.ndim(value))))


def _scalar_or_array(fn_math, fn_np):
    def apply(v):
        if isinstance(v, np.ndarray):
            return fn_np(v)
        return fn_math(float(v))

    return apply


_exp = _scalar_or_array(np.exp, np.exp)
_log = _scalar_or_array(np.log, np.log)
_sqrt = _scalar_or_array(np.sqrt, np.sqrt)


def exp(x: Number) -> Number:
    return _unary(x, lambda v: _as_float(_exp(v)), lambda v, out: out)


def log(x: Number) -> Number:
    return _unary(x, lambda v: _as_float(_log(v)), lambda v, out: 1.0 / v)


def sqrt(x: Number) -> Number:
    return _unary(x, lambda v: _as_float(_sqrt(v)), lambda v, out: 0.5 / out)


def floor(x: Number) -> Number:
    if isinstance(x, Dual):
        value = _as_float(np.floor(x.value))
        return Dual(value, np.zeros(x.grad.shape[:1] + np.shape(value)))
    return _as_float(np.floor(x))


def _as_float(v: Any) -> Any:
    if isinstance(v, np.ndarray) and v.ndim > 0:
        return v
    return float(v)


def where(cond: Any, a: Number, b: Number) -> Number:
    """
    Lane-wise selection that keeps tangents.

    Args:
        cond: Boolean or boolean array
        a: Value used where ``cond`` holds
        b: Value used elsewhere

    Returns:
        The selected value; a Dual when either branch is one
    """
    if not isinstance(cond, np.ndarray):
        return a if cond else b
    if not isinstance(a, Dual) and not isinstance(b, Dual):
        return np.where(cond, a, b)
    av, bv = value_of(a), value_of(b)
    value = np.where(cond, av, bv)
    k = a.size if isinstance(a, Dual) else b.size
    shape = (k,) + value.shape
    ga = _broadcast_tangent(a, shape)
    gb = _broadcast_tangent(b, shape)
    return Dual(value, np.where(cond, ga, gb))


def _broadcast_tangent(x: Number, shape: Sequence[int]) -> np.ndarray:
    if not isinstance(x, Dual):
        return np.zeros(shape)
    return np.broadcast_to(_tangent(x.grad, len(shape) - 1), shape)


def gradient(x: Number, size: int) -> np.ndarray:
    """Tangent of ``x``; zeros for plain values."""
    if isinstance(x, Dual):
        return x.grad
    return np.zeros((size,) + np.shape(x))


def lane(x: Number, index: int) -> Number:
    """Extract a single lane from a batched value."""
    if isinstance(x, Dual):
        if np.ndim(x.value) == 0:
            return x
        return Dual(float(x.value[index]), x.grad[:, index])
    if isinstance(x, np.ndarray) and x.ndim > 0:
        return float(x[index])
    return x
