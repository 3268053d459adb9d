"""Minimal reverse-mode automatic differentiation on numpy arrays.

Every operation returns a `DiffNode` whose backward rule is itself expressed
with these same operations, so the backward pass *emits graph nodes*.  A
gradient is therefore an ordinary differentiable expression, which gives the
second-order derivatives needed by the critics' gradient penalty without a
separate forward-mode implementation.

Arrays are plain float64 ndarrays (float32 tolerated); all values are
immutable once wrapped.
"""

import numpy as np

from .errors import ShapeError, ValidationError


class DiffNode:
    """A value in the computation graph.

    parents is a tuple of (input node, vjp) pairs; each vjp maps the upstream
    gradient node to the gradient node w.r.t. that input.  `grad` is filled by
    `backward`; `visits` counts how often backward processed this node (test
    instrumentation).
    """

    __slots__ = ("value", "parents", "grad", "visits", "_backward_done")

    def __init__(self, value, parents=()):
        value = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(value)):
            raise ValidationError("non-finite value entering the graph")
        value.setflags(write=False)
        self.value = value
        self.parents = tuple(parents)
        self.grad = None
        self.visits = 0
        self._backward_done = False

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"DiffNode(shape={self.value.shape}, n_parents={len(self.parents)})"


def leaf(value):
    """Wrap a numpy array (or scalar) as a graph leaf."""
    return DiffNode(value)


constant = leaf


def _as_node(x):
    return x if isinstance(x, DiffNode) else leaf(x)


def _check_broadcast(a, b, op):
    try:
        np.broadcast_shapes(a.value.shape, b.value.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.value.shape} and {b.value.shape}")


# ---------------------------------------------------------------------------
# primitives


def add(a, b):
    a, b = _as_node(a), _as_node(b)
    _check_broadcast(a, b, "add")
    return DiffNode(a.value + b.value, [
        (a, lambda g: _sum_to_shape(g, a.value.shape)),
        (b, lambda g: _sum_to_shape(g, b.value.shape)),
    ])


def neg(a):
    a = _as_node(a)
    return DiffNode(-a.value, [(a, lambda g: neg(g))])


def sub(a, b):
    return add(a, neg(b))


def mul(a, b):
    a, b = _as_node(a), _as_node(b)
    _check_broadcast(a, b, "mul")
    return DiffNode(a.value * b.value, [
        (a, lambda g: _sum_to_shape(mul(g, b), a.value.shape)),
        (b, lambda g: _sum_to_shape(mul(g, a), b.value.shape)),
    ])


def div(a, b):
    a, b = _as_node(a), _as_node(b)
    _check_broadcast(a, b, "div")
    return DiffNode(a.value / b.value, [
        (a, lambda g: _sum_to_shape(div(g, b), a.value.shape)),
        (b, lambda g: _sum_to_shape(neg(div(mul(g, a), mul(b, b))), b.value.shape)),
    ])


def scale(a, c):
    """Multiply by a python scalar constant."""
    a = _as_node(a)
    c = float(c)
    return DiffNode(a.value * c, [(a, lambda g: scale(g, c))])


def matmul(a, b):
    a, b = _as_node(a), _as_node(b)
    if a.value.ndim < 2 or b.value.ndim < 2:
        raise ShapeError(f"matmul needs >=2-D operands, got {a.value.shape} and {b.value.shape}")
    if a.value.shape[-1] != b.value.shape[-2]:
        raise ShapeError(f"matmul: inner dims differ, {a.value.shape} @ {b.value.shape}")
    return DiffNode(np.matmul(a.value, b.value), [
        (a, lambda g: _sum_to_shape(matmul(g, transpose_last2(b)), a.value.shape)),
        (b, lambda g: _sum_to_shape(matmul(transpose_last2(a), g), b.value.shape)),
    ])


def transpose_last2(a):
    a = _as_node(a)
    return DiffNode(np.swapaxes(a.value, -1, -2), [(a, lambda g: transpose_last2(g))])


def transpose(a, axes):
    a = _as_node(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return DiffNode(np.transpose(a.value, axes), [(a, lambda g: transpose(g, inv))])


def reshape(a, shape):
    a = _as_node(a)
    old = a.value.shape
    return DiffNode(a.value.reshape(shape), [(a, lambda g: reshape(g, old))])


def broadcast_to(a, shape):
    a = _as_node(a)
    shape = tuple(shape)
    return DiffNode(np.broadcast_to(a.value, shape).copy(),
                    [(a, lambda g: _sum_to_shape(g, a.value.shape))])


def sum_(a, axis=None, keepdims=False):
    a = _as_node(a)
    val = a.value.sum(axis=axis, keepdims=keepdims)
    in_shape = a.value.shape

    def vjp(g):
        if axis is None:
            return broadcast_to(reshape(g, (1,) * len(in_shape)), in_shape)
        axes = axis if isinstance(axis, tuple) else (axis,)
        axes = tuple(ax % len(in_shape) for ax in axes)
        if not keepdims:
            kshape = tuple(1 if i in axes else d for i, d in enumerate(in_shape))
            g = reshape(g, kshape)
        return broadcast_to(g, in_shape)

    return DiffNode(val, [(a, vjp)])


def mean(a, axis=None, keepdims=False):
    a = _as_node(a)
    n = a.value.size if axis is None else np.prod(
        [a.value.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))]
    )
    return scale(sum_(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def _sum_to_shape(g, shape):
    """Reduce a broadcast gradient back to `shape` (graph-emitting)."""
    shape = tuple(shape)
    if g.value.shape == shape:
        return g
    extra = g.value.ndim - len(shape)
    if extra > 0:
        g = sum_(g, axis=tuple(range(extra)))
    axes = tuple(i for i, (gd, sd) in enumerate(zip(g.value.shape, shape))
                 if sd == 1 and gd != 1)
    if axes:
        g = sum_(g, axis=axes, keepdims=True)
    if g.value.shape != shape:
        g = reshape(g, shape)
    return g


def sqrt(a):
    a = _as_node(a)
    out = DiffNode(np.sqrt(a.value))
    # vjp references the output node itself: d sqrt / dx = 1 / (2 sqrt(x))
    out.parents = ((a, lambda g: scale(div(g, out), 0.5)),)
    return out


def leaky_relu(a, slope=0.2):
    a = _as_node(a)
    mask = np.where(a.value >= 0, 1.0, slope)
    return DiffNode(np.where(a.value >= 0, a.value, slope * a.value),
                    [(a, lambda g: mul(g, leaf(mask)))])


def concat(nodes, axis=0):
    nodes = [_as_node(n) for n in nodes]
    if not nodes:
        raise ValidationError("concat of zero nodes")
    val = np.concatenate([n.value for n in nodes], axis=axis)
    ax = axis % val.ndim
    sizes = [n.value.shape[ax] for n in nodes]
    offsets = np.cumsum([0] + sizes)
    parents = []
    for node, start, stop in zip(nodes, offsets[:-1], offsets[1:]):
        key = tuple([slice(None)] * ax + [slice(int(start), int(stop))])
        parents.append((node, lambda g, key=key: take_slice(g, key)))
    return DiffNode(val, parents)


def take_slice(a, key):
    """Basic slicing; `key` is a tuple of slices (and full-axis slice(None))."""
    a = _as_node(a)
    in_shape = a.value.shape
    return DiffNode(a.value[key], [(a, lambda g: scatter_slice(g, key, in_shape))])


def scatter_slice(g, key, shape):
    """Adjoint of take_slice: embed into zeros of `shape` at `key`."""
    g = _as_node(g)
    val = np.zeros(shape, dtype=g.value.dtype)
    val[key] = g.value
    return DiffNode(val, [(g, lambda gg: take_slice(gg, key))])


def take(a, indices, axis):
    """Gather along one axis (indices may repeat)."""
    a = _as_node(a)
    indices = np.asarray(indices)
    in_shape = a.value.shape
    return DiffNode(np.take(a.value, indices, axis=axis),
                    [(a, lambda g: index_add(g, indices, axis, in_shape))])


def index_add(g, indices, axis, shape):
    """Adjoint of take: scatter-add along one axis (indices may repeat)."""
    g = _as_node(g)
    indices = np.asarray(indices)
    if indices.ndim != 1:
        raise ShapeError("index_add supports 1-D index arrays only")
    ax = axis % len(shape)
    val = np.zeros(shape, dtype=float)
    target = np.moveaxis(val, ax, 0)
    np.add.at(target, indices, np.moveaxis(g.value, ax, 0))
    return DiffNode(val, [(g, lambda gg: take(gg, indices, axis))])


def norm2(a, axis=-1, keepdims=False):
    """Euclidean norm along `axis` (not differentiable at exactly zero)."""
    return sqrt(sum_(mul(a, a), axis=axis, keepdims=keepdims))


def normalize(a, axis=-1, tol=1e-12):
    a = _as_node(a)
    norms = np.linalg.norm(a.value, axis=axis, keepdims=True)
    if norms.min() < tol:
        raise ValidationError("normalize: (near-)zero-norm slice")
    return div(a, norm2(a, axis=axis, keepdims=True))


def cross_product(a, b):
    """Cross product over the last axis (length 3)."""
    a, b = _as_node(a), _as_node(b)
    if a.value.shape[-1] != 3 or b.value.shape[-1] != 3:
        raise ShapeError(f"cross_product needs last-axis 3, got {a.value.shape}, {b.value.shape}")

    def comp(n, i):
        key = (Ellipsis, slice(i, i + 1))
        return take_slice(n, key)

    a0, a1, a2 = (comp(a, i) for i in range(3))
    b0, b1, b2 = (comp(b, i) for i in range(3))
    c0 = sub(mul(a1, b2), mul(a2, b1))
    c1 = sub(mul(a2, b0), mul(a0, b2))
    c2 = sub(mul(a0, b1), mul(a1, b0))
    return concat([c0, c1, c2], axis=-1)


# ---------------------------------------------------------------------------
# temporal convolution (built from the linear primitives above)


def conv1d_output_length(t, kernel, stride, padding):
    if padding == "same":
        return -(-t // stride)
    if padding == "valid":
        return (t - kernel) // stride + 1
    raise ValidationError(f"unknown padding mode {padding!r}")


def temporal_conv1d(x, w, b=None, stride=1, padding="same", groups=1):
    """Grouped 1-D convolution over the trailing (time) axis.

    x: (B, C_in, T); w: (C_out, C_in // groups, K); b: (C_out,) or None.
    Padding 'same' keeps ceil(T / stride) output steps (zeros split evenly,
    extra zero on the right); 'valid' uses no padding.
    """
    x, w = _as_node(x), _as_node(w)
    if x.value.ndim != 3 or w.value.ndim != 3:
        raise ShapeError(f"conv1d: expected x (B,C,T) and w (C_out,C_pg,K), "
                         f"got {x.value.shape} and {w.value.shape}")
    bsz, c_in, t = x.value.shape
    c_out, c_pg, k = w.value.shape
    if groups < 1 or c_in % groups or c_out % groups:
        raise ShapeError(f"conv1d: groups={groups} incompatible with C_in={c_in}, C_out={c_out}")
    if c_pg != c_in // groups:
        raise ShapeError(f"conv1d: w per-group channels {c_pg} != C_in/groups {c_in // groups}")

    t_out = conv1d_output_length(t, k, stride, padding)
    if t_out < 1:
        raise ShapeError(f"conv1d: kernel {k} longer than input {t} with padding={padding}")
    if padding == "same":
        pad_total = max(0, (t_out - 1) * stride + k - t)
        left = pad_total // 2
        xp = scatter_slice(x, (slice(None), slice(None), slice(left, left + t)),
                           (bsz, c_in, t + pad_total))
    else:
        xp = x
    idx = (np.arange(t_out)[:, None] * stride + np.arange(k)[None, :]).ravel()
    cols = take(xp, idx, axis=2)                      # (B, C_in, t_out*K)
    cols = reshape(cols, (bsz, c_in, t_out, k))
    cols = transpose(cols, (0, 1, 3, 2))              # (B, C_in, K, t_out)

    outs = []
    cpg_out = c_out // groups
    for g in range(groups):
        cg = take_slice(cols, (slice(None), slice(g * c_pg, (g + 1) * c_pg)))
        cg = reshape(cg, (bsz, c_pg * k, t_out))
        wg = reshape(take_slice(w, (slice(g * cpg_out, (g + 1) * cpg_out),)),
                     (cpg_out, c_pg * k))
        outs.append(matmul(wg, cg))                   # (B, cpg_out, t_out)
    y = outs[0] if len(outs) == 1 else concat(outs, axis=1)
    if b is not None:
        b = _as_node(b)
        if b.value.shape != (c_out,):
            raise ShapeError(f"conv1d: bias shape {b.value.shape} != ({c_out},)")
        y = add(y, reshape(b, (c_out, 1)))
    return y


# ---------------------------------------------------------------------------
# backward


def _topo_order(output):
    order, seen, stack = [], set(), [(output, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order  # inputs before consumers


def gradient_nodes(output, wrt=None):
    """Build gradient graph nodes for all ancestors of a scalar output.

    Returns {id(node): grad DiffNode}.  If `wrt` is given, returns the list of
    grad nodes for those inputs instead (zeros where unreachable).
    """
    if output.value.shape != ():
        raise ShapeError(f"backward requires a scalar output, got shape {output.value.shape}")
    order = _topo_order(output)
    grads = {id(output): leaf(np.array(1.0))}
    for node in reversed(order):
        node.visits += 1
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, vjp in node.parents:
            pg = vjp(g)
            if pg.value.shape != parent.value.shape:
                raise ShapeError(
                    f"internal: vjp produced shape {pg.value.shape} for input of "
                    f"shape {parent.value.shape}")
            prev = grads.get(id(parent))
            grads[id(parent)] = pg if prev is None else add(prev, pg)
    if wrt is None:
        return grads
    out = []
    for node in wrt:
        g = grads.get(id(node))
        out.append(g if g is not None else leaf(np.zeros_like(node.value)))
    return out


def backward(output):
    """Fill `.grad` on every ancestor of a scalar output node.

    A second call on the same output raises; build a fresh graph instead.
    """
    if output._backward_done:
        raise ValidationError("backward already ran on this graph; rebuild it first")
    order = _topo_order(output)
    grads = gradient_nodes(output)
    for node in order:
        g = grads.get(id(node))
        if g is not None:
            node.grad = g.value
    output._backward_done = True


def gradient_check(build, inputs, h=1e-5):
    """Compare analytic gradients against central finite differences.

    `build(*leaves) -> scalar DiffNode` must be deterministic; `inputs` is a
    list of numpy arrays.  Returns (max relative error, (input idx, flat idx)).
    """
    inputs = [np.asarray(x, dtype=float) for x in inputs]
    leaves = [leaf(x) for x in inputs]
    out = build(*leaves)
    out_repeat = build(*[leaf(x) for x in inputs])
    if out.value != out_repeat.value:
        raise ValidationError("gradient_check: function is not deterministic "
                              f"({out.value} vs {out_repeat.value})")
    backward(out)

    worst, worst_idx = 0.0, (0, 0)
    for i, x in enumerate(inputs):
        analytic = leaves[i].grad
        if analytic is None:
            analytic = np.zeros_like(x)
        flat = x.ravel()
        for k in range(flat.size):
            xp, xm = flat.copy(), flat.copy()
            xp[k] += h
            xm[k] -= h
            args_p = [inp if j != i else xp.reshape(x.shape) for j, inp in enumerate(inputs)]
            args_m = [inp if j != i else xm.reshape(x.shape) for j, inp in enumerate(inputs)]
            fd = (build(*[leaf(a) for a in args_p]).value
                  - build(*[leaf(a) for a in args_m]).value) / (2 * h)
            an = analytic.ravel()[k]
            err = abs(fd - an) / max(abs(fd), abs(an), 1.0)
            if err > worst:
                worst, worst_idx = err, (i, k)
    return worst, worst_idx
