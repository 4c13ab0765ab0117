#!/usr/bin/env python3
"""Writes corpus.jsonl next to this script.

Expected outputs are computed by running each source under CPython, so the
corpus doubles as a check of the reference interpreter.
"""

import copy
import json
import math
import os
import random

import numpy

E = []


def entry(split, id_, doc, src, inputs, clear=()):
    E.append(dict(split=split, id=id_, doc=doc, src=src, inputs=inputs, clear=list(clear)))


def to_json(v):
    if isinstance(v, numpy.ndarray):
        kind = {"b": "bool", "i": "int64", "f": "float64"}[v.dtype.kind]
        return {"ndarray": v.tolist(), "dtype": kind}
    if isinstance(v, (bool, numpy.bool_)):
        return bool(v)
    if isinstance(v, (int, numpy.integer)):
        return int(v)
    if isinstance(v, (float, numpy.floating)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [to_json(x) for x in v]
    if v is None:
        return None
    raise TypeError(type(v))


def arr(xs, dtype=float):
    return numpy.array(xs, dtype=dtype)


rng = random.Random(20240611)


def ints(n, lo=-9, hi=9):
    return [rng.randint(lo, hi) for _ in range(n)]


def reals(n, lo=-4.0, hi=4.0):
    return [round(rng.uniform(lo, hi), 3) for _ in range(n)]


# ---------------------------------------------------------------- array
entry("array", "array_sum", "Sum of the elements.",
      "def f(a):\n    s = 0\n    for i in range(len(a)):\n        s += a[i]\n    return s\n",
      [[ints(5)], [ints(3)], [reals(4)]])
entry("array", "array_mean", "Arithmetic mean of the elements.",
      "def f(a):\n    s = 0.0\n    for x in a:\n        s += x\n    return s / len(a)\n",
      [[reals(5)], [ints(4)], [reals(6)]])
entry("array", "array_dot", "Dot product of two vectors.",
      "def f(a, b):\n    s = 0\n    for i in range(len(a)):\n        s += a[i] * b[i]\n    return s\n",
      [[ints(4), ints(4)], [reals(3), reals(3)], [ints(5), ints(5)]])
entry("array", "array_max", "Largest element.",
      "def f(a):\n    m = a[0]\n    for i in range(1, len(a)):\n        if a[i] > m:\n            m = a[i]\n    return m\n",
      [[ints(5)], [reals(4)], [ints(6)]])
entry("array", "array_argmin", "Index of the smallest element.",
      "def f(a):\n    best = 0\n    m = a[0]\n    for i in range(len(a)):\n        if a[i] < m:\n            m = a[i]\n            best = i\n    return best\n",
      [[ints(5)], [reals(4)], [[3, 1, 2, 1]]])
entry("array", "array_count_above", "How many elements exceed the threshold.",
      "def f(a, t):\n    c = 0\n    for x in a:\n        if x > t:\n            c += 1\n    return c\n",
      [[ints(6), 0], [reals(5), 1.5], [ints(4), -3]])
entry("array", "array_prefix_sums", "Running totals.",
      "def f(a):\n    out = [0] * len(a)\n    s = 0\n    for i in range(len(a)):\n        s += a[i]\n        out[i] = s\n    return out\n",
      [[ints(5)], [reals(4)], [ints(3)]])
entry("array", "array_reverse", "Elements in reverse order.",
      "def f(a):\n    n = len(a)\n    out = [0] * n\n    for i in range(n):\n        out[i] = a[n - 1 - i]\n    return out\n",
      [[ints(5)], [reals(3)], [ints(4)]])
entry("array", "array_bubble_sort", "Ascending bubble sort.",
      "def f(a):\n    n = len(a)\n    for i in range(n):\n        for j in range(n - i - 1):\n            if a[j] > a[j + 1]:\n                t = a[j]\n                a[j] = a[j + 1]\n                a[j + 1] = t\n    return a\n",
      [[ints(5)], [reals(4)], [ints(3)]])
entry("array", "array_range_normalize", "Min-max normalisation to [0, 1].",
      "def f(a):\n    lo = a[0]\n    hi = a[0]\n    for x in a:\n        lo = min(lo, x)\n        hi = max(hi, x)\n    out = [0.0] * len(a)\n    for i in range(len(a)):\n        out[i] = (a[i] - lo) / (hi - lo)\n    return out\n",
      [[[1.0, 3.0, 2.0, 5.0]], [[-2, 0, 2]], [[0.5, -1.5, 2.5, 1.0]]])
entry("array", "array_moving_average", "Mean of each window of three.",
      "def f(a):\n    out = [0.0] * (len(a) - 2)\n    for i in range(len(a) - 2):\n        out[i] = (a[i] + a[i + 1] + a[i + 2]) / 3\n    return out\n",
      [[reals(5)], [ints(6)], [reals(4)]])

# ---------------------------------------------------------------- loop
entry("loop", "loop_first_above", "Index of the first element above the threshold, or -1.",
      "def f(a, t):\n    idx = -1\n    for i in range(len(a)):\n        if a[i] > t:\n            idx = i\n            break\n    return idx\n",
      [[[1, 5, 2, 7], 4], [[1, 2, 3], 9], [[8, 1], 0]])
entry("loop", "loop_sum_until_negative", "Sum of the prefix before the first negative element.",
      "def f(a):\n    s = 0\n    for x in a:\n        if x < 0:\n            break\n        s += x\n    return s\n",
      [[[3, 4, -1, 5]], [[1, 2, 3]], [[-2, 4]]])
entry("loop", "loop_skip_negatives", "Sum of the non-negative elements.",
      "def f(a):\n    s = 0\n    for i in range(len(a)):\n        if a[i] < 0:\n            continue\n        s += a[i]\n    return s\n",
      [[ints(6)], [reals(4)], [[-1, -2]]])
entry("loop", "loop_increment_until_break", "Increment elements up to the first one above two.",
      "def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] += 1\n    return a\n",
      [[[1, 2, 3, 0]], [[5, 1]], [[0, 0, 0]]])
entry("loop", "loop_factorial", "n factorial for a public n.",
      "def f(n):\n    r = 1\n    i = 1\n    while i <= n:\n        r *= i\n        i += 1\n    return r\n",
      [[5], [0], [7]], clear=["n"])
entry("loop", "loop_fibonacci", "n-th Fibonacci number for a public n.",
      "def f(n):\n    a = 0\n    b = 1\n    for i in range(n):\n        t = a + b\n        a = b\n        b = t\n    return a\n",
      [[10], [1], [15]], clear=["n"])
entry("loop", "loop_power", "x raised to a public integer power.",
      "def f(x, n):\n    r = 1.0\n    for i in range(n):\n        r *= x\n    return r\n",
      [[1.5, 3], [-2.0, 4], [0.5, 5]], clear=["n"])
entry("loop", "loop_geometric", "Partial sum of a geometric series with a public length.",
      "def f(r, n):\n    s = 0.0\n    p = 1.0\n    for i in range(n):\n        s += p\n        p *= r\n    return s\n",
      [[0.5, 6], [-0.75, 4], [1.25, 3]], clear=["n"])
entry("loop", "loop_nested_pairs", "Number of ordered pairs with a[i] < a[j] and i < j.",
      "def f(a):\n    c = 0\n    for i in range(len(a)):\n        for j in range(i + 1, len(a)):\n            if a[i] < a[j]:\n                c += 1\n    return c\n",
      [[ints(5)], [[1, 2, 3]], [[3, 2, 1, 4]]])
entry("loop", "loop_countdown", "Steps to bring x below one by halving, at most ten.",
      "def f(x):\n    steps = 0\n    for i in range(10):\n        if x < 1:\n            break\n        x = x / 2\n        steps += 1\n    return steps\n",
      [[7.0], [0.5], [100.0]])
entry("loop", "loop_last_match", "Index of the last element equal to the key, or -1.",
      "def f(a, key):\n    pos = -1\n    for i in range(len(a)):\n        if a[i] == key:\n            pos = i\n    return pos\n",
      [[[1, 3, 1, 2], 1], [[4, 5], 3], [[2, 2, 2], 2]])

# ---------------------------------------------------------------- branch
entry("branch", "branch_abs_diff", "Absolute difference.",
      "def f(a, b):\n    if a > b:\n        return a - b\n    return b - a\n",
      [[3, 5], [9, -2], [1.5, 1.5]])
entry("branch", "branch_clamp", "Clamp x to [lo, hi].",
      "def f(x, lo, hi):\n    if x < lo:\n        return lo\n    elif x > hi:\n        return hi\n    else:\n        return x\n",
      [[5, 0, 3], [-2.5, -1.0, 1.0], [0.25, 0.0, 1.0]])
entry("branch", "branch_sign", "Sign of x as -1, 0 or 1.",
      "def f(x):\n    if x > 0:\n        s = 1\n    elif x < 0:\n        s = -1\n    else:\n        s = 0\n    return s\n",
      [[4], [-0.5], [0]])
entry("branch", "branch_relu", "Rectified linear unit.",
      "def f(x):\n    if x < 0:\n        x = 0\n    return x\n",
      [[-3.5], [2.25], [0]])
entry("branch", "branch_leaky_relu", "Leaky rectifier with slope 0.1.",
      "def f(x):\n    if x >= 0:\n        y = x\n    else:\n        y = 0.1 * x\n    return y\n",
      [[-3.0], [2.5], [0.0]])
entry("branch", "branch_max3", "Largest of three values.",
      "def f(a, b, c):\n    if a >= b and a >= c:\n        return a\n    if b >= c:\n        return b\n    return c\n",
      [[1, 2, 3], [5.5, -1.0, 2.0], [2, 7, 7]])
entry("branch", "branch_tax", "Tax owed under three brackets.",
      "def f(income):\n    if income <= 10:\n        tax = 0.0\n    elif income <= 40:\n        tax = (income - 10) * 0.2\n    else:\n        tax = 6 + (income - 40) * 0.4\n    return tax\n",
      [[5.0], [25.0], [60.0]])
entry("branch", "branch_grade", "Letter grade as a number from 0 to 4.",
      "def f(score):\n    if score >= 90:\n        return 4\n    if score >= 80:\n        return 3\n    if score >= 70:\n        return 2\n    if score >= 60:\n        return 1\n    return 0\n",
      [[95], [72], [10]])
entry("branch", "branch_in_band", "One when x lies within [lo, hi), else zero.",
      "def f(x, lo, hi):\n    if lo <= x < hi:\n        return 1\n    return 0\n",
      [[2, 1, 3], [3, 1, 3], [0.5, 1.0, 2.0]])
entry("branch", "branch_piecewise", "Piecewise linear hat function.",
      "def f(x):\n    if x < -1:\n        y = 0.0\n    elif x < 0:\n        y = x + 1\n    elif x < 1:\n        y = 1 - x\n    else:\n        y = 0.0\n    return y\n",
      [[-2.0], [-0.25], [0.5], [3.0]])
entry("branch", "branch_swap_order", "Pair sorted ascending.",
      "def f(a, b):\n    if a > b:\n        t = a\n        a = b\n        b = t\n    return [a, b]\n",
      [[3, 1], [1.5, 2.5], [4, 4]])

# ---------------------------------------------------------------- math
entry("math", "math_sigmoid", "Logistic sigmoid.",
      "import math\ndef f(x):\n    return 1 / (1 + math.exp(-x))\n",
      [[0.5], [-2.0], [3.0]])
entry("math", "math_softplus", "Softplus log(1 + e^x).",
      "import math\ndef f(x):\n    return math.log(1 + math.exp(x))\n",
      [[0.0], [1.5], [-2.0]])
entry("math", "math_tanh", "Hyperbolic tangent.",
      "import math\ndef f(x):\n    return math.tanh(x)\n",
      [[0.5], [-1.25], [2.0]])
entry("math", "math_gaussian", "Standard normal density.",
      "import math\ndef f(x):\n    return math.exp(-x * x / 2) / math.sqrt(2 * math.pi)\n",
      [[0.0], [1.0], [-1.5]])
entry("math", "math_distance", "Euclidean distance between two points.",
      "import math\ndef f(x1, y1, x2, y2):\n    dx = x2 - x1\n    dy = y2 - y1\n    return math.sqrt(dx * dx + dy * dy)\n",
      [[0.0, 0.0, 3.0, 4.0], [1.0, 2.0, -1.0, 0.5], [2.5, 2.5, 2.5, 3.5]])
entry("math", "math_log2", "Base-two logarithm.",
      "import math\ndef f(x):\n    return math.log2(x)\n",
      [[8.0], [0.5], [10.0]])
entry("math", "math_cosh", "Hyperbolic cosine.",
      "import math\ndef f(x):\n    return math.cosh(x)\n",
      [[0.0], [1.0], [-2.0]])
entry("math", "math_geometric_mean", "Geometric mean of two positive values.",
      "import math\ndef f(a, b):\n    return math.exp((math.log(a) + math.log(b)) / 2)\n",
      [[2.0, 8.0], [1.0, 1.0], [0.5, 4.5]])
entry("math", "math_sqrt_magnitude", "Square root of |x|.",
      "import math\ndef f(x):\n    if x > 0:\n        y = math.sqrt(x)\n    else:\n        y = math.sqrt(-x)\n    return y\n",
      [[4.0], [-2.25], [0.5]])
entry("math", "math_circle", "Circumference and area of a circle.",
      "import math\ndef f(r):\n    return [2 * math.pi * r, math.pi * r * r]\n",
      [[1.0], [2.5], [0.3]])
entry("math", "math_power", "x to a real power.",
      "import math\ndef f(x, y):\n    return math.pow(x, y)\n",
      [[2.0, 3.0], [4.0, 0.5], [1.5, -1.0]])

# ---------------------------------------------------------------- numpy
entry("numpy", "numpy_sum", "Sum of an array.",
      "import numpy\ndef f(a):\n    return numpy.sum(a)\n",
      [[arr(reals(5))], [arr(ints(4))], [arr(reals(3))]])
entry("numpy", "numpy_max", "Largest element of an array.",
      "import numpy\ndef f(a):\n    return numpy.max(a)\n",
      [[arr(reals(5))], [arr(ints(4))], [arr(reals(6))]])
entry("numpy", "numpy_dot", "Dot product of two arrays.",
      "import numpy\ndef f(a, b):\n    return numpy.dot(a, b)\n",
      [[arr(reals(4)), arr(reals(4))], [arr(ints(3)), arr(ints(3))], [arr(reals(2)), arr(reals(2))]])
entry("numpy", "numpy_logaddexp2", "Base-two log of the sum of powers of two.",
      "import numpy\ndef f(x1, x2):\n    return numpy.logaddexp2(x1, x2)\n",
      [[1.0, 2.0], [-0.5, 0.5], [3.0, 3.0]])
entry("numpy", "numpy_logaddexp", "Log of the sum of exponentials.",
      "import numpy\ndef f(x1, x2):\n    return numpy.logaddexp(x1, x2)\n",
      [[0.0, 0.0], [1.5, -1.0], [2.0, 1.0]])
entry("numpy", "numpy_log1p", "log(1 + x).",
      "import numpy\ndef f(x):\n    return numpy.log1p(x)\n",
      [[0.5], [2.0], [0.0]])
entry("numpy", "numpy_clip", "Elements clipped to [lo, hi].",
      "import numpy\ndef f(a, lo, hi):\n    return numpy.clip(a, lo, hi)\n",
      [[arr(reals(5)), -1.0, 1.0], [arr(ints(4)), 0, 3], [arr(reals(3)), 0.5, 2.0]])
entry("numpy", "numpy_sort", "Sorted copy of an array.",
      "import numpy\ndef f(a):\n    return numpy.sort(a)\n",
      [[arr(ints(5))], [arr(reals(4))], [arr(ints(3))]])
entry("numpy", "numpy_exp2", "Two to the power x.",
      "import numpy\ndef f(x):\n    return numpy.exp2(x)\n",
      [[3.0], [-1.5], [0.25]])
entry("numpy", "numpy_zeros_square", "Squares written into a zero array.",
      "import numpy\ndef f(a):\n    out = numpy.zeros(len(a))\n    for i in range(len(a)):\n        out[i] = a[i] * a[i]\n    return out\n",
      [[arr(reals(4))], [arr(ints(3))], [arr(reals(5))]])
entry("numpy", "numpy_power", "x to a real power via numpy.",
      "import numpy\ndef f(x, y):\n    return numpy.power(x, y)\n",
      [[2.0, 2.5], [9.0, 0.5], [1.5, 3.0]])

# ---------------------------------------------------------------- syntax
entry("syntax", "syntax_comprehension_squares", "Squares via a list comprehension.",
      "def f(a):\n    return [x * x for x in a]\n",
      [[ints(4)], [reals(3)], [ints(5)]])
entry("syntax", "syntax_builtin_sum", "Sum via the builtin.",
      "def f(a):\n    return sum(a)\n",
      [[ints(5)], [reals(4)], [ints(2)]])
entry("syntax", "syntax_ternary", "Larger value via a conditional expression.",
      "def f(a, b):\n    return a if a > b else b\n",
      [[3, 7], [2.5, -1.0], [4, 4]])
entry("syntax", "syntax_tuple_swap", "Swap via tuple assignment when out of order.",
      "def f(a, b):\n    if a > b:\n        a, b = b, a\n    return b - a\n",
      [[5, 2], [1.0, 3.5], [0, 0]])
entry("syntax", "syntax_chained_range", "Count of elements strictly inside (0, 5).",
      "def f(a):\n    c = 0\n    for x in a:\n        if 0 < x < 5:\n            c += 1\n    return c\n",
      [[ints(6)], [reals(5)], [[1, 5, 0, 4]]])
entry("syntax", "syntax_builtin_minmax", "Range of the values via min and max.",
      "def f(a, b, c):\n    return max(a, b, c) - min(a, b, c)\n",
      [[1, 5, 3], [2.5, -1.0, 0.0], [4, 4, 4]])
entry("syntax", "syntax_abs_sum", "Sum of absolute values.",
      "def f(a):\n    s = 0\n    for x in a:\n        s += abs(x)\n    return s\n",
      [[ints(5)], [reals(4)], [ints(3)]])
entry("syntax", "syntax_append_positive", "Positive parts via append.",
      "def f(a):\n    out = []\n    for x in a:\n        out.append(max(x, 0))\n    return out\n",
      [[ints(4)], [reals(3)], [ints(5)]])
entry("syntax", "syntax_sorted_median", "Median of three via sorted.",
      "def f(a, b, c):\n    s = sorted([a, b, c])\n    return s[1]\n",
      [[3, 1, 2], [0.5, 2.5, -1.0], [7, 7, 1]])
entry("syntax", "syntax_aug_ops", "Chain of augmented assignments.",
      "def f(x):\n    y = x\n    y += 2\n    y *= 3\n    y -= x\n    y /= 2\n    return y\n",
      [[1.0], [-2.5], [4]])
entry("syntax", "syntax_comprehension_filter", "Doubled elements, zeroing the negatives.",
      "def f(a):\n    return [2 * x if x > 0 else 0 for x in a]\n",
      [[ints(5)], [reals(4)], [ints(3)]])


def run(src, inputs):
    env = {}
    exec(src, env)
    return env["f"](*copy.deepcopy(inputs))


def main():
    out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "corpus.jsonl")
    seen = set()
    with open(out, "w") as fh:
        for e in E:
            assert e["id"] not in seen, e["id"]
            seen.add(e["id"])
            cases = []
            for inputs in e["inputs"]:
                expected = run(e["src"], inputs)
                cases.append({"inputs": [to_json(v) for v in inputs], "expected": to_json(expected)})
            rec = {"id": e["id"], "split": e["split"], "docstring": e["doc"], "source": e["src"], "cases": cases}
            if e["clear"]:
                rec["clear"] = e["clear"]
            fh.write(json.dumps(rec) + "\n")
    print(f"wrote {len(E)} entries to {out}")


if __name__ == "__main__":
    main()
