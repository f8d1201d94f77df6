import numpy as np


def naive_conv1d(x, w, stride, padding):
    """Independent reference: explicit loops over batch, channels and taps."""
    batch, cin, length = x.shape
    cout, _, kernel = w.shape
    lout = (length + 2 * padding - kernel) // stride + 1
    out = np.zeros((batch, cout, lout))
    for b in range(batch):
        for co in range(cout):
            for lo in range(lout):
                acc = 0.0
                for ci in range(cin):
                    for k in range(kernel):
                        li = lo * stride - padding + k
                        if 0 <= li < length:
                            acc += w[co, ci, k] * x[b, ci, li]
                out[b, co, lo] = acc
    return out


def central_difference(loss_fn, array, h=1e-5):
    """Numeric gradient of a scalar-valued function w.r.t. every element."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        plus = loss_fn()
        flat[j] = orig - h
        minus = loss_fn()
        flat[j] = orig
        gflat[j] = (plus - minus) / (2 * h)
    return grad


def max_rel_err(analytic, numeric, floor=1e-6):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
