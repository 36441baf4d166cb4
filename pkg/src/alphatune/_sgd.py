import math

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def sgd_epoch(X, y, w, order, coef, intercept, avg, n_avg, eta0, decay, t,
              batch_size, l2, mean_weight, invscaling):
    """Minibatch SGD over the rows listed in ``order``; updates ``coef`` and ``avg`` in place.

    ``avg`` holds the running mean of all iterates (coefficients then
    intercept). Returns the new intercept, step counter and average count.
    """
    n = order.shape[0]
    d = X.shape[1]
    grad = np.zeros(d)
    start = 0
    while start < n:
        stop = min(start + batch_size, n)
        grad[:] = 0.0
        grad_b = 0.0
        for k in range(start, stop):
            i = order[k]
            z = intercept
            for j in range(d):
                z += X[i, j] * coef[j]
            if z >= 0:
                p = 1.0 / (1.0 + math.exp(-z))
            else:
                e = math.exp(z)
                p = e / (1.0 + e)
            r = w[i] * (p - y[i])
            for j in range(d):
                grad[j] += r * X[i, j]
            grad_b += r
        scale = 1.0 / ((stop - start) * mean_weight)
        lr = eta0 / (1.0 + decay * t) if invscaling else eta0
        for j in range(d):
            coef[j] -= lr * (grad[j] * scale + 2.0 * l2 * coef[j])
        intercept -= lr * grad_b * scale
        n_avg += 1
        f = 2.0 / (n_avg + 1.0)
        for j in range(d):
            avg[j] += (coef[j] - avg[j]) * f
        avg[d] += (intercept - avg[d]) * f
        t += 1
        start = stop
    return intercept, t, n_avg
