# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simulation kernels: LIF integration, stochastic-synapse
(LB) layers, and LZ76 phrase counting.

Mirrors ``fallback.py``. The random draws use the same keyed splitmix64
counter scheme as :mod:`spikelz.rng`, so a reserved (key, counter)
window produces identical values here and in the numpy fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef unsigned long long u64

cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double _U53_INV = 1.0 / 9007199254740992.0  # 2**-53


cdef inline u64 _mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform_at(u64 key, u64 index) nogil:
    return <double>(_mix64(key + _GOLDEN * (index + 1)) >> 11) * _U53_INV


BACKEND_NAME = "compiled"


def lz76_count(bits) -> int:
    """Phrase count of the exhaustive-history sequential parse."""
    cdef const unsigned char[::1] s = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t n = s.shape[0]
    if n == 0:
        return 0
    if n == 1:
        return 1
    cdef Py_ssize_t c = 1, l = 1, i = 0, k = 1, k_max = 1
    with nogil:
        while True:
            if s[i + k - 1] == s[l + k - 1]:
                k += 1
                if l + k > n:
                    c += 1
                    break
            else:
                if k > k_max:
                    k_max = k
                i += 1
                if i == l:
                    c += 1
                    l += k_max
                    if l + 1 > n:
                        break
                    i = 0
                    k = 1
                    k_max = 1
                else:
                    k = 1
    return c


def lif_forward(z, double theta, double delta, double u_reset, double u_init):
    """LIF layer dynamics over (batch, neurons, timesteps) currents."""
    cdef double[:, :, ::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t batch = zz.shape[0], n = zz.shape[1], steps = zz.shape[2]
    spikes_arr = np.zeros((batch, n, steps), dtype=np.uint8)
    upre_arr = np.zeros((batch, n, steps), dtype=np.float64)
    cdef unsigned char[:, :, ::1] spikes = spikes_arr
    cdef double[:, :, ::1] u_pre = upre_arr
    cdef Py_ssize_t b, i, t
    cdef double u, keep = 1.0 - delta
    with nogil:
        for b in range(batch):
            for i in range(n):
                u = u_init
                for t in range(steps):
                    u = keep * u + zz[b, i, t]
                    u_pre[b, i, t] = u
                    if u >= theta:
                        spikes[b, i, t] = 1
                        u = u_reset
    return spikes_arr, upre_arr


def lb_forward(w, bias, x, double s, double theta_lb, u64 key, u64 counter0):
    """Stochastic-synapse layer over (batch, inputs, timesteps) spikes.

    Consumes draws (gate, amplitude) per synapse per timestep in
    (sample, timestep, neuron, synapse) order; inactive synapses skip
    generation but still own their counter slots, so the stream stays
    aligned with the vectorized fallback.
    """
    cdef double[:, ::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] bb = np.ascontiguousarray(bias, dtype=np.float64)
    cdef unsigned char[:, :, ::1] xx = np.ascontiguousarray(x, dtype=np.uint8)
    cdef Py_ssize_t batch = xx.shape[0], m = xx.shape[1], steps = xx.shape[2]
    cdef Py_ssize_t n = ww.shape[0]
    if ww.shape[1] != m:
        raise ValueError("weight matrix width does not match input count")
    spikes_arr = np.zeros((batch, n, steps), dtype=np.uint8)
    sigma_arr = np.zeros((batch, n, steps), dtype=np.float64)
    cdef unsigned char[:, :, ::1] spikes = spikes_arr
    cdef double[:, :, ::1] sigma = sigma_arr
    cdef Py_ssize_t b, t, i, j
    cdef double acc
    cdef u64 idx, row_base
    with nogil:
        for b in range(batch):
            for t in range(steps):
                for i in range(n):
                    row_base = ((<u64>b * steps + <u64>t) * n + <u64>i) * m
                    acc = bb[i]
                    for j in range(m):
                        if xx[b, j, t]:
                            idx = counter0 + 2 * (row_base + <u64>j)
                            if _uniform_at(key, idx) < s:
                                acc += ww[i, j] * _uniform_at(key, idx + 1)
                    sigma[b, i, t] = acc
                    if acc >= theta_lb:
                        spikes[b, i, t] = 1
    return spikes_arr, sigma_arr
