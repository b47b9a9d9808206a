# cython: language_level=3
"""Compiled term arithmetic kernel (same contract as _termops_py)."""


def add_terms(dict a, dict b):
    cdef dict out
    if not a:
        return dict(b)
    if not b:
        return dict(a)
    out = dict(a)
    for k, v in b.items():
        s = out.get(k)
        if s is None:
            out[k] = v
        else:
            s = s + v
            if s:
                out[k] = s
            else:
                del out[k]
    return out


def sub_terms(dict a, dict b):
    cdef dict out = dict(a)
    for k, v in b.items():
        s = out.get(k)
        if s is None:
            out[k] = -v
        else:
            s = s - v
            if s:
                out[k] = s
            else:
                del out[k]
    return out


def scale_terms(dict a, c):
    cdef dict out
    if not c:
        return {}
    out = {}
    for k, v in a.items():
        out[k] = v * c
    return out


def mul_terms(dict a, dict b):
    cdef dict out = {}
    cdef tuple ka, kb, k
    cdef Py_ssize_t i, n
    if not a or not b:
        return {}
    for ka, va in a.items():
        n = len(ka)
        for kb, vb in b.items():
            k = tuple([<object>ka[i] + <object>kb[i] for i in range(n)])
            v = va * vb
            s = out.get(k)
            if s is None:
                out[k] = v
            else:
                s = s + v
                if s:
                    out[k] = s
                else:
                    del out[k]
    return out
