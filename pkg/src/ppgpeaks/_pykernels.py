"""Pure-Python kernels.

Reference implementation of the hot loops. The compiled ``_ckernels`` module
mirrors every function here operation-for-operation, so both backends produce
bit-identical output.
"""

import numpy as np

# layout of the SRMAC state vector shared by both backends
S_FAST, S_SLOW, S_CROSS, S_IN_ROI, S_BEST_VAL, S_BEST_IDX, S_OPEN, S_COUNT = range(8)
SRMAC_STATE_SIZE = 8


def new_srmac_state():
    return np.zeros(SRMAC_STATE_SIZE, dtype=np.float64)


def ewma_filter(x, alpha, initial=0.0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    beta = 1.0 - alpha
    e = float(initial)
    for i, v in enumerate(x.tolist()):
        e = alpha * e + beta * v
        out[i] = e
    return out


def sma_filter(x, n):
    """Causal moving mean; divides by samples seen until the window fills."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    buf = [0.0] * n
    s = 0.0
    pos = 0
    count = 0
    for i, v in enumerate(x.tolist()):
        if count >= n:
            s -= buf[pos]
        else:
            count += 1
        s += v
        buf[pos] = v
        pos += 1
        if pos == n:
            pos = 0
        out[i] = s / count
    return out


def srmac_scan(x, alpha_fast, alpha_slow, alpha_cross, threshold, state):
    """Run the SRMAC state machine over ``x``, updating ``state`` in place.

    Returns ``(peaks, roi_starts, roi_ends)`` as int64 arrays for every ROI
    closed inside this chunk. ``roi_ends`` is the first index past the ROI.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    bf = 1.0 - alpha_fast
    bs = 1.0 - alpha_slow
    bc = 1.0 - alpha_cross
    ef = state[S_FAST]
    es = state[S_SLOW]
    ec = state[S_CROSS]
    in_roi = state[S_IN_ROI] != 0.0
    best_val = state[S_BEST_VAL]
    best_idx = int(state[S_BEST_IDX])
    roi_open = int(state[S_OPEN])
    n = int(state[S_COUNT])
    peaks = []
    starts = []
    ends = []
    for v in x.tolist():
        ef = alpha_fast * ef + bf * v
        es = alpha_slow * es + bs * v
        ec = alpha_cross * ec + bc * (ef - es)
        if ec > threshold:
            if not in_roi:
                in_roi = True
                roi_open = n
                best_val = v
                best_idx = n
            elif v > best_val:
                best_val = v
                best_idx = n
        elif in_roi:
            peaks.append(best_idx)
            starts.append(roi_open)
            ends.append(n)
            in_roi = False
        n += 1
    state[S_FAST] = ef
    state[S_SLOW] = es
    state[S_CROSS] = ec
    state[S_IN_ROI] = 1.0 if in_roi else 0.0
    state[S_BEST_VAL] = best_val
    state[S_BEST_IDX] = best_idx
    state[S_OPEN] = roi_open
    state[S_COUNT] = n
    return (
        np.asarray(peaks, dtype=np.int64),
        np.asarray(starts, dtype=np.int64),
        np.asarray(ends, dtype=np.int64),
    )


def segment_argmax(above, signal, min_width):
    """Argmax of ``signal`` inside each run of ``above`` at least ``min_width`` long."""
    above = np.ascontiguousarray(above, dtype=np.uint8)
    signal = np.ascontiguousarray(signal, dtype=np.float64)
    peaks = []
    starts = []
    ends = []
    n = len(above)
    i = 0
    while i < n:
        if not above[i]:
            i += 1
            continue
        start = i
        best = start
        best_val = signal[start]
        i += 1
        while i < n and above[i]:
            if signal[i] > best_val:
                best_val = signal[i]
                best = i
            i += 1
        if i - start >= min_width:
            peaks.append(best)
            starts.append(start)
            ends.append(i)
    return (
        np.asarray(peaks, dtype=np.int64),
        np.asarray(starts, dtype=np.int64),
        np.asarray(ends, dtype=np.int64),
    )


def match_events(detected, annotated, tol):
    """One-to-one matching of sorted event times with ``|d - a| < tol``.

    Each detection, in increasing order, takes the earliest still-unmatched
    annotation within tolerance. Returns index arrays ``(det_idx, ann_idx)``.
    """
    detected = np.ascontiguousarray(detected, dtype=np.float64)
    annotated = np.ascontiguousarray(annotated, dtype=np.float64)
    m = len(annotated)
    j = 0
    det_idx = []
    ann_idx = []
    for i, d in enumerate(detected.tolist()):
        # annotations this far behind are out of reach for every later detection
        while j < m and annotated[j] < d and d - annotated[j] >= tol:
            j += 1
        if j < m and abs(annotated[j] - d) < tol:
            det_idx.append(i)
            ann_idx.append(j)
            j += 1
    return np.asarray(det_idx, dtype=np.int64), np.asarray(ann_idx, dtype=np.int64)
