"""Independent reference implementations used as test oracles.

Everything here is written with plain Python loops and the most literal
reading of the underlying math, on raw numpy arrays. Nothing imports the
package under test.
"""

from __future__ import annotations

import math

import numpy as np


def matmul_loops(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n), dtype=np.float64)
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(k):
                acc += float(a[i, p]) * float(b[p, j])
            out[i, j] = acc
    return out


def conv2d_loops(x: np.ndarray, w: np.ndarray, b: np.ndarray, relu: bool = True) -> np.ndarray:
    """Same-padded convolution on a single [C,H,W] image, quadruple loop."""
    C, H, W = x.shape
    O, Ci, kh, kw = w.shape
    assert Ci == C
    p = kh // 2
    out = np.zeros((O, H, W), dtype=np.float64)
    for o in range(O):
        for i in range(H):
            for j in range(W):
                acc = float(b[o])
                for c in range(C):
                    for m in range(kh):
                        for n in range(kw):
                            ii, jj = i + m - p, j + n - p
                            if 0 <= ii < H and 0 <= jj < W:
                                acc += float(w[o, c, m, n]) * float(x[c, ii, jj])
                out[o, i, j] = max(acc, 0.0) if relu else acc
    return out


def maxpool_loops(x: np.ndarray, window: int = 2, stride: int = 2) -> np.ndarray:
    """Per-window max on [C,H,W] with replicate padding of ragged edges."""
    C, H, W = x.shape
    Ho = -(-H // stride)
    Wo = -(-W // stride)
    out = np.zeros((C, Ho, Wo), dtype=x.dtype)
    for c in range(C):
        for i in range(Ho):
            for j in range(Wo):
                best = None
                for m in range(window):
                    for n in range(window):
                        ii = min(i * stride + m, H - 1)
                        jj = min(j * stride + n, W - 1)
                        v = x[c, ii, jj]
                        if best is None or v > best:
                            best = v
                out[c, i, j] = best
    return out


def gap_loops(x: np.ndarray) -> np.ndarray:
    C, H, W = x.shape
    out = np.zeros(C, dtype=np.float64)
    for c in range(C):
        acc = 0.0
        for i in range(H):
            for j in range(W):
                acc += float(x[c, i, j])
        out[c] = acc / (H * W)
    return out


def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def lstm_step_loops(x, h, c, W, U, b):
    """One LSTM step, scalar arithmetic. W/U/b are dicts keyed i, f, c, o."""
    hidden = h.shape[0]

    def gate(name, squash):
        out = np.zeros(hidden, dtype=np.float64)
        for r in range(hidden):
            acc = float(b[name][r])
            for k in range(x.shape[0]):
                acc += float(W[name][r, k]) * float(x[k])
            for k in range(hidden):
                acc += float(U[name][r, k]) * float(h[k])
            out[r] = squash(acc)
        return out

    i = gate("i", _logistic)
    f = gate("f", _logistic)
    g = gate("c", math.tanh)
    o = gate("o", _logistic)
    c_new = np.array([f[r] * float(c[r]) + i[r] * g[r] for r in range(hidden)])
    h_new = np.array([o[r] * math.tanh(c_new[r]) for r in range(hidden)])
    return h_new, c_new


def softmax_direct(v: np.ndarray) -> np.ndarray:
    m = max(float(x) for x in v)
    e = np.array([math.exp(float(x) - m) for x in v])
    return e / e.sum()


def self_attention_direct(h: np.ndarray, W: np.ndarray, b: np.ndarray):
    T, H = h.shape
    u = np.array([math.tanh(sum(float(W[0, k]) * float(h[t, k]) for k in range(H)) + float(b[0]))
                  for t in range(T)])
    alpha = softmax_direct(u)
    ctx = np.zeros(H, dtype=np.float64)
    for t in range(T):
        ctx += alpha[t] * h[t]
    return ctx, alpha


def bahdanau_direct(h: np.ndarray, W1: np.ndarray, W2: np.ndarray, v: np.ndarray):
    T, H = h.shape
    a = W1.shape[0]
    hq = h[T - 1]
    e = np.zeros(T, dtype=np.float64)
    for t in range(T):
        acc = 0.0
        for r in range(a):
            s = sum(float(W1[r, k]) * float(h[t, k]) for k in range(H))
            s += sum(float(W2[r, k]) * float(hq[k]) for k in range(H))
            acc += float(v[r]) * math.tanh(s)
        e[t] = acc
    alpha = softmax_direct(e)
    ctx = np.zeros(H, dtype=np.float64)
    for t in range(T):
        ctx += alpha[t] * h[t]
    return ctx, alpha


def co_attention_direct(v1: np.ndarray, v2: np.ndarray, WQ, WK, WV):
    """Cross-view attention per the projected-value formulation."""
    def proj(M, x):  # x [T,H] -> [T,d]
        return np.array(matmul_loops(x.astype(np.float64), M.T.astype(np.float64)))

    Q1, K1, V1 = proj(WQ, v1), proj(WK, v1), proj(WV, v1)
    Q2, K2, V2 = proj(WQ, v2), proj(WK, v2), proj(WV, v2)
    s1 = np.array(matmul_loops(Q1, K2.T))
    s2 = np.array(matmul_loops(Q2, K1.T))
    a1 = np.stack([softmax_direct(row) for row in s1])
    a2 = np.stack([softmax_direct(row) for row in s2])
    att1 = np.array(matmul_loops(a1, V2))
    att2 = np.array(matmul_loops(a2, V1))
    emb = np.concatenate([att1.mean(axis=0), att2.mean(axis=0)])
    return att1, att2, emb, a1, a2


# ---------------------------------------------------------------------------
# Contrastive losses by direct enumeration


def normalize_rows(R: np.ndarray) -> np.ndarray:
    Z = np.zeros_like(R, dtype=np.float64)
    for i in range(R.shape[0]):
        n = math.sqrt(sum(float(x) * float(x) for x in R[i]))
        Z[i] = R[i] / n
    return Z


def cosine_matrix(R: np.ndarray) -> np.ndarray:
    Z = normalize_rows(R)
    M = R.shape[0]
    S = np.zeros((M, M), dtype=np.float64)
    for i in range(M):
        for j in range(M):
            S[i, j] = float(np.dot(Z[i], Z[j]))
    return S


def nt_xent_enum(S: np.ndarray, positives: list[set[int]], tau: float) -> float:
    M = S.shape[0]
    total = 0.0
    for i in range(M):
        denom = sum(math.exp(S[i, k] / tau) for k in range(M) if k != i)
        row = 0.0
        for p in positives[i]:
            row += -math.log(math.exp(S[i, p] / tau) / denom)
        total += row / len(positives[i])
    return total / M


def nt_logistic_enum(S: np.ndarray, positives: list[set[int]], tau: float) -> float:
    M = S.shape[0]
    total = 0.0
    for i in range(M):
        pos = sum(math.log1p(math.exp(-S[i, p] / tau)) for p in positives[i]) / len(positives[i])
        neg = 0.0
        for k in range(M):
            if k != i and k not in positives[i]:
                neg += math.log1p(math.exp(S[i, k] / tau))
        total += pos + neg
    return total / M


def margin_triplet_enum(R: np.ndarray, positives: list[set[int]], margin: float) -> float:
    Z = normalize_rows(R)
    M = R.shape[0]
    terms = []
    for i in range(M):
        for p in positives[i]:
            for n in range(M):
                if n == i or n in positives[i]:
                    continue
                d_pos = float(np.sum((Z[i] - Z[p]) ** 2))
                d_neg = float(np.sum((Z[i] - Z[n]) ** 2))
                terms.append(max(d_pos - d_neg + margin, 0.0))
    return sum(terms) / len(terms)


def cross_entropy_enum(logits: np.ndarray, labels: np.ndarray) -> float:
    B, K = logits.shape
    total = 0.0
    for i in range(B):
        p = softmax_direct(logits[i])
        total += -math.log(p[int(labels[i])])
    return total / B


# ---------------------------------------------------------------------------
# Metrics oracles


def auc_pairwise(pos: np.ndarray, neg: np.ndarray) -> float:
    """P(score_pos > score_neg) + 0.5 P(equal), by exhaustive pairing."""
    wins = ties = 0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1
            elif p == n:
                ties += 1
    total = len(pos) * len(neg)
    return (wins + 0.5 * ties) / total


def macro_auc_ovr(scores: np.ndarray, labels: np.ndarray, num_classes: int) -> float:
    aucs = []
    for c in range(num_classes):
        pos = scores[labels == c, c]
        neg = scores[labels != c, c]
        if len(pos) == 0 or len(neg) == 0:
            continue
        aucs.append(auc_pairwise(pos, neg))
    return float(np.mean(aucs))


def prf_from_confusion(cm: np.ndarray):
    """Per-class precision/recall/F1 with 0/0 -> 0, plus macro averages."""
    K = cm.shape[0]
    precision, recall, f1 = np.zeros(K), np.zeros(K), np.zeros(K)
    for c in range(K):
        tp = cm[c, c]
        col = cm[:, c].sum()
        row = cm[c, :].sum()
        precision[c] = tp / col if col > 0 else 0.0
        recall[c] = tp / row if row > 0 else 0.0
        s = precision[c] + recall[c]
        f1[c] = 2 * precision[c] * recall[c] / s if s > 0 else 0.0
    return precision, recall, f1


def adam_step_loops(theta, g, m, v, t, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Bias-corrected Adam on flat float vectors, scalar loop."""
    theta, g, m, v = (np.array(a, dtype=np.float64) for a in (theta, g, m, v))
    out_t = np.zeros_like(theta)
    out_m = np.zeros_like(theta)
    out_v = np.zeros_like(theta)
    for k in range(theta.size):
        out_m[k] = b1 * m[k] + (1 - b1) * g[k]
        out_v[k] = b2 * v[k] + (1 - b2) * g[k] * g[k]
        m_hat = out_m[k] / (1 - b1**t)
        v_hat = out_v[k] / (1 - b2**t)
        out_t[k] = theta[k] - lr * m_hat / (math.sqrt(v_hat) + eps)
    return out_t, out_m, out_v


def resize_bilinear_loops(frame: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of one [H,W,C] frame, half-pixel centers, scalar loops."""
    frame = np.asarray(frame, dtype=np.float64)
    H, W, C = frame.shape
    out = np.zeros((out_h, out_w, C))
    for i in range(out_h):
        for j in range(out_w):
            sy = (i + 0.5) * H / out_h - 0.5
            sx = (j + 0.5) * W / out_w - 0.5
            y0 = int(math.floor(sy))
            x0 = int(math.floor(sx))
            fy = sy - y0
            fx = sx - x0
            y0c = min(max(y0, 0), H - 1)
            y1c = min(max(y0 + 1, 0), H - 1)
            x0c = min(max(x0, 0), W - 1)
            x1c = min(max(x0 + 1, 0), W - 1)
            for c in range(C):
                top = frame[y0c, x0c, c] * (1 - fx) + frame[y0c, x1c, c] * fx
                bot = frame[y1c, x0c, c] * (1 - fx) + frame[y1c, x1c, c] * fx
                out[i, j, c] = top * (1 - fy) + bot * fy
    return out
