"""Independent reference values for the 20-record evaluation fixture.

Uses scikit-learn's average_precision_score (no ties occur in the fixture, so
its step-wise definition equals mean precision at the positive ranks) and
plain numpy for the argmax-based metrics. Output is pasted into
tests/unit/test_evaluation.cpp and tests/acceptance/acceptance.cpp.
"""
import numpy as np
from sklearn.metrics import average_precision_score

N, K = 20, 4
probs = np.zeros((N, K))
truths = []
for i in range(N):
    v = np.array([((i * 7 + c * 13) % 17) / 17.0 + 0.001 * (i + 1) * (c + 1) for c in range(K)])
    e = np.exp(v - v.max())
    probs[i] = e / e.sum()
    t = [i % K]
    if i % 5 == 0:
        t.append((i + 1) % K)
    truths.append(t)

ap = []
for c in range(K):
    y = np.array([c in t for t in truths], dtype=int)
    ap.append(average_precision_score(y, probs[:, c]))
pred = probs.argmax(axis=1)
prec = []
for c in range(K):
    sel = pred == c
    prec.append(None if sel.sum() == 0 else sum(c in truths[i] for i in np.where(sel)[0]) / sel.sum())
conf = np.zeros((K, K))
for i in range(N):
    conf[truths[i][0], pred[i]] += 1
conf = conf / conf.sum(axis=1, keepdims=True)

print("ap", [repr(float(a)) for a in ap])
print("map", repr(float(np.mean(ap))))
print("precision", [None if p is None else repr(float(p)) for p in prec])
print("confusion", conf.tolist())
