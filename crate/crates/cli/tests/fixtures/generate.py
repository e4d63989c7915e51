"""Writes the synthetic pipeline fixture: 5 queries x 40 documents, 12 features."""

import numpy as np

rng = np.random.default_rng(20240607)
QUERIES = ["301", "302", "303", "304", "305"]
DOCS_PER_QUERY = 40

names = [
    "bodytf", "bodytfidf", "bodybm25", "bodylmir", "titlebm25", "anchorbm25",
    "inlinks", "outlinks", "pagerank", "urllen", "urlslash", "doclen",
]

run_lines, qrel_lines, feat_lines = [], [], []
for q in QUERIES:
    content = rng.normal(size=DOCS_PER_QUERY)
    link = 0.3 * content + np.sqrt(1 - 0.09) * rng.normal(size=DOCS_PER_QUERY)
    e = lambda s=1.0: s * rng.normal(size=DOCS_PER_QUERY)
    tf = 10 * np.exp(0.5 * content + 0.4 * e())
    feats = np.column_stack([
        tf,
        tf * (1 + 0.002 * e()),
        5 + 2 * content + e(),
        -20 + 3 * content + e(1.5),
        1 + 0.8 * content + e(),
        2 + 1.2 * content + 0.6 * link + e(),
        np.exp(1 + 0.8 * link + e(0.5)),
        10 + 2 * link + e(3),
        0.001 + 0.0002 * (link + e(0.5)),
        30 + e(5),
        3 + e(0.5),
        500 + 100 * content + e(150),
    ])
    rel = 0.8 * content + 0.5 * link + e(0.6)
    qrel = np.where(rel < 0.3, 0, np.where(rel < 1.2, 1, 2))
    score = 0.7 * content + 0.3 * link + e(0.5)
    order = np.argsort(-score, kind="stable")
    docs = [f"D{q}-{i:03d}" for i in range(DOCS_PER_QUERY)]
    for rank, i in enumerate(order, start=1):
        run_lines.append(f"{q} Q0 {docs[i]} {rank} {score[i]:.6f} synth")
    judged = rng.random(DOCS_PER_QUERY) < 0.7
    for i in range(DOCS_PER_QUERY):
        if judged[i]:
            qrel_lines.append(f"{q} 0 {docs[i]} {qrel[i]}")
    qrel_lines.append(f"{q} 0 D{q}-999 1")
    for i in rng.permutation(DOCS_PER_QUERY):
        cols = " ".join(f"{j + 1}:{feats[i, j]:.6g}" for j in range(len(names)))
        feat_lines.append(f"{qrel[i]} qid:{q} {cols} #docid = {docs[i]}")

def write(path, lines):
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")

write("run.txt", run_lines)
write("qrels.txt", qrel_lines)
write("features.txt", feat_lines)
write("schema.txt", [f"{j + 1} {n}" for j, n in enumerate(names)])
