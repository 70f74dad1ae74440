"""From raw (image, noun, adjective) tags to a balanced, split manifest.

The corpus below is small but trips every cleaning rule once; the removal
log shows which rule fired, on what, and how many images it cost.
"""

from collections import Counter

import numpy as np

from fap import SplitPlan, default_lexicon, make_split
from fap.core import Dataset
from fap.pipeline import TagRecord, build_dataset, split_counts

lexicon = default_lexicon()
counts = {
    "dog": {"young": 300, "old": 300, "good": 300, "bad": 250, "happy": 150, "sad": 19},
    "cat": {"young": 150, "old": 150, "good": 120, "bad": 99},
    "tree": {"small": 400, "big": 400, "new": 120, "old": 130},
    "city": {"busy": 200, "sleepy": 200},
    "man": {"young": 300, "old": 300, "good": 300, "bad": 300},
    "people": {"young": 300, "old": 300},
}
tags = [TagRecord(f"{n}-{a}-{k}", n, a) for n, adjs in counts.items() for a, c in adjs.items()
        for k in range(c)]

res = build_dataset(tags, lexicon, mode="and", seed=0)
for entry in res.log:
    print(f"{entry['rule']:<28}{entry['target']:<18}{entry['count']:>6}")

print(Counter((r.noun, r.aspect, r.polarity) for r in res.records))

# "or" mode is stricter about nouns with a single aspect
strict = build_dataset(tags, lexicon, mode="or", seed=0)
print("or mode keeps", sorted({r.noun for r in strict.records}))

# stratified 50/20/30 split; embeddings are not needed for this step
data = Dataset(lexicon, res.records, np.zeros((len(res.records), 0)))
data = make_split(data, SplitPlan(seed=0))
for cell, c in split_counts(data).items():
    print(cell, c["train"], c["dev"], c["test"])
