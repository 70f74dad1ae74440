"""How the two hierarchical metrics weigh rows.

Both metrics average within a group first and then across groups, so a
noun or cell with many rows counts no more than one with few.
"""

from fap.metrics import PredictionSet, aspect_f1_report, polarity_accuracy_report

# aspect prediction for one noun: gold (age, size), predicted (age, age)
p = PredictionSet(ids=[1, 2], nouns=["dog", "dog"], aspect_gold=["age", "size"],
                  aspect_pred=["age", "age"])
rep = aspect_f1_report(p)
print(rep["per_noun"]["dog"])  # age 2/3, size 0, noun 1/3

# polarity: a tiny perfect cell and a huge coin-flip cell under the same aspect
rows = [("dog", "age", 1, 1)] * 10
rows += [("cat", "age", 1, 1)] * 500 + [("cat", "age", -1, 1)] * 500
rows += [("tree", "size", -1, -1)] * 8 + [("tree", "size", 1, -1)] * 2
p = PredictionSet(ids=range(len(rows)), nouns=[r[0] for r in rows],
                  aspect_gold=[r[1] for r in rows], polarity_gold=[r[2] for r in rows],
                  polarity_pred=[r[3] for r in rows])
rep = polarity_accuracy_report(p)
for aspect, entry in rep["per_aspect"].items():
    print(aspect, entry["nouns"], "->", entry["score"])
print("overall", rep["overall"])  # (0.75 + 0.8) / 2 = 0.775; pooled rows would give ~0.51
