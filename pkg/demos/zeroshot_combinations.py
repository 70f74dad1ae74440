"""Predicting polarity for a noun-aspect pair never seen in training.

Dog images of the age aspect are all kept for testing. A per-noun-aspect
model has nothing to offer there; shared models can still transfer.
"""

from fap import (ModelSpec, SplitPlan, SynthConfig, default_lexicon, make_split, polarity_accuracy,
                 predict_dataset, synth_generate, train)
from fap.models import UntrainableCombinationError

lexicon = default_lexicon()
nouns = ("dog", "cat", "man")
cfg = SynthConfig(dim=16, nouns=nouns, aspects={n: ("evaluation", "age") for n in nouns},
                  images_per_cell=200, separation=4.0, noun_flip=False, seed=8)
data, _ = synth_generate(cfg, lexicon)
data = make_split(data, SplitPlan.zeroshot(holdouts=[("dog", "age")]))
test = data.subset(data.mask("test"))
print(len(test), "held-out images")

for family in ("lr_noun_agnostic", "lr_noun_specific", "lr_adj_noun", "concat_mlp", "tensor_cond"):
    model = train(ModelSpec(family, "polarity", seed=0, lr=1e-2, epochs=30), data)
    try:
        acc = polarity_accuracy(predict_dataset(model, test))
        print(f"{family:<18} {acc:.3f}")
    except (UntrainableCombinationError, LookupError) as exc:
        print(f"{family:<18} -   ({exc})")
