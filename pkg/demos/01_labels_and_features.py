# %% [markdown]
# # From an annotated sentence to a CRF training instance
#
# One synthetic sentence is walked through the encoding the tagger learns:
# the per-LU label set, the BIO/target label sequence, and the five feature
# families seen by the CRF at each token.

# %%
from framecrf.corpus import iter_lu_occurrences, iter_sentences
from framecrf.features import FeatureConfig, raw_dependency_path, simplify_path, token_features
from framecrf.synth import generate_synthetic_corpus
from framecrf.tagging import build_label_set, encode_labels

corpus, lexicon, qmap = generate_synthetic_corpus(50, seed=13)

# pick a sentence whose frame has at least two roles
sentence, inst = next((s, f) for s in iter_sentences(corpus) for f in s.frames if len(f.roles) >= 2)
print(" ".join(t.form for t in sentence.tokens))
print(inst)

# %% [markdown]
# Each LU gets its own label set: `O`, then `T:`/`TI:` labels for every frame
# the LU may evoke (including OTHER) and `B-`/`I-` labels for every frame element.

# %%
labels = build_label_set(inst.lu, lexicon)
print(len(labels), "labels:", labels.labels)

seq = encode_labels(sentence, inst, labels)
for tok, y in zip(sentence.tokens, seq):
    print(f"{tok.index:3d} {tok.form:15s} {labels.labels[y]}")

# %% [markdown]
# Feature families for each token relative to the target head.  The dependency
# path keeps its last two edges; longer paths are marked with a leading `…`.

# %%
config = FeatureConfig()
rows = token_features(sentence, inst.target, config)
for tok, row in zip(sentence.tokens, rows):
    print(f"{tok.form:15s}", "  ".join(f"{k}={v}" for k, v in row.items()))

# %%
head = inst.target[0]
for tok in sentence.tokens[:4]:
    path = raw_dependency_path(sentence, tok.index, head)
    print(tok.form, path, "->", simplify_path(path))

# %% [markdown]
# Every occurrence of a listed LU becomes a candidate, so a sentence can feed
# several per-LU taggers.

# %%
for lu, target in iter_lu_occurrences(sentence, lexicon):
    print(lu, target)
