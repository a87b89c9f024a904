# %% [markdown]
# # Training the per-LU taggers and scoring them
#
# Train on the WIKI documents of a synthetic corpus, predict the CLIO
# documents, then score frame and role decisions at the four levels
# (DC, SC, DR, SR) with the breakdowns used in error analysis.

# %%
from framecrf.crf import TrainHyper
from framecrf.evaluation import full_report
from framecrf.experiments import sources_of
from framecrf.pipeline import predict_corpus, train_all
from framecrf.synth import generate_synthetic_corpus

corpus, lexicon, qmap = generate_synthetic_corpus(1000, seed=13)
by_source = sources_of(corpus)
print({src: len(docs) for src, docs in by_source.items()})

# %%
registry = train_all(by_source["WIKI"], lexicon, hyper=TrainHyper(max_iter=100))
for lu, model in sorted(registry.models.items()):
    print(f"{lu:15s} {len(model.label_set):3d} labels {len(model.dictionary):6d} features "
          f"{model.training.get('iterations')} iterations")

# %%
pred, diag = predict_corpus(by_source["CLIO"], registry)
print(diag)

# %% [markdown]
# Out-of-source scores.  Roles are matched with partial overlap; the strict
# cascade only credits roles of instances whose frame was right.

# %%
report = full_report(by_source["CLIO"], pred, lexicon, qmap)
print(report.to_text())

# %%
lenient = full_report(by_source["CLIO"], pred, lexicon, cascade="lenient")
for lv in ("DR", "SR"):
    print(lv, "strict", round(report.levels[lv].fmeasure, 3), "lenient", round(lenient.levels[lv].fmeasure, 3))
