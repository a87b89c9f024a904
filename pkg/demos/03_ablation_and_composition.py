# %% [markdown]
# # Feature ablation and training-set composition
#
# Small versions of the two experiment grids: drop one feature family at a
# time under document-level k-fold cross-validation, then vary how much
# in-source data is mixed into an out-of-source training set.

# %%
from framecrf.crf import TrainHyper
from framecrf.experiments import CompositionSpec, make_folds, run_ablation, run_composition
from framecrf.synth import generate_synthetic_corpus

corpus, lexicon, _ = generate_synthetic_corpus(800, seed=13)
hyper = TrainHyper(max_iter=60)

# %% [markdown]
# Folds are whole documents, balanced on per-frame counts.

# %%
plan = make_folds(corpus, 3, seed=13)
print(plan.balance)

# %%
ablation = run_ablation(corpus, lexicon, plan, hyper,
                        rows=["all features", "all but dep_path", "all but dependency parse"])
print(ablation.to_text())

# %% [markdown]
# Test on CLIO; train on a WIKI sample with and without a few CLIO documents
# from outside the test fold.

# %%
specs = [CompositionSpec((("WIKI", 0.8),)),
         CompositionSpec((("WIKI", 0.8), ("CLIO", 0.1))),
         CompositionSpec((("WIKI", 0.8), ("CLIO", 0.3)))]
composition = run_composition(corpus, lexicon, specs, "CLIO", k=3, seed=13, hyper=hyper)
print(composition.to_text())
