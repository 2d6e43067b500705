"""
Splitting a noisy training set
==============================

After warm-up, two networks label every training sample. Tripartition
compares both predictions with the given label: agreement from both means
clean, disagreement from both means noisy, anything else is hard. The
small-loss and GMM criteria split on the loss alone.
"""
from tripart import gmm_partition, score_partition, small_loss_partition, tripartition
from tripart.cotrain import init_pair, predict_records, warm_up
from tripart.scenario import acceptance_config, prepare_data

cfg = acceptance_config(seed=0)
data = prepare_data(cfg)
print(f"{len(data.train)} training samples, {data.train.noisy_mask.mean():.1%} mislabeled")

states = warm_up(init_pair(cfg, 2, 4), data.train, cfg)
records, _ = predict_records(states, data.train)

for name, part in [
    ("tripartition", tripartition(records)),
    ("small_loss", small_loss_partition(records, keep_fraction=1 - cfg.noise.r)),
    ("gmm", gmm_partition(records, tau=0.5)),
]:
    q = score_partition(part, data.train)
    print(f"{name:>12}: sizes {part.sizes()}  clean purity {q.clean_purity:.3f}  "
          f"noisy purity {q.noisy_purity if q.noisy_purity is None else round(q.noisy_purity, 3)}")

# Mean normalized loss per Tripartition subset.
q = score_partition(tripartition(records), data.train)
for subset, s in q.loss_stats.items():
    print(subset, None if s.mean is None else round(s.mean, 3))
