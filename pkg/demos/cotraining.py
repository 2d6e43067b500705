"""
Co-training two networks on noisy labels
========================================

Full runs on the 4-class blob scenario, comparing what happens to the
samples both networks reject: consistency training on two jittered views
("self"), pseudo-labels from the networks ("pseudo"), or ignoring them ("drop").
A plain cross-entropy pair ("none") is the baseline.
"""
from tripart import train
from tripart.scenario import acceptance_config, prepare_data

seed = 0
data = prepare_data(acceptance_config(seed))

for criterion, strategy in [("none", "self"), ("tripartition", "drop"),
                            ("tripartition", "pseudo"), ("tripartition", "self")]:
    cfg = acceptance_config(seed, criterion={"kind": criterion, "tau": 0.5})
    cfg.strategy.noisy_strategy = strategy
    res = train(cfg, data)
    last = res.traces[-1]
    best = max(res.traces, key=lambda t: t.test_acc_mean)
    print(f"{criterion:>12}/{strategy:<6} final {last.test_acc_mean:.4f}  best {best.test_acc_mean:.4f} (epoch {best.epoch})")

# The hard subset shrinks as the two networks come to agree.
res = train(acceptance_config(seed), data)
print("hard population by epoch:", [t.hard_population for t in res.traces if t.quality is not None][::6])
