"""
Label-noise transition matrices
===============================

Three ways to corrupt labels: uniform (symmetric), one fixed confusion per
class (pair-flip), and "realistic" noise where classes that a network finds
similar swap labels more often.
"""
import numpy as np

from tripart import (
    BlobSpec, build_pairflip, build_realistic, build_symmetric, corrupt_labels,
    extract_prototypes, gen_blobs, init_classifier, rank_pairs,
)
from tripart.net import OptimizerSpec
from tripart.scenario import train_plain

np.set_printoptions(precision=3, suppress=True)

print("symmetric, r=0.3\n", build_symmetric(4, 0.3).entries)
print("pair-flip, r=0.3\n", build_pairflip(4, 0.3).entries)

# 4 Gaussian blobs on a circle; classes 0 and 1 pulled toward each other.
data = gen_blobs(BlobSpec(n_classes=4, samples_per_class=300, overlap_pairs=[(0, 1, 0.6)], seed=0))

# Class prototypes are the columns of a trained network's last weight matrix.
probe = init_classifier([2, 32, 4], "relu", seed=0)
train_plain(probe, data, data.true_labels, OptimizerSpec(), epochs=30, batch_size=64)
ranking = rank_pairs(extract_prototypes(probe))
print("most similar pairs:", [(i, j, round(s, 3)) for i, j, s in ranking.pairs[:3]])

realistic = build_realistic(ranking, k=3, level_weights=[0.9, 0.6, 0.3], r=0.3)
print("realistic, r=0.3\n", realistic.entries)

noisy = corrupt_labels(data, realistic, seed=1)
print(f"flipped {noisy.noisy_mask.mean():.1%} of labels")
flips = np.zeros((4, 4), dtype=int)
np.add.at(flips, (noisy.true_labels, noisy.given_labels), 1)
print("true x given counts\n", flips)
