"""The hierarchical prior: geometric sparsity weights and exact geometry.

Draws from the prior over (index, link), checks the 10:1 geometric ladder
on support size and link dimension, and cross-checks the closed-form face
measures and coefficient-ball volumes against Monte-Carlo integration.
"""

import numpy as np

from sparseindex.prior import ball_volume, face_measure, sample_prior

rng = np.random.default_rng(0)

sizes = np.empty(50_000, dtype=int)
ms = np.empty(50_000, dtype=int)
for i in range(sizes.size):
    index, link = sample_prior(p=6, n=12, C=1e100, rng=rng)
    sizes[i] = index.k
    ms[i] = link.m

print("prior draw frequencies (p=6, n=12):")
print(f"  P(|I|=1)/P(|I|=2) = {np.mean(sizes == 1) / np.mean(sizes == 2):.2f}  (exact: 10)")
print(f"  P(m=1)/P(m=2)     = {np.mean(ms == 1) / np.mean(ms == 2):.2f}  (exact: 10)")

print("\ncoefficient-ball volumes, closed form vs Monte Carlo:")
for m, L in [(2, 1.0), (3, 2.0)]:
    j = np.arange(1, m + 1)
    pts = rng.uniform(-1, 1, size=(10**6, m)) * (L / j)
    mc = np.mean((np.abs(pts) * j).sum(axis=1) <= L) * np.prod(2 * L / j)
    print(f"  m={m}, L={L}: exp(closed form) = {np.exp(ball_volume(m, L)):.4f}, MC = {mc:.4f}")

print("\nface measures of the signed l1-sphere (sign convention), vs MC:")
for k in (2, 3):
    u = rng.uniform(0, 1, size=(10**6, k - 1))
    mc = 2.0 ** (k - 1) * np.sqrt(k) * np.mean(u.sum(axis=1) <= 1.0)
    print(f"  k={k}: exp(closed form) = {np.exp(face_measure(k)):.4f}, MC = {mc:.4f}")
