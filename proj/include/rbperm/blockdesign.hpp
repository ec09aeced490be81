#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rbperm/core.hpp"
#include "rbperm/stats.hpp"

namespace rbperm {

/// Label-independent partition of the pooled indices, the representative
/// set, and the block pairs between which cross-swaps are admitted.
///
/// Blocks are stored in ascending score order, so block 0 holds the lowest
/// scores. None of the construction steps take a LabelState.
struct BlockDesign {
    std::vector<std::vector<std::size_t>> blocks;
    Eigen::VectorXd scores;
    std::vector<std::size_t> block_of;         // index -> block id
    std::vector<std::size_t> representatives;  // sorted ascending
    std::vector<std::size_t> quotas;           // per block
    double rho = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    [[nodiscard]] std::size_t num_blocks() const noexcept { return blocks.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return block_of.size(); }
    [[nodiscard]] bool is_representative(std::size_t i) const;
};

/// Pooled scalar score used for quantile blocking: the value itself for
/// d = 1, otherwise the projection onto the first principal axis of the
/// centered pooled data (sign fixed so the largest-magnitude loading is
/// positive).
Eigen::VectorXd pooled_scores(const PooledSample& sample);

/// Equal-frequency bins of `scores` (ties broken by index); sizes differ by
/// at most one, with the larger bins first.
BlockDesign blocks_from_scores(Eigen::VectorXd scores, std::size_t b);

BlockDesign quantile_blocks(const PooledSample& sample, std::size_t b);

/// Blocks on kernel mean scores s_i = (1/N) sum_j K[i,j].
BlockDesign kernel_score_blocks(const KernelMatrix& kmat, std::size_t b);

/// Largest-remainder apportionment of `total` proportional to `sizes`;
/// ties in the remainder go to the lower block index.
std::vector<std::size_t> largest_remainder_quotas(const std::vector<std::size_t>& sizes,
                                                  std::size_t total);

/// Fills representatives: floor(rho N) indices split into per-block quotas,
/// drawn uniformly without replacement within each block.
BlockDesign select_representatives(BlockDesign design, double rho, std::uint64_t seed);

/// Pairs block 0 with block b-1, 1 with b-2, ...; with odd b the middle
/// block is left unpaired.
BlockDesign complementary_pairs(BlockDesign design);

/// Complete bipartite piece of the swap graph: every (a, b) in
/// a_side x b_side is admissible, and pieces share no vertices.
struct SwapComponent {
    std::vector<std::size_t> a_side;
    std::vector<std::size_t> b_side;

    [[nodiscard]] std::size_t num_pairs() const noexcept { return a_side.size() * b_side.size(); }
};

/// Admissible ordered cross-swaps, stored by component. Pairs are indexed
/// component-major, A-side-major within a component.
struct SwapSet {
    std::vector<SwapComponent> components;
    std::size_t representative_count = 0;

    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }
    [[nodiscard]] Swap pair_at(std::size_t k) const;
    [[nodiscard]] std::vector<Swap> pairs() const;

    template <typename Fn>
    void for_each_pair(Fn&& fn) const {
        for (const auto& c : components)
            for (std::size_t a : c.a_side)
                for (std::size_t b : c.b_side) fn(Swap{a, b});
    }
};

/// For each admitted pair (r, s) the components are
/// (A ∩ R ∩ B_r) x (B ∩ R ∩ B_s) and (A ∩ R ∩ B_s) x (B ∩ R ∩ B_r).
/// Empty components are dropped. Throws empty_swap_set when nothing is
/// admissible.
SwapSet build_swap_set(const BlockDesign& design, const LabelState& labels);

}  // namespace rbperm
