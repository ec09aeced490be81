#include "rbperm/blockdesign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "rbperm/rng.hpp"

namespace rbperm {

bool BlockDesign::is_representative(std::size_t i) const {
    return std::binary_search(representatives.begin(), representatives.end(), i);
}

Eigen::VectorXd pooled_scores(const PooledSample& sample) {
    if (sample.dim() == 1) return sample.data().col(0);
    const Eigen::RowVectorXd mean = sample.data().colwise().mean();
    const Eigen::MatrixXd centered = sample.data().rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // Eigenvalues ascend; the last column is the principal axis.
    Eigen::VectorXd axis = solver.eigenvectors().col(cov.cols() - 1);
    Eigen::Index lead = 0;
    axis.cwiseAbs().maxCoeff(&lead);
    if (axis(lead) < 0.0) axis = -axis;
    return centered * axis;
}

BlockDesign blocks_from_scores(Eigen::VectorXd scores, std::size_t b) {
    const auto n = static_cast<std::size_t>(scores.size());
    if (b < 2) throw Error(Errc::invalid_argument, "need at least two blocks");
    if (b > n) throw Error(Errc::invalid_argument, "more blocks than observations");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return scores(static_cast<Eigen::Index>(x)) < scores(static_cast<Eigen::Index>(y));
    });

    BlockDesign design;
    design.scores = std::move(scores);
    design.blocks.resize(b);
    design.block_of.resize(n);
    const std::size_t base = n / b;
    const std::size_t extra = n % b;
    std::size_t pos = 0;
    for (std::size_t r = 0; r < b; ++r) {
        const std::size_t len = base + (r < extra ? 1 : 0);
        for (std::size_t k = 0; k < len; ++k, ++pos) {
            design.blocks[r].push_back(order[pos]);
            design.block_of[order[pos]] = r;
        }
        std::sort(design.blocks[r].begin(), design.blocks[r].end());
    }
    return design;
}

BlockDesign quantile_blocks(const PooledSample& sample, std::size_t b) {
    return blocks_from_scores(pooled_scores(sample), b);
}

BlockDesign kernel_score_blocks(const KernelMatrix& kmat, std::size_t b) {
    Eigen::VectorXd s = kmat.values.rowwise().mean();
    return blocks_from_scores(std::move(s), b);
}

std::vector<std::size_t> largest_remainder_quotas(const std::vector<std::size_t>& sizes,
                                                  std::size_t total) {
    const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (n == 0) throw Error(Errc::invalid_argument, "blocks are empty");
    if (total > n) throw Error(Errc::invalid_argument, "quota total exceeds population");

    std::vector<std::size_t> quotas(sizes.size());
    std::vector<std::size_t> remainder(sizes.size());  // numerator over n
    std::size_t assigned = 0;
    for (std::size_t r = 0; r < sizes.size(); ++r) {
        quotas[r] = total * sizes[r] / n;
        remainder[r] = total * sizes[r] % n;
        assigned += quotas[r];
    }
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++quotas[order[k]];
    return quotas;
}

BlockDesign select_representatives(BlockDesign design, double rho, std::uint64_t seed) {
    if (!(rho > 0.0 && rho <= 1.0)) throw Error(Errc::invalid_argument, "rho must lie in (0, 1]");
    const std::size_t n = design.size();
    const auto total = static_cast<std::size_t>(std::floor(rho * static_cast<double>(n)));
    if (total < 2)
        throw Error(Errc::representative_set_too_small, "floor(rho N) must be at least 2");

    std::vector<std::size_t> sizes;
    sizes.reserve(design.blocks.size());
    for (const auto& blk : design.blocks) sizes.push_back(blk.size());
    design.quotas = largest_remainder_quotas(sizes, total);
    design.rho = rho;

    Stream stream(seed);
    design.representatives.clear();
    for (std::size_t r = 0; r < design.blocks.size(); ++r) {
        std::vector<std::size_t> members = design.blocks[r];
        const std::size_t q = design.quotas[r];
        for (std::size_t k = 0; k < q; ++k) {
            const auto pick = k + static_cast<std::size_t>(stream.below(members.size() - k));
            std::swap(members[k], members[pick]);
            design.representatives.push_back(members[k]);
        }
    }
    std::sort(design.representatives.begin(), design.representatives.end());
    return design;
}

BlockDesign complementary_pairs(BlockDesign design) {
    const std::size_t b = design.num_blocks();
    if (b < 2) throw Error(Errc::invalid_argument, "pairing needs at least two blocks");
    design.pairs.clear();
    for (std::size_t r = 0; r < b / 2; ++r) design.pairs.emplace_back(r, b - 1 - r);
    return design;
}

std::size_t SwapSet::size() const noexcept {
    std::size_t total = 0;
    for (const auto& c : components) total += c.num_pairs();
    return total;
}

Swap SwapSet::pair_at(std::size_t k) const {
    for (const auto& c : components) {
        if (k < c.num_pairs()) return {c.a_side[k / c.b_side.size()], c.b_side[k % c.b_side.size()]};
        k -= c.num_pairs();
    }
    throw Error(Errc::invalid_argument, "pair index out of range");
}

std::vector<Swap> SwapSet::pairs() const {
    std::vector<Swap> out;
    out.reserve(size());
    for_each_pair([&](Swap s) { out.push_back(s); });
    return out;
}

SwapSet build_swap_set(const BlockDesign& design, const LabelState& labels) {
    if (labels.size() != design.size())
        throw Error(Errc::invalid_argument, "labels do not match the design");
    if (design.representatives.empty())
        throw Error(Errc::invalid_argument, "design has no representatives");

    const std::size_t b = design.num_blocks();
    std::vector<std::vector<std::size_t>> reps_a(b), reps_b(b);
    for (std::size_t i : design.representatives)
        (labels[i] == Label::A ? reps_a : reps_b)[design.block_of[i]].push_back(i);

    SwapSet set;
    set.representative_count = design.representatives.size();
    auto add = [&](std::size_t from, std::size_t to) {
        if (!reps_a[from].empty() && !reps_b[to].empty())
            set.components.push_back({reps_a[from], reps_b[to]});
    };
    for (const auto& [r, s] : design.pairs) {
        if (r == s || r >= b || s >= b) throw Error(Errc::invalid_argument, "invalid block pair");
        add(r, s);
        add(s, r);
    }
    if (set.empty()) throw Error(Errc::empty_swap_set, "no admissible cross-swaps");
    return set;
}

}  // namespace rbperm
