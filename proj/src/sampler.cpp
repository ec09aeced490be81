#include "rbperm/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

namespace rbperm {

namespace {

/// First `k` entries become a uniform k-subset in uniform order.
void partial_shuffle(std::vector<std::size_t>& v, std::size_t k, Stream& stream) {
    for (std::size_t t = 0; t < k; ++t) {
        const auto pick = t + static_cast<std::size_t>(stream.below(v.size() - t));
        std::swap(v[t], v[pick]);
    }
}

#ifndef NDEBUG
bool disjoint(const RestrictedPermutation& perm, std::size_t n) {
    std::vector<bool> used(n, false);
    for (const auto& s : perm.swaps) {
        if (s.a >= n || s.b >= n || used[s.a] || used[s.b]) return false;
        used[s.a] = used[s.b] = true;
    }
    return true;
}
#endif

}  // namespace

ComponentMatchingLaw component_matching_counts(std::size_t a, std::size_t b) {
    ComponentMatchingLaw law{a, b, {}};
    const std::size_t kmax = std::min(a, b);
    law.size_weights.resize(kmax + 1);
    law.size_weights[0] = 1.0;
    for (std::size_t k = 0; k < kmax; ++k) {
        law.size_weights[k + 1] = law.size_weights[k] * static_cast<double>(a - k) *
                                  static_cast<double>(b - k) / static_cast<double>(k + 1);
        if (law.size_weights[k + 1] > 1e250) {
            for (std::size_t t = 0; t <= k + 1; ++t) law.size_weights[t] *= 1e-250;
        }
    }
    const double total = std::accumulate(law.size_weights.begin(), law.size_weights.end(), 0.0);
    for (auto& w : law.size_weights) w /= total;
    return law;
}

std::size_t ComponentMatchingLaw::draw(Stream& stream) const {
    const double u = stream.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < size_weights.size(); ++k) {
        acc += size_weights[k];
        if (u < acc) return k;
    }
    // Rounding left u above the final partial sum; take the last nonzero size.
    for (std::size_t k = size_weights.size(); k-- > 0;)
        if (size_weights[k] > 0.0) return k;
    return 0;
}

RestrictedSampler::RestrictedSampler(const SwapSet& swaps) : swaps_(&swaps) {
    laws_.reserve(swaps.components.size());
    for (const auto& c : swaps.components)
        laws_.push_back(component_matching_counts(c.a_side.size(), c.b_side.size()));
}

RestrictedPermutation RestrictedSampler::operator()(Stream& stream) const {
    RestrictedPermutation perm;
    std::vector<std::size_t> a_pool, b_pool;
    for (std::size_t c = 0; c < laws_.size(); ++c) {
        const auto& comp = swaps_->components[c];
        const std::size_t k = laws_[c].draw(stream);
        if (k == 0) continue;
        a_pool = comp.a_side;
        b_pool = comp.b_side;
        // Both partial shuffles yield uniformly ordered k-subsets, so pairing
        // them position by position is a uniform bijection.
        partial_shuffle(a_pool, k, stream);
        partial_shuffle(b_pool, k, stream);
        for (std::size_t t = 0; t < k; ++t) perm.swaps.push_back({a_pool[t], b_pool[t]});
    }
    assert(perm.size() <= swaps_->representative_count / 2);
#ifndef NDEBUG
    std::size_t max_index = 0;
    for (const auto& s : perm.swaps) max_index = std::max({max_index, s.a + 1, s.b + 1});
    assert(disjoint(perm, max_index));
#endif
    return perm;
}

RestrictedPermutation sample_restricted(const SwapSet& swaps, Stream& stream) {
    return RestrictedSampler(swaps)(stream);
}

RestrictedPermutation sample_single_swap(const SwapSet& swaps, SingleSwapMode mode, Stream& stream) {
    const std::size_t p = swaps.size();
    if (p == 0) throw Error(Errc::empty_swap_set, "no admissible cross-swaps");
    const std::size_t outcomes = mode == SingleSwapMode::with_identity ? p + 1 : p;
    const auto k = static_cast<std::size_t>(stream.below(outcomes));
    RestrictedPermutation perm;
    if (k < p) perm.swaps.push_back(swaps.pair_at(k));
    return perm;
}

LabelState sample_full_relabeling(std::size_t n1, std::size_t n2, Stream& stream) {
    std::vector<Label> labels(n1, Label::A);
    labels.insert(labels.end(), n2, Label::B);
    for (std::size_t t = labels.size(); t > 1; --t) {
        const auto pick = static_cast<std::size_t>(stream.below(t));
        std::swap(labels[t - 1], labels[pick]);
    }
    return LabelState(std::move(labels));
}

IndexPermutation sample_full_permutation(std::size_t n, Stream& stream) {
    auto perm = IndexPermutation::identity(n);
    for (std::size_t t = n; t > 1; --t) {
        const auto pick = static_cast<std::size_t>(stream.below(t));
        std::swap(perm.map[t - 1], perm.map[pick]);
    }
    return perm;
}

}  // namespace rbperm
