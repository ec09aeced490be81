#pragma once

#include <cstddef>
#include <vector>

#include "rbperm/blockdesign.hpp"
#include "rbperm/core.hpp"
#include "rbperm/rng.hpp"

namespace rbperm {

/// Distribution of the matching size k on a complete bipartite component
/// K_{a,b}. The number of k-matchings is m_k = C(a,k) C(b,k) k!, generated by
/// m_{k+1}/m_k = (a-k)(b-k)/(k+1) and renormalized as it goes so large
/// components never overflow.
struct ComponentMatchingLaw {
    std::size_t a = 0;
    std::size_t b = 0;
    std::vector<double> size_weights;  // sums to 1

    [[nodiscard]] std::size_t draw(Stream& stream) const;
};

ComponentMatchingLaw component_matching_counts(std::size_t a, std::size_t b);

/// Uniform draw from the set of all products of disjoint admissible
/// cross-swaps (identity included).
///
/// Components are vertex-disjoint, so that set is the direct product of the
/// per-component matching sets; each component independently draws a
/// matching size from its law, then k A-side and k B-side vertices without
/// replacement, then a uniform bijection between them.
class RestrictedSampler {
public:
    explicit RestrictedSampler(const SwapSet& swaps);

    [[nodiscard]] RestrictedPermutation operator()(Stream& stream) const;
    [[nodiscard]] const SwapSet& swap_set() const noexcept { return *swaps_; }

private:
    const SwapSet* swaps_;
    std::vector<ComponentMatchingLaw> laws_;
};

RestrictedPermutation sample_restricted(const SwapSet& swaps, Stream& stream);

enum class SingleSwapMode {
    swap_only,      // uniform over P
    with_identity,  // uniform over P plus the identity
};

RestrictedPermutation sample_single_swap(const SwapSet& swaps, SingleSwapMode mode, Stream& stream);

/// Uniform label vector with exactly n1 A's.
LabelState sample_full_relabeling(std::size_t n1, std::size_t n2, Stream& stream);

/// Uniform element of S_N (Fisher-Yates).
IndexPermutation sample_full_permutation(std::size_t n, Stream& stream);

}  // namespace rbperm
