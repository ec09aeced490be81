#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rbperm {

enum class Errc {
    invalid_argument,
    swap_orientation,
    disjointness,
    degenerate_group,
    degenerate,
    unsupported_dimension,
    empty_swap_set,
    representative_set_too_small,
    design,
    degenerate_diagnostics,
    io,
};

const char* to_string(Errc code) noexcept;

/// Library error carrying a category code; callers dispatch on `code()`.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

enum class Label : std::uint8_t { A, B };

inline Label other(Label l) noexcept { return l == Label::A ? Label::B : Label::A; }

/// N observations (rows) in d dimensions with fixed group sizes.
/// Observations never move; permutations act on labels only.
class PooledSample {
public:
    PooledSample(Eigen::MatrixXd data, std::size_t n1, std::size_t n2);

    [[nodiscard]] const Eigen::MatrixXd& data() const noexcept { return data_; }
    [[nodiscard]] std::size_t size() const noexcept { return n1_ + n2_; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.cols()); }
    [[nodiscard]] std::size_t n1() const noexcept { return n1_; }
    [[nodiscard]] std::size_t n2() const noexcept { return n2_; }
    [[nodiscard]] double h() const noexcept;

    [[nodiscard]] auto row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

private:
    Eigen::MatrixXd data_;
    std::size_t n1_;
    std::size_t n2_;
};

class LabelState {
public:
    LabelState() = default;
    explicit LabelState(std::vector<Label> labels);

    /// n1 A's followed by n2 B's.
    static LabelState blocked(std::size_t n1, std::size_t n2);

    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] Label operator[](std::size_t i) const { return labels_[i]; }
    [[nodiscard]] std::size_t count(Label l) const noexcept;
    [[nodiscard]] std::size_t n1() const noexcept { return count(Label::A); }
    [[nodiscard]] std::size_t n2() const noexcept { return count(Label::B); }
    [[nodiscard]] const std::vector<Label>& values() const noexcept { return labels_; }

    /// Exchanges the labels of an A-labeled and a B-labeled index.
    void swap_labels(std::size_t a_index, std::size_t b_index);

    /// Throws unless the labels have exactly the sample's group sizes.
    void check_against(const PooledSample& sample) const;

    friend bool operator==(const LabelState&, const LabelState&) = default;

private:
    std::vector<Label> labels_;
    std::size_t count_a_ = 0;
};

/// Ordered cross-swap: `a` is A-labeled, `b` is B-labeled at the time of use.
struct Swap {
    std::size_t a;
    std::size_t b;
    friend bool operator==(const Swap&, const Swap&) = default;
    friend auto operator<=>(const Swap&, const Swap&) = default;
};

/// A product of disjoint cross-swaps. The empty set is the identity.
struct RestrictedPermutation {
    std::vector<Swap> swaps;

    [[nodiscard]] std::size_t size() const noexcept { return swaps.size(); }
    [[nodiscard]] bool is_identity() const noexcept { return swaps.empty(); }

    /// Throws on overlapping indices or on a pair whose orientation does
    /// not match `labels`.
    void validate(const LabelState& labels) const;
};

/// General permutation of indices: `map[k]` is the image of k.
struct IndexPermutation {
    std::vector<std::size_t> map;

    static IndexPermutation identity(std::size_t n);
    static IndexPermutation from_swaps(const RestrictedPermutation& perm, std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return map.size(); }
    [[nodiscard]] bool is_identity() const noexcept;
    [[nodiscard]] IndexPermutation inverse() const;

    friend bool operator==(const IndexPermutation&, const IndexPermutation&) = default;
};

/// h = 1/n1 + 1/n2.
double effective_resolution(std::size_t n1, std::size_t n2);

LabelState apply_permutation(const LabelState& labels, const RestrictedPermutation& perm);

/// sigma_m o sigma_0^{-1} as an explicit index mapping.
IndexPermutation compose_with_inverse(const RestrictedPermutation& perm_m,
                                      const RestrictedPermutation& perm_0, std::size_t n);

/// Labels induced on the observations when the data vector is permuted by
/// `perm` while the label vector stays put: index perm(k) receives labels[k].
LabelState apply_index_permutation(const LabelState& labels, const IndexPermutation& perm);

}  // namespace rbperm
