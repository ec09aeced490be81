#include "rbperm/core.hpp"

#include <algorithm>
#include <cmath>

namespace rbperm {

const char* to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument: return "invalid-argument";
        case Errc::swap_orientation: return "swap-orientation";
        case Errc::disjointness: return "disjointness";
        case Errc::degenerate_group: return "degenerate-group";
        case Errc::degenerate: return "degenerate";
        case Errc::unsupported_dimension: return "unsupported-dimension";
        case Errc::empty_swap_set: return "empty-swap-set";
        case Errc::representative_set_too_small: return "representative-set-too-small";
        case Errc::design: return "design";
        case Errc::degenerate_diagnostics: return "degenerate-diagnostics";
        case Errc::io: return "io";
    }
    return "unknown";
}

PooledSample::PooledSample(Eigen::MatrixXd data, std::size_t n1, std::size_t n2)
    : data_(std::move(data)), n1_(n1), n2_(n2) {
    if (n1 == 0 || n2 == 0) throw Error(Errc::invalid_argument, "group sizes must be positive");
    if (data_.cols() < 1) throw Error(Errc::invalid_argument, "dimension must be at least 1");
    if (static_cast<std::size_t>(data_.rows()) != n1 + n2)
        throw Error(Errc::invalid_argument, "row count does not equal n1 + n2");
    if (!data_.allFinite()) throw Error(Errc::invalid_argument, "observations must be finite");
}

double PooledSample::h() const noexcept {
    return 1.0 / static_cast<double>(n1_) + 1.0 / static_cast<double>(n2_);
}

LabelState::LabelState(std::vector<Label> labels)
    : labels_(std::move(labels)),
      count_a_(static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), Label::A))) {}

LabelState LabelState::blocked(std::size_t n1, std::size_t n2) {
    std::vector<Label> v(n1, Label::A);
    v.insert(v.end(), n2, Label::B);
    return LabelState(std::move(v));
}

std::size_t LabelState::count(Label l) const noexcept {
    return l == Label::A ? count_a_ : labels_.size() - count_a_;
}

void LabelState::swap_labels(std::size_t a_index, std::size_t b_index) {
    if (a_index >= labels_.size() || b_index >= labels_.size())
        throw Error(Errc::invalid_argument, "swap index out of range");
    if (labels_[a_index] != Label::A || labels_[b_index] != Label::B)
        throw Error(Errc::swap_orientation, "swap must pair an A-labeled with a B-labeled index");
    labels_[a_index] = Label::B;
    labels_[b_index] = Label::A;
}

void LabelState::check_against(const PooledSample& sample) const {
    if (size() != sample.size() || n1() != sample.n1())
        throw Error(Errc::invalid_argument, "labels do not match the sample's group sizes");
}

void RestrictedPermutation::validate(const LabelState& labels) const {
    std::vector<bool> used(labels.size(), false);
    for (const auto& s : swaps) {
        if (s.a >= labels.size() || s.b >= labels.size())
            throw Error(Errc::invalid_argument, "swap index out of range");
        if (labels[s.a] != Label::A || labels[s.b] != Label::B)
            throw Error(Errc::swap_orientation, "swap must pair an A-labeled with a B-labeled index");
        if (used[s.a] || used[s.b]) throw Error(Errc::disjointness, "swaps must be disjoint");
        used[s.a] = used[s.b] = true;
    }
}

IndexPermutation IndexPermutation::identity(std::size_t n) {
    IndexPermutation p;
    p.map.resize(n);
    for (std::size_t k = 0; k < n; ++k) p.map[k] = k;
    return p;
}

IndexPermutation IndexPermutation::from_swaps(const RestrictedPermutation& perm, std::size_t n) {
    auto p = identity(n);
    std::vector<bool> used(n, false);
    for (const auto& s : perm.swaps) {
        if (s.a >= n || s.b >= n) throw Error(Errc::invalid_argument, "swap index out of range");
        if (s.a == s.b || used[s.a] || used[s.b])
            throw Error(Errc::disjointness, "swaps must be disjoint");
        used[s.a] = used[s.b] = true;
        p.map[s.a] = s.b;
        p.map[s.b] = s.a;
    }
    return p;
}

bool IndexPermutation::is_identity() const noexcept {
    for (std::size_t k = 0; k < map.size(); ++k)
        if (map[k] != k) return false;
    return true;
}

IndexPermutation IndexPermutation::inverse() const {
    IndexPermutation inv;
    inv.map.assign(map.size(), map.size());
    for (std::size_t k = 0; k < map.size(); ++k) {
        if (map[k] >= map.size() || inv.map[map[k]] != map.size())
            throw Error(Errc::invalid_argument, "index map is not a bijection");
        inv.map[map[k]] = k;
    }
    return inv;
}

double effective_resolution(std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw Error(Errc::invalid_argument, "group sizes must be positive");
    return 1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2);
}

LabelState apply_permutation(const LabelState& labels, const RestrictedPermutation& perm) {
    perm.validate(labels);
    LabelState out = labels;
    for (const auto& s : perm.swaps) out.swap_labels(s.a, s.b);
    return out;
}

IndexPermutation compose_with_inverse(const RestrictedPermutation& perm_m,
                                      const RestrictedPermutation& perm_0, std::size_t n) {
    const auto m = IndexPermutation::from_swaps(perm_m, n);
    const auto zero_inv = IndexPermutation::from_swaps(perm_0, n).inverse();
    IndexPermutation out;
    out.map.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.map[k] = m.map[zero_inv.map[k]];
    return out;
}

LabelState apply_index_permutation(const LabelState& labels, const IndexPermutation& perm) {
    if (perm.size() != labels.size())
        throw Error(Errc::invalid_argument, "permutation size does not match labels");
    std::vector<Label> out(labels.size());
    for (std::size_t k = 0; k < perm.size(); ++k) out[perm.map[k]] = labels[k];
    return LabelState(std::move(out));
}

}  // namespace rbperm
