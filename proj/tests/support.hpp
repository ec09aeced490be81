#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library's statistic or sampling code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "rbperm/blockdesign.hpp"
#include "rbperm/core.hpp"

namespace oracle {

using rbperm::Label;
using rbperm::LabelState;
using rbperm::PooledSample;

inline Eigen::MatrixXd gaussian_data(std::size_t n, std::size_t d, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = nd(gen);
    return m;
}

inline LabelState shuffled_labels(std::size_t n1, std::size_t n2, std::mt19937_64& gen) {
    std::vector<Label> v(n1, Label::A);
    v.insert(v.end(), n2, Label::B);
    std::shuffle(v.begin(), v.end(), gen);
    return LabelState(v);
}

inline std::vector<double> mean_diff(const Eigen::MatrixXd& z, const LabelState& labels) {
    std::vector<double> out(static_cast<std::size_t>(z.cols()), 0.0);
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        double sa = 0, sb = 0;
        int na = 0, nb = 0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            if (labels[static_cast<std::size_t>(i)] == Label::A) {
                sa += z(i, c);
                ++na;
            } else {
                sb += z(i, c);
                ++nb;
            }
        }
        out[static_cast<std::size_t>(c)] = sa / na - sb / nb;
    }
    return out;
}

inline Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& z, double bw) {
    const auto n = z.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            double d2 = 0;
            for (Eigen::Index c = 0; c < z.cols(); ++c) d2 += (z(i, c) - z(j, c)) * (z(i, c) - z(j, c));
            k(i, j) = std::exp(-d2 / (2 * bw * bw));
        }
    return k;
}

/// Unbiased MMD^2 by explicit double sums over each block.
inline double mmd2(const Eigen::MatrixXd& k, const LabelState& labels) {
    double xx = 0, yy = 0, xy = 0;
    double n1 = 0, n2 = 0;
    const auto n = static_cast<std::size_t>(k.rows());
    for (std::size_t i = 0; i < n; ++i) (labels[i] == Label::A ? n1 : n2) += 1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (labels[i] == Label::A && labels[j] == Label::A && i != j) xx += v;
            if (labels[i] == Label::B && labels[j] == Label::B && i != j) yy += v;
            if (labels[i] == Label::A && labels[j] == Label::B) xy += v;
        }
    return xx / (n1 * (n1 - 1)) + yy / (n2 * (n2 - 1)) - 2 * xy / (n1 * n2);
}

inline LabelState swapped(LabelState labels, std::size_t i, std::size_t j) {
    std::vector<Label> v = labels.values();
    std::swap(v[i], v[j]);
    return LabelState(v);
}

/// Admissible ordered pairs straight from the definition: A-labeled
/// representative i, B-labeled representative j, blocks of i and j forming
/// one of the admitted pairs in either order.
inline std::set<std::pair<std::size_t, std::size_t>> admissible_pairs(const rbperm::BlockDesign& design,
                                                                      const LabelState& labels) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i : design.representatives)
        for (std::size_t j : design.representatives) {
            if (labels[i] != Label::A || labels[j] != Label::B) continue;
            const auto bi = design.block_of[i], bj = design.block_of[j];
            for (const auto& [r, s] : design.pairs)
                if ((bi == r && bj == s) || (bi == s && bj == r)) out.insert({i, j});
        }
    return out;
}

/// Every set of pairwise disjoint pairs drawn from `pairs` (identity included),
/// each as a sorted vector.
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> disjoint_products(
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
    std::vector<std::pair<std::size_t, std::size_t>> current;
    std::set<std::size_t> used;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        out.push_back(current);
        for (std::size_t k = start; k < pairs.size(); ++k) {
            const auto [a, b] = pairs[k];
            if (used.count(a) || used.count(b)) continue;
            used.insert(a);
            used.insert(b);
            current.push_back(pairs[k]);
            rec(k + 1);
            current.pop_back();
            used.erase(a);
            used.erase(b);
        }
    };
    rec(0);
    return out;
}

/// Pearson chi-square p-value of observed counts against a uniform law.
template <typename Key>
double uniform_gof_pvalue(const std::map<Key, std::size_t>& counts, std::size_t categories, std::size_t draws) {
    const double expected = static_cast<double>(draws) / static_cast<double>(categories);
    double stat = 0.0;
    std::size_t seen = 0;
    for (const auto& [k, c] : counts) {
        stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
        ++seen;
    }
    stat += static_cast<double>(categories - seen) * expected;  // unseen categories
    return boost::math::cdf(boost::math::complement(
        boost::math::chi_squared(static_cast<double>(categories - 1)), stat));
}

}  // namespace oracle
