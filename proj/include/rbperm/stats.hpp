#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "rbperm/core.hpp"

namespace rbperm {

enum class Sidedness { one, two };
enum class StatisticKind { mean_diff, mmd2 };

// ---------------------------------------------------------------------------
// Difference in means

/// Group-mean difference mean(A) - mean(B), computed from scratch.
Eigen::VectorXd mean_diff_full(const PooledSample& sample, const LabelState& labels);

/// Running group sums; a committed cross-swap costs O(d).
class MeanDiffState {
public:
    MeanDiffState(const PooledSample& sample, LabelState labels);

    [[nodiscard]] Eigen::VectorXd delta() const;
    [[nodiscard]] const LabelState& labels() const noexcept { return labels_; }
    [[nodiscard]] const Eigen::VectorXd& sum_a() const noexcept { return sum_a_; }
    [[nodiscard]] const Eigen::VectorXd& sum_b() const noexcept { return sum_b_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] const PooledSample& sample() const noexcept { return *sample_; }

    /// delta' - delta = h (Z_j - Z_i) for the swap of A-labeled i with B-labeled j.
    [[nodiscard]] Eigen::VectorXd increment(std::size_t i, std::size_t j) const;
    void commit_swap(std::size_t i, std::size_t j);

private:
    const PooledSample* sample_;
    LabelState labels_;
    Eigen::VectorXd sum_a_;
    Eigen::VectorXd sum_b_;
    double h_;
};

inline Eigen::VectorXd mean_diff_increment(const MeanDiffState& state, std::size_t i, std::size_t j) {
    return state.increment(i, j);
}

/// Scalar statistic: Euclidean norm for d > 1; for d = 1 the signed
/// difference (one-sided) or its absolute value (two-sided).
double mean_diff_statistic(const Eigen::VectorXd& delta, Sidedness sided);

// ---------------------------------------------------------------------------
// Kernels

struct KernelMatrix {
    Eigen::MatrixXd values;
    double bandwidth = 0.0;  // Gaussian scale; 0 for non-Gaussian kernels

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

/// Either a fixed positive Gaussian bandwidth or the median heuristic.
struct Bandwidth {
    std::optional<double> fixed;

    static Bandwidth median() { return {}; }
    static Bandwidth value(double v) { return {v}; }
    [[nodiscard]] bool is_median() const noexcept { return !fixed.has_value(); }
};

/// Median of the nonzero pairwise Euclidean distances (i < j); 1.0 when all
/// points coincide.
double median_heuristic(const PooledSample& sample);

/// K[i,j] = exp(-|Z_i - Z_j|^2 / (2 bandwidth^2)).
KernelMatrix gaussian_kernel_matrix(const PooledSample& sample, Bandwidth bandwidth);

/// K[i,j] = <Z_i, Z_j>. Used for hand-checkable fixtures.
KernelMatrix linear_kernel_matrix(const PooledSample& sample);

// ---------------------------------------------------------------------------
// Unbiased MMD^2

/// Three-block unbiased estimator. Requires n1, n2 >= 2.
double mmd2_full(const KernelMatrix& kmat, const LabelState& labels);

/// Within-A minus cross kernel average for an A-labeled point, scaled as in
/// the U-statistic: 2/(n1(n1-1)) sum_{A \ i} K[i,.] - 2/(n1 n2) sum_B K[i,.].
double psi_a_to_b(const KernelMatrix& kmat, const LabelState& labels, std::size_t i);
/// Mirror of psi_a_to_b for a B-labeled point.
double psi_b_to_a(const KernelMatrix& kmat, const LabelState& labels, std::size_t j);

/// Exact change of MMD^2 when A-labeled i and B-labeled j exchange labels.
///
/// Writing a_x = sum_{A} K[x,.] and b_x = sum_{B} K[x,.] at the current
/// labeling, the change splits into a j-only score, an i-only score and a
/// pair term:
///   score_B(j) = (2/(n1(n1-1)) + 2/(n1 n2)) a_j - (2/(n2(n2-1)) + 2/(n1 n2)) (b_j - K[j,j])
///   score_A(i) = (2/(n1(n1-1)) + 2/(n1 n2)) (a_i - K[i,i]) - (2/(n2(n2-1)) + 2/(n1 n2)) b_i
///   change     = score_B(j) - score_A(i) - (2/(n1(n1-1)) + 2/(n2(n2-1)) + 4/(n1 n2)) K[i,j]
double mmd_one_swap_increment(const KernelMatrix& kmat, const LabelState& labels, std::size_t i,
                              std::size_t j);

/// Kernel row sums split by group plus the three U-statistic block sums.
/// Score and increment queries are O(1); a committed swap is O(N).
class MmdState {
public:
    MmdState(const KernelMatrix& kmat, LabelState labels);

    [[nodiscard]] double mmd2() const noexcept;
    [[nodiscard]] const LabelState& labels() const noexcept { return labels_; }
    [[nodiscard]] const Eigen::VectorXd& rowsum_a() const noexcept { return rowsum_a_; }
    [[nodiscard]] const Eigen::VectorXd& rowsum_b() const noexcept { return rowsum_b_; }
    [[nodiscard]] double within_a() const noexcept { return within_a_; }
    [[nodiscard]] double within_b() const noexcept { return within_b_; }
    [[nodiscard]] double cross() const noexcept { return cross_; }

    [[nodiscard]] double psi_a_to_b(std::size_t i) const;
    [[nodiscard]] double psi_b_to_a(std::size_t j) const;
    [[nodiscard]] double increment(std::size_t i, std::size_t j) const;
    void commit_swap(std::size_t i, std::size_t j);

private:
    const KernelMatrix* kmat_;
    LabelState labels_;
    Eigen::VectorXd rowsum_a_;
    Eigen::VectorXd rowsum_b_;
    double within_a_ = 0.0;
    double within_b_ = 0.0;
    double cross_ = 0.0;
    double n1_;
    double n2_;
};

// ---------------------------------------------------------------------------
// Finite-population moments

/// S^2 = 1/(N-1) sum (Z - mean)^2, per coordinate.
Eigen::VectorXd pooled_variance(const PooledSample& sample);

/// Exact variance of the mean difference under uniform relabeling with fixed
/// group sizes: h * S^2, with S^2 the (N-1)-denominator pooled variance.
/// Equivalently h * N/(N-1) * sigma^2 with the N-denominator variance.
/// Scalar data only.
double full_relabel_variance_mean(const PooledSample& sample);

// ---------------------------------------------------------------------------

/// Evaluates a scalar statistic at arbitrary labelings, either from scratch
/// or by walking cross-swaps away from a fixed base labeling.
class StatisticEvaluator {
public:
    /// `kmat` must outlive the evaluator and is required for MMD^2.
    StatisticEvaluator(const PooledSample& sample, const KernelMatrix* kmat, StatisticKind kind,
                       Sidedness sided, const LabelState& base);

    [[nodiscard]] StatisticKind kind() const noexcept { return kind_; }
    [[nodiscard]] const LabelState& base_labels() const noexcept { return base_labels_; }
    [[nodiscard]] double base_value() const noexcept { return base_value_; }

    [[nodiscard]] double evaluate_full(const LabelState& labels) const;

    /// Pairs the positions where `target` differs from the base labeling
    /// into cross-swaps and applies them one at a time.
    [[nodiscard]] double evaluate_incremental(const LabelState& target) const;

    /// Statistic change for a single cross-swap applied to the base labeling.
    [[nodiscard]] double swap_change(std::size_t i, std::size_t j) const;

    /// Running MMD state at the base labeling; null for the mean difference.
    [[nodiscard]] const MmdState* mmd_state() const noexcept { return mmd_state_ ? &*mmd_state_ : nullptr; }
    [[nodiscard]] const PooledSample& sample() const noexcept { return *sample_; }
    [[nodiscard]] const KernelMatrix* kernel() const noexcept { return kmat_; }
    [[nodiscard]] Sidedness sidedness() const noexcept { return sided_; }

    /// Evaluator re-based at another labeling.
    [[nodiscard]] StatisticEvaluator rebased(const LabelState& base) const;

private:
    const PooledSample* sample_;
    const KernelMatrix* kmat_;
    StatisticKind kind_;
    Sidedness sided_;
    LabelState base_labels_;
    std::optional<MeanDiffState> mean_state_;
    std::optional<MmdState> mmd_state_;
    Eigen::VectorXd kernel_totals_;  // K 1, so a full MMD^2 costs one matvec
    double base_value_ = 0.0;
};

}  // namespace rbperm
