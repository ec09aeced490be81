#include "rbperm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rbperm {

namespace {

using Idx = Eigen::Index;

inline Idx ix(std::size_t i) { return static_cast<Idx>(i); }

void check_orientation(const LabelState& labels, std::size_t i, std::size_t j) {
    if (i >= labels.size() || j >= labels.size())
        throw Error(Errc::invalid_argument, "swap index out of range");
    if (labels[i] != Label::A || labels[j] != Label::B)
        throw Error(Errc::swap_orientation, "swap must pair an A-labeled with a B-labeled index");
}

void require_mmd_groups(std::size_t n1, std::size_t n2) {
    if (n1 < 2 || n2 < 2)
        throw Error(Errc::degenerate_group, "unbiased MMD^2 needs at least two points per group");
}

Eigen::VectorXd indicator(const LabelState& labels, Label which) {
    Eigen::VectorXd v(ix(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) v(ix(i)) = labels[i] == which ? 1.0 : 0.0;
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------

Eigen::VectorXd mean_diff_full(const PooledSample& sample, const LabelState& labels) {
    labels.check_against(sample);
    Eigen::VectorXd sa = Eigen::VectorXd::Zero(ix(sample.dim()));
    Eigen::VectorXd sb = Eigen::VectorXd::Zero(ix(sample.dim()));
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (labels[i] == Label::A)
            sa += sample.row(i).transpose();
        else
            sb += sample.row(i).transpose();
    }
    return sa / static_cast<double>(sample.n1()) - sb / static_cast<double>(sample.n2());
}

MeanDiffState::MeanDiffState(const PooledSample& sample, LabelState labels)
    : sample_(&sample),
      labels_(std::move(labels)),
      sum_a_(Eigen::VectorXd::Zero(ix(sample.dim()))),
      sum_b_(Eigen::VectorXd::Zero(ix(sample.dim()))),
      h_(sample.h()) {
    labels_.check_against(sample);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (labels_[i] == Label::A)
            sum_a_ += sample.row(i).transpose();
        else
            sum_b_ += sample.row(i).transpose();
    }
}

Eigen::VectorXd MeanDiffState::delta() const {
    return sum_a_ / static_cast<double>(sample_->n1()) - sum_b_ / static_cast<double>(sample_->n2());
}

Eigen::VectorXd MeanDiffState::increment(std::size_t i, std::size_t j) const {
    check_orientation(labels_, i, j);
    return h_ * (sample_->row(j) - sample_->row(i)).transpose();
}

void MeanDiffState::commit_swap(std::size_t i, std::size_t j) {
    check_orientation(labels_, i, j);
    const Eigen::VectorXd move = (sample_->row(j) - sample_->row(i)).transpose();
    sum_a_ += move;
    sum_b_ -= move;
    labels_.swap_labels(i, j);
}

double mean_diff_statistic(const Eigen::VectorXd& delta, Sidedness sided) {
    if (delta.size() == 1) return sided == Sidedness::one ? delta(0) : std::abs(delta(0));
    return delta.norm();
}

// ---------------------------------------------------------------------------

double median_heuristic(const PooledSample& sample) {
    const std::size_t n = sample.size();
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dist = (sample.row(i) - sample.row(j)).norm();
            if (dist > 0.0) dists.push_back(dist);
        }
    if (dists.empty()) return 1.0;
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    const double upper = dists[mid];
    if (dists.size() % 2 == 1) return upper;
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

KernelMatrix gaussian_kernel_matrix(const PooledSample& sample, Bandwidth bandwidth) {
    double bw = 0.0;
    if (bandwidth.is_median()) {
        bw = median_heuristic(sample);
    } else {
        bw = *bandwidth.fixed;
        if (!(bw > 0.0) || !std::isfinite(bw))
            throw Error(Errc::invalid_argument, "bandwidth must be a positive finite number");
    }
    const auto n = ix(sample.size());
    const Eigen::VectorXd sq = sample.data().rowwise().squaredNorm();
    Eigen::MatrixXd gram = sample.data() * sample.data().transpose();
    KernelMatrix k{Eigen::MatrixXd(n, n), bw};
    const double scale = -1.0 / (2.0 * bw * bw);
    for (Idx j = 0; j < n; ++j) {
        k.values(j, j) = 1.0;
        for (Idx i = j + 1; i < n; ++i) {
            const double d2 = std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j));
            const double v = std::exp(scale * d2);
            k.values(i, j) = v;
            k.values(j, i) = v;
        }
    }
    return k;
}

KernelMatrix linear_kernel_matrix(const PooledSample& sample) {
    return KernelMatrix{sample.data() * sample.data().transpose(), 0.0};
}

// ---------------------------------------------------------------------------

double mmd2_full(const KernelMatrix& kmat, const LabelState& labels) {
    if (kmat.size() != labels.size())
        throw Error(Errc::invalid_argument, "kernel size does not match labels");
    const auto n1 = static_cast<double>(labels.n1());
    const auto n2 = static_cast<double>(labels.n2());
    require_mmd_groups(labels.n1(), labels.n2());

    const Eigen::VectorXd a = indicator(labels, Label::A);
    const Eigen::VectorXd b = indicator(labels, Label::B);
    const Eigen::VectorXd ka = kmat.values * a;
    const Eigen::VectorXd diag = kmat.values.diagonal();
    const double within_a = a.dot(ka) - a.dot(diag);
    const double cross = b.dot(ka);
    const double within_b = b.dot(kmat.values * b) - b.dot(diag);
    return within_a / (n1 * (n1 - 1.0)) + within_b / (n2 * (n2 - 1.0)) - 2.0 * cross / (n1 * n2);
}

double psi_a_to_b(const KernelMatrix& kmat, const LabelState& labels, std::size_t i) {
    if (i >= labels.size() || labels[i] != Label::A)
        throw Error(Errc::swap_orientation, "psi_a_to_b needs an A-labeled index");
    const auto n1 = static_cast<double>(labels.n1());
    const auto n2 = static_cast<double>(labels.n2());
    require_mmd_groups(labels.n1(), labels.n2());
    double within = 0.0, cross = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == Label::A) {
            if (k != i) within += kmat(i, k);
        } else {
            cross += kmat(i, k);
        }
    }
    return 2.0 / (n1 * (n1 - 1.0)) * within - 2.0 / (n1 * n2) * cross;
}

double psi_b_to_a(const KernelMatrix& kmat, const LabelState& labels, std::size_t j) {
    if (j >= labels.size() || labels[j] != Label::B)
        throw Error(Errc::swap_orientation, "psi_b_to_a needs a B-labeled index");
    const auto n1 = static_cast<double>(labels.n1());
    const auto n2 = static_cast<double>(labels.n2());
    require_mmd_groups(labels.n1(), labels.n2());
    double within = 0.0, cross = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == Label::B) {
            if (k != j) within += kmat(j, k);
        } else {
            cross += kmat(j, k);
        }
    }
    return 2.0 / (n2 * (n2 - 1.0)) * within - 2.0 / (n1 * n2) * cross;
}

namespace {

struct SwapCoefficients {
    double within_a;  // 2/(n1(n1-1))
    double within_b;  // 2/(n2(n2-1))
    double cross;     // 2/(n1 n2)
};

SwapCoefficients swap_coefficients(double n1, double n2) {
    return {2.0 / (n1 * (n1 - 1.0)), 2.0 / (n2 * (n2 - 1.0)), 2.0 / (n1 * n2)};
}

double exact_swap_change(const SwapCoefficients& c, double a_i, double b_i, double a_j, double b_j,
                         double k_ii, double k_jj, double k_ij) {
    const double score_b = (c.within_a + c.cross) * a_j - (c.within_b + c.cross) * (b_j - k_jj);
    const double score_a = (c.within_a + c.cross) * (a_i - k_ii) - (c.within_b + c.cross) * b_i;
    return score_b - score_a - (c.within_a + c.within_b + 2.0 * c.cross) * k_ij;
}

}  // namespace

double mmd_one_swap_increment(const KernelMatrix& kmat, const LabelState& labels, std::size_t i,
                              std::size_t j) {
    check_orientation(labels, i, j);
    require_mmd_groups(labels.n1(), labels.n2());
    double a_i = 0.0, b_i = 0.0, a_j = 0.0, b_j = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == Label::A) {
            a_i += kmat(i, k);
            a_j += kmat(j, k);
        } else {
            b_i += kmat(i, k);
            b_j += kmat(j, k);
        }
    }
    const auto c = swap_coefficients(static_cast<double>(labels.n1()), static_cast<double>(labels.n2()));
    return exact_swap_change(c, a_i, b_i, a_j, b_j, kmat(i, i), kmat(j, j), kmat(i, j));
}

MmdState::MmdState(const KernelMatrix& kmat, LabelState labels)
    : kmat_(&kmat),
      labels_(std::move(labels)),
      n1_(static_cast<double>(labels_.n1())),
      n2_(static_cast<double>(labels_.n2())) {
    if (kmat.size() != labels_.size())
        throw Error(Errc::invalid_argument, "kernel size does not match labels");
    require_mmd_groups(labels_.n1(), labels_.n2());
    const Eigen::VectorXd a = indicator(labels_, Label::A);
    const Eigen::VectorXd b = indicator(labels_, Label::B);
    rowsum_a_ = kmat.values * a;
    rowsum_b_ = kmat.values * b;
    const Eigen::VectorXd diag = kmat.values.diagonal();
    within_a_ = a.dot(rowsum_a_) - a.dot(diag);
    within_b_ = b.dot(rowsum_b_) - b.dot(diag);
    cross_ = a.dot(rowsum_b_);
}

double MmdState::mmd2() const noexcept {
    return within_a_ / (n1_ * (n1_ - 1.0)) + within_b_ / (n2_ * (n2_ - 1.0)) - 2.0 * cross_ / (n1_ * n2_);
}

double MmdState::psi_a_to_b(std::size_t i) const {
    if (i >= labels_.size() || labels_[i] != Label::A)
        throw Error(Errc::swap_orientation, "psi_a_to_b needs an A-labeled index");
    const auto c = swap_coefficients(n1_, n2_);
    return c.within_a * (rowsum_a_(ix(i)) - (*kmat_)(i, i)) - c.cross * rowsum_b_(ix(i));
}

double MmdState::psi_b_to_a(std::size_t j) const {
    if (j >= labels_.size() || labels_[j] != Label::B)
        throw Error(Errc::swap_orientation, "psi_b_to_a needs a B-labeled index");
    const auto c = swap_coefficients(n1_, n2_);
    return c.within_b * (rowsum_b_(ix(j)) - (*kmat_)(j, j)) - c.cross * rowsum_a_(ix(j));
}

double MmdState::increment(std::size_t i, std::size_t j) const {
    check_orientation(labels_, i, j);
    const auto& k = *kmat_;
    return exact_swap_change(swap_coefficients(n1_, n2_), rowsum_a_(ix(i)), rowsum_b_(ix(i)),
                             rowsum_a_(ix(j)), rowsum_b_(ix(j)), k(i, i), k(j, j), k(i, j));
}

void MmdState::commit_swap(std::size_t i, std::size_t j) {
    check_orientation(labels_, i, j);
    const auto& k = *kmat_;
    const double a_i = rowsum_a_(ix(i)), b_i = rowsum_b_(ix(i));
    const double a_j = rowsum_a_(ix(j)), b_j = rowsum_b_(ix(j));
    const double k_ii = k(i, i), k_jj = k(j, j), k_ij = k(i, j);

    within_a_ += 2.0 * ((a_j - k_ij) - (a_i - k_ii));
    within_b_ += 2.0 * ((b_i - k_ij) - (b_j - k_jj));
    // Remove i from A and j from B, then add j to A and i to B.
    cross_ += -b_i - a_j + k_ij + (b_j - k_jj) + (a_i - k_ii) + k_ij;

    const auto col_i = k.values.col(ix(i));
    const auto col_j = k.values.col(ix(j));
    rowsum_a_ += col_j - col_i;
    rowsum_b_ += col_i - col_j;
    labels_.swap_labels(i, j);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd pooled_variance(const PooledSample& sample) {
    if (sample.size() < 2) throw Error(Errc::degenerate, "pooled variance needs N >= 2");
    const Eigen::RowVectorXd mean = sample.data().colwise().mean();
    const Eigen::MatrixXd centered = sample.data().rowwise() - mean;
    return centered.colwise().squaredNorm().transpose() / static_cast<double>(sample.size() - 1);
}

double full_relabel_variance_mean(const PooledSample& sample) {
    if (sample.dim() != 1)
        throw Error(Errc::unsupported_dimension, "closed-form relabeling variance is scalar-only");
    return sample.h() * pooled_variance(sample)(0);
}

// ---------------------------------------------------------------------------

StatisticEvaluator::StatisticEvaluator(const PooledSample& sample, const KernelMatrix* kmat,
                                       StatisticKind kind, Sidedness sided, const LabelState& base)
    : sample_(&sample), kmat_(kmat), kind_(kind), sided_(sided), base_labels_(base) {
    base.check_against(sample);
    if (kind == StatisticKind::mean_diff) {
        mean_state_.emplace(sample, base);
        base_value_ = mean_diff_statistic(mean_state_->delta(), sided_);
    } else {
        if (kmat == nullptr) throw Error(Errc::invalid_argument, "MMD^2 needs a kernel matrix");
        mmd_state_.emplace(*kmat, base);
        kernel_totals_ = kmat->values.rowwise().sum();
        base_value_ = mmd_state_->mmd2();
    }
}

double StatisticEvaluator::evaluate_full(const LabelState& labels) const {
    if (kind_ == StatisticKind::mean_diff)
        return mean_diff_statistic(mean_diff_full(*sample_, labels), sided_);
    labels.check_against(*sample_);
    require_mmd_groups(labels.n1(), labels.n2());
    const Eigen::VectorXd a = indicator(labels, Label::A);
    const Eigen::VectorXd ka = kmat_->values * a;
    const Eigen::VectorXd kb = kernel_totals_ - ka;
    double within_a = 0.0, within_b = 0.0, cross = 0.0;
    for (Eigen::Index k = 0; k < ka.size(); ++k) {
        const double diag = kmat_->values(k, k);
        if (a[k] != 0.0) {
            within_a += ka[k] - diag;
            cross += kb[k];
        } else {
            within_b += kb[k] - diag;
        }
    }
    const auto n1 = static_cast<double>(labels.n1());
    const auto n2 = static_cast<double>(labels.n2());
    return within_a / (n1 * (n1 - 1.0)) + within_b / (n2 * (n2 - 1.0)) - 2.0 * cross / (n1 * n2);
}

double StatisticEvaluator::evaluate_incremental(const LabelState& target) const {
    target.check_against(*sample_);
    std::vector<std::size_t> leaving_a, leaving_b;
    for (std::size_t k = 0; k < target.size(); ++k) {
        if (target[k] == base_labels_[k]) continue;
        (base_labels_[k] == Label::A ? leaving_a : leaving_b).push_back(k);
    }
    if (kind_ == StatisticKind::mean_diff) {
        Eigen::VectorXd delta = mean_state_->delta();
        for (std::size_t s = 0; s < leaving_a.size(); ++s)
            delta += mean_state_->h() * (sample_->row(leaving_b[s]) - sample_->row(leaving_a[s])).transpose();
        return mean_diff_statistic(delta, sided_);
    }
    if (leaving_a.empty()) return base_value_;
    MmdState state = *mmd_state_;
    for (std::size_t s = 0; s < leaving_a.size(); ++s) state.commit_swap(leaving_a[s], leaving_b[s]);
    return state.mmd2();
}

double StatisticEvaluator::swap_change(std::size_t i, std::size_t j) const {
    if (kind_ == StatisticKind::mean_diff) {
        const Eigen::VectorXd after = mean_state_->delta() + mean_state_->increment(i, j);
        return mean_diff_statistic(after, sided_) - base_value_;
    }
    return mmd_state_->increment(i, j);
}

StatisticEvaluator StatisticEvaluator::rebased(const LabelState& base) const {
    return StatisticEvaluator(*sample_, kmat_, kind_, sided_, base);
}

}  // namespace rbperm
