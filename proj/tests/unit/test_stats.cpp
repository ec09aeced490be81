#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "../support.hpp"
#include "rbperm/stats.hpp"

using namespace rbperm;

namespace {

PooledSample scalar(std::vector<double> v, std::size_t n1) {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) z(static_cast<Eigen::Index>(i), 0) = v[i];
    return PooledSample(z, n1, v.size() - n1);
}

KernelMatrix constant_kernel(std::size_t n, double c) {
    return {Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), c), 0.0};
}

}  // namespace

TEST_SUITE("stats") {
    TEST_CASE("mean difference examples") {
        const auto z = scalar({1, 3, 2, 4}, 2);
        const auto g = LabelState::blocked(2, 2);
        CHECK(mean_diff_full(z, g)(0) == doctest::Approx(-1.0));
        CHECK(mean_diff_full(scalar({0, 5}, 1), LabelState::blocked(1, 1))(0) == doctest::Approx(-5.0));
        CHECK(mean_diff_full(scalar({1, 2, 2, 1}, 2), g)(0) == 0.0);
    }

    TEST_CASE("mean difference increments") {
        const auto z1 = scalar({0, 5}, 1);
        MeanDiffState s1(z1, LabelState::blocked(1, 1));
        CHECK(s1.increment(0, 1)(0) == doctest::Approx(10.0));

        const auto z = scalar({1, 3, 2, 4}, 2);
        MeanDiffState s(z, LabelState::blocked(2, 2));
        CHECK(s.increment(0, 3)(0) == doctest::Approx(3.0));
        s.commit_swap(0, 3);
        CHECK(s.delta()(0) == doctest::Approx(2.0));
        CHECK(s.increment(1, 2)(0) == doctest::Approx(-1.0));
        CHECK_THROWS_AS((void)s.increment(2, 0), Error);  // index 2 is B-labeled
    }

    TEST_CASE("mean difference increments match full recomputation") {
        std::mt19937_64 gen(11);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n1 = 2 + gen() % 10, n2 = 2 + gen() % 10, d = 1 + gen() % 4;
            const PooledSample z(oracle::gaussian_data(n1 + n2, d, gen), n1, n2);
            const auto g = oracle::shuffled_labels(n1, n2, gen);
            const MeanDiffState state(z, g);
            for (std::size_t i = 0; i < z.size(); ++i)
                for (std::size_t j = 0; j < z.size(); ++j) {
                    if (g[i] != Label::A || g[j] != Label::B) continue;
                    const auto before = oracle::mean_diff(z.data(), g);
                    const auto after = oracle::mean_diff(z.data(), oracle::swapped(g, i, j));
                    const Eigen::VectorXd inc = state.increment(i, j);
                    for (std::size_t c = 0; c < d; ++c)
                        REQUIRE(std::abs(inc(static_cast<Eigen::Index>(c)) - (after[c] - before[c])) < 1e-10);
                }
        }
    }

    TEST_CASE("mean difference statistic") {
        CHECK(mean_diff_statistic(Eigen::Vector2d(3, 4), Sidedness::two) == doctest::Approx(5.0));
        CHECK(mean_diff_statistic(Eigen::Vector2d(0, 0), Sidedness::two) == 0.0);
        Eigen::VectorXd m(1);
        m << -2;
        CHECK(mean_diff_statistic(m, Sidedness::one) == -2.0);
        CHECK(mean_diff_statistic(m, Sidedness::two) == 2.0);
    }

    TEST_CASE("gaussian kernel") {
        Eigen::MatrixXd z(2, 1);
        z << 0.0, std::sqrt(2.0) * 0.7;
        const auto k = gaussian_kernel_matrix(PooledSample(z, 1, 1), Bandwidth::value(0.7));
        CHECK(k(0, 0) == 1.0);
        CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
        const PooledSample same(Eigen::MatrixXd::Ones(4, 3), 2, 2);
        CHECK(median_heuristic(same) == 1.0);
        CHECK(gaussian_kernel_matrix(same, Bandwidth::median()).values.isOnes());
        CHECK_THROWS_AS((void)gaussian_kernel_matrix(same, Bandwidth::value(0.0)), Error);
        CHECK_THROWS_AS((void)gaussian_kernel_matrix(same, Bandwidth::value(-1.0)), Error);
    }

    TEST_CASE("median heuristic") {
        // pairwise distances {1, 3, 2} -> median 2
        const auto z = scalar({0, 1, 3}, 1);
        CHECK(median_heuristic(z) == doctest::Approx(2.0));
        // {1, 2, 3, 1, 2, 1} -> sorted 1 1 1 2 2 3, even count -> 1.5
        const auto w = scalar({0, 1, 2, 3}, 2);
        CHECK(median_heuristic(w) == doctest::Approx(1.5));
        // zero distances are excluded
        const auto t = scalar({0, 0, 4}, 1);
        CHECK(median_heuristic(t) == doctest::Approx(4.0));
    }

    TEST_CASE("unbiased MMD^2 against the double-sum oracle") {
        CHECK(mmd2_full(constant_kernel(6, 2.5), LabelState::blocked(3, 3)) == doctest::Approx(0.0));

        const auto lin = linear_kernel_matrix(scalar({0, 1, 2, 3}, 2));
        const auto g = LabelState::blocked(2, 2);
        CHECK(mmd2_full(lin, g) == doctest::Approx(oracle::mmd2(lin.values, g)).epsilon(1e-14));

        std::mt19937_64 gen(5);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n1 = 2 + gen() % 8, n2 = 2 + gen() % 8, d = 1 + gen() % 5;
            const PooledSample z(oracle::gaussian_data(n1 + n2, d, gen), n1, n2);
            const auto k = gaussian_kernel_matrix(z, Bandwidth::value(1.3));
            REQUIRE(k.values.isApprox(oracle::gaussian_kernel(z.data(), 1.3), 1e-14));
            const auto labels = oracle::shuffled_labels(n1, n2, gen);
            CHECK(mmd2_full(k, labels) == doctest::Approx(oracle::mmd2(k.values, labels)).epsilon(1e-12));
        }
        CHECK_THROWS_AS((void)mmd2_full(constant_kernel(3, 1.0), LabelState::blocked(1, 2)), Error);
    }

    TEST_CASE("psi scores") {
        const auto lin = linear_kernel_matrix(scalar({0, 1, 2, 3}, 2));
        const auto g = LabelState::blocked(2, 2);
        // direct summation: index 1 (value 1): within A = 1*0, cross = 1*2 + 1*3
        CHECK(psi_a_to_b(lin, g, 1) == doctest::Approx(2.0 / 2.0 * 0.0 - 2.0 / 4.0 * 5.0));
        // index 2 (value 2): within B = 2*3, cross = 2*0 + 2*1
        CHECK(psi_b_to_a(lin, g, 2) == doctest::Approx(2.0 / 2.0 * 6.0 - 2.0 / 4.0 * 2.0));
        CHECK(psi_a_to_b(constant_kernel(6, 3.0), LabelState::blocked(3, 3), 0) == doctest::Approx(0.0));
        CHECK(psi_b_to_a(constant_kernel(6, 3.0), LabelState::blocked(3, 3), 4) == doctest::Approx(0.0));
        const KernelMatrix iso{Eigen::MatrixXd::Identity(6, 6), 0.0};
        CHECK(psi_a_to_b(iso, LabelState::blocked(3, 3), 1) == 0.0);
        CHECK(psi_b_to_a(iso, LabelState::blocked(3, 3), 5) == 0.0);
        CHECK_THROWS_AS((void)psi_a_to_b(lin, g, 3), Error);

        const MmdState state(lin, g);
        CHECK(state.psi_a_to_b(1) == doctest::Approx(psi_a_to_b(lin, g, 1)));
        CHECK(state.psi_b_to_a(2) == doctest::Approx(psi_b_to_a(lin, g, 2)));
    }

    TEST_CASE("MMD^2 one-swap increments match full recomputation") {
        CHECK(mmd_one_swap_increment(constant_kernel(6, 1.7), LabelState::blocked(3, 3), 0, 4) ==
              doctest::Approx(0.0));
        std::mt19937_64 gen(8);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n1 = 2 + gen() % 6, n2 = 2 + gen() % 6, d = 1 + gen() % 3;
            const PooledSample z(oracle::gaussian_data(n1 + n2, d, gen), n1, n2);
            const auto k = gaussian_kernel_matrix(z, Bandwidth::median());
            const auto g = oracle::shuffled_labels(n1, n2, gen);
            const MmdState state(k, g);
            const double before = oracle::mmd2(k.values, g);
            for (std::size_t i = 0; i < z.size(); ++i)
                for (std::size_t j = 0; j < z.size(); ++j) {
                    if (g[i] != Label::A || g[j] != Label::B) continue;
                    const double truth = oracle::mmd2(k.values, oracle::swapped(g, i, j)) - before;
                    REQUIRE(std::abs(mmd_one_swap_increment(k, g, i, j) - truth) < 1e-10);
                    REQUIRE(std::abs(state.increment(i, j) - truth) < 1e-10);
                }
        }
    }

    TEST_CASE("running MMD state survives long swap walks") {
        std::mt19937_64 gen(21);
        const PooledSample z(oracle::gaussian_data(30, 3, gen), 14, 16);
        const auto k = gaussian_kernel_matrix(z, Bandwidth::median());
        MmdState state(k, oracle::shuffled_labels(14, 16, gen));
        for (int step = 0; step < 500; ++step) {
            std::size_t i, j;
            do {
                i = gen() % 30;
            } while (state.labels()[i] != Label::A);
            do {
                j = gen() % 30;
            } while (state.labels()[j] != Label::B);
            state.commit_swap(i, j);
        }
        CHECK(state.mmd2() == doctest::Approx(oracle::mmd2(k.values, state.labels())).epsilon(1e-10));
    }

    TEST_CASE("pooled variance") {
        CHECK(pooled_variance(scalar({2, 2, 2}, 1))(0) == 0.0);
        CHECK(pooled_variance(scalar({0, 2}, 1))(0) == doctest::Approx(2.0));
        CHECK(pooled_variance(scalar({1, 2, 3}, 1))(0) == doctest::Approx(1.0));
    }

    TEST_CASE("relabeling variance formula against enumeration") {
        auto enumerate = [](const std::vector<double>& v, std::size_t n1) {
            const std::size_t n = v.size();
            std::vector<int> mask(n, 0);
            std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n1), 1);
            std::sort(mask.begin(), mask.end());
            std::vector<double> deltas;
            do {
                double sa = 0, sb = 0;
                for (std::size_t i = 0; i < n; ++i) (mask[i] ? sa : sb) += v[i];
                deltas.push_back(sa / n1 - sb / (n - n1));
            } while (std::next_permutation(mask.begin(), mask.end()));
            const double mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / deltas.size();
            double var = 0;
            for (double x : deltas) var += (x - mean) * (x - mean);
            return var / deltas.size();
        };
        const std::vector<double> six{1, 2, 3, 4, 5, 6};
        // h = 2/3, S^2 = 3.5: the enumerated variance is h S^2 = 7/3
        CHECK(std::abs(enumerate(six, 3) - 7.0 / 3.0) < 1e-12);
        CHECK(std::abs(full_relabel_variance_mean(scalar(six, 3)) - enumerate(six, 3)) < 1e-12);
        CHECK(std::abs(full_relabel_variance_mean(scalar({0, 1}, 1)) - enumerate({0, 1}, 1)) < 1e-12);
        CHECK(full_relabel_variance_mean(scalar({3, 3, 3, 3}, 2)) == 0.0);
        const std::vector<double> odd{0.3, -1.2, 2.5, 0.1, 4.0, -0.7, 1.1};
        CHECK(std::abs(full_relabel_variance_mean(scalar(odd, 3)) - enumerate(odd, 3)) < 1e-12);
        const PooledSample two(Eigen::MatrixXd::Zero(4, 2), 2, 2);
        CHECK_THROWS_AS((void)full_relabel_variance_mean(two), Error);
    }

    TEST_CASE("evaluator: incremental equals full at arbitrary targets") {
        std::mt19937_64 gen(3);
        for (auto kind : {StatisticKind::mean_diff, StatisticKind::mmd2}) {
            for (int trial = 0; trial < 20; ++trial) {
                const std::size_t n1 = 3 + gen() % 10, n2 = 3 + gen() % 10, d = 1 + gen() % 3;
                const PooledSample z(oracle::gaussian_data(n1 + n2, d, gen), n1, n2);
                const auto k = gaussian_kernel_matrix(z, Bandwidth::median());
                const auto base = oracle::shuffled_labels(n1, n2, gen);
                const StatisticEvaluator ev(z, &k, kind, Sidedness::two, base);
                for (int t = 0; t < 10; ++t) {
                    const auto target = oracle::shuffled_labels(n1, n2, gen);
                    const double truth = kind == StatisticKind::mmd2
                                             ? oracle::mmd2(k.values, target)
                                             : [&] {
                                                   const auto m = oracle::mean_diff(z.data(), target);
                                                   double s = 0;
                                                   for (double x : m) s += x * x;
                                                   return d == 1 ? std::abs(m[0]) : std::sqrt(s);
                                               }();
                    CHECK(ev.evaluate_full(target) == doctest::Approx(truth).epsilon(1e-10));
                    CHECK(ev.evaluate_incremental(target) == doctest::Approx(truth).epsilon(1e-9));
                }
            }
        }
    }
}
