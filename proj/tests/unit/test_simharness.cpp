#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbperm/simharness.hpp"

using namespace rbperm;

namespace {

ExperimentSpec small_spec() {
    std::istringstream in(R"(# small study
[experiment]
statistic = mean
d = 2
n_grid = 16, 24
shift = 0.8
n_sim = 30
schemes = full, block
seed = 77
threads = 2

[test]
perms = 39
alpha = 0.05
rho = 0.25

[blocks]
16 = 3
24 = 4
)");
    return parse_experiment_spec(in);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("simharness") {
    TEST_CASE("gaussian pair moments") {
        Stream s(3);
        const auto pair = generate_gaussian_pair(50000, 2, {0.4, -1.0}, s);
        CHECK(pair.labels.n1() == 50000);
        const auto& z = pair.sample.data();
        const Eigen::RowVectorXd ma = z.topRows(50000).colwise().mean();
        const Eigen::RowVectorXd mb = z.bottomRows(50000).colwise().mean();
        CHECK(std::abs(ma(0)) < 0.02);
        CHECK(std::abs(ma(1)) < 0.02);
        CHECK(std::abs(mb(0) - 0.4) < 0.02);
        CHECK(std::abs(mb(1) + 1.0) < 0.02);
        const Eigen::MatrixXd ca = z.topRows(50000).rowwise() - ma;
        CHECK(std::abs(ca.col(0).squaredNorm() / 49999 - 1.0) < 0.05);
        CHECK_THROWS_AS((void)generate_gaussian_pair(4, 2, {0.0}, s), Error);
    }

    TEST_CASE("spec parsing") {
        const auto spec = small_spec();
        CHECK(spec.statistic == StatisticKind::mean_diff);
        CHECK(spec.shift == std::vector<double>{0.8, 0.0});
        CHECK(spec.n_grid == std::vector<std::size_t>{16, 24});
        CHECK(spec.blocks_for(24) == 4);
        CHECK(spec.cfg.perms == 39);
        CHECK(spec.cfg.design_retries == 10);
        for (const char* bad : {"[experiment]\nn_grid =\n", "[nope]\n", "[experiment]\nfoo = 1\n",
                                "[experiment]\nn_grid = 8\nn_sim = x\n", "n_grid = 8\n",
                                "[experiment]\nn_grid = 8\nstatistic = median\n"}) {
            std::istringstream in(bad);
            CHECK_THROWS_AS((void)parse_experiment_spec(in), Error);
        }
    }

    TEST_CASE("power study bookkeeping and reproducibility") {
        const auto spec = small_spec();
        const auto a = run_power_study(spec);
        REQUIRE(a.cells.size() == 2 * 2 * 2);
        for (const auto& c : a.cells) {
            CHECK(c.rejections + c.accepts + c.design_errors == spec.n_sim);
            CHECK(c.rejection_rate == static_cast<double>(c.rejections) / spec.n_sim);
            CHECK(c.rejection_rate >= 0.0);
            CHECK(c.rejection_rate <= 1.0);
            CHECK(c.std_error == doctest::Approx(std::sqrt(c.rejection_rate * (1 - c.rejection_rate) / spec.n_sim)));
            CHECK(c.blocks == spec.blocks_for(c.n));
        }
        auto single = spec;
        single.threads = 1;
        const auto b = run_power_study(single);
        for (std::size_t k = 0; k < a.cells.size(); ++k) CHECK(a.cells[k].rejections == b.cells[k].rejections);

        const auto dir = std::filesystem::temp_directory_path() / "rbperm_sim_test";
        std::filesystem::remove_all(dir);
        run_and_write({spec}, (dir / "one").string());
        run_and_write({single}, (dir / "two").string());
        CHECK(slurp(dir / "one" / "results.csv") == slurp(dir / "two" / "results.csv"));
        CHECK(slurp(dir / "one" / "results.csv").rfind("stat,d,n,scheme,scenario,rejection_rate,stderr,", 0) == 0);
        CHECK(std::filesystem::exists(dir / "one" / "counts.csv"));
        CHECK_FALSE(std::filesystem::exists(dir / "one" / "variance.csv"));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("variance sweep") {
        ExperimentSpec spec;
        spec.statistic = StatisticKind::mean_diff;
        spec.d = 1;
        spec.shift = {0.0};
        spec.n_grid = {32, 64};
        spec.blocks_by_n = {{32, 3}, {64, 4}};
        spec.cfg.sided = Sidedness::one;
        spec.cfg.design_retries = 10;
        spec.run_power = false;
        spec.variance_sweep = true;
        spec.variance_replicates = 500;
        spec.variance_datasets = 4;
        const auto rows = run_experiment(spec).variance;
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].h == 0.0625);
        for (const auto& r : rows) {
            REQUIRE(r.var_full_formula.has_value());
            CHECK(std::abs(r.var_full / *r.var_full_formula - 1.0) < 0.1);
            CHECK(r.ratio == doctest::Approx(r.var_rest / r.var_full));
        }
    }

    TEST_CASE("built-in profile") {
        const auto specs = table1_profile(200, 1);
        REQUIRE(specs.size() == 3);
        CHECK(specs[0].statistic == StatisticKind::mmd2);
        CHECK(specs[0].d == 10);
        CHECK(specs[0].blocks_for(256) == 5);
        CHECK(specs[1].d == 2);
        CHECK(specs[1].shift == std::vector<double>{0.4, 0.0});
        CHECK(specs[1].blocks_for(32) == 3);
        CHECK(specs[2].variance_sweep);
        CHECK_FALSE(specs[2].run_power);
    }
}
