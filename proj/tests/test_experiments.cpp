#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gcml/gcml.hpp"

using namespace gcml;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) rows.push_back(detail::split(line, ','));
    return rows;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("gcml_exp_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(BifurcationCommand, FixedPointColumnAndDelegation) {
    Config c;
    c.beta_min = -0.75;
    c.beta_max = -0.60;
    c.beta_step = 0.05;
    c.bif_keep = 10;
    c.bif_sites = 20;
    c.bif_coupled_keep = 4;
    const auto dir = scratch("bif");
    run_experiment("bifurcation", c, dir);

    const auto rows = read_csv(dir / "single_map_bifurcation.csv");
    ASSERT_EQ(rows.size(), 4u * 10u);
    const auto direct = single_map_bifurcation({c.beta_min, c.beta_max, c.beta_step}, c.nu, {c.bif_x0, 1000, 10});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double beta = parse_double(rows[r][0]), xs = parse_double(rows[r][2]);
        EXPECT_LT(std::fabs(eval_map(xs, {c.nu, beta}) - xs), 1e-10);
        EXPECT_EQ(rows[r][1], format_double(direct[r / 10].orbit[r % 10]));
    }
    EXPECT_EQ(read_csv(dir / "coupled_bifurcation.csv").size(), 4u * 4u * 20u);
    fs::remove_all(dir);
}

TEST(BifurcationCommand, CoupledTwoBandsAtMinus069) {
    Config c;
    c.beta_min = c.beta_max = -0.69;
    c.bif_transient = 20000;
    c.bif_sites = 100;
    c.bif_coupled_keep = 20;
    const auto dir = scratch("bif2");
    run_experiment("bifurcation", c, dir);
    std::map<int, std::vector<std::pair<int, double>>> history;
    for (const auto& row : read_csv(dir / "coupled_bifurcation.csv"))
        history[std::stoi(row[2])].push_back({std::stoi(row[1]), parse_double(row[3])});
    ASSERT_EQ(history.size(), 100u);
    for (const auto& [site, h] : history) {
        // Values at even and odd micro-times form two disjoint bands.
        double even_lo = 1e9, even_hi = -1e9, odd_lo = 1e9, odd_hi = -1e9;
        for (const auto& [t, x] : h) {
            auto& lo = t % 2 ? odd_lo : even_lo;
            auto& hi = t % 2 ? odd_hi : even_hi;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        EXPECT_TRUE(even_hi < odd_lo || odd_hi < even_lo) << "site " << site;
    }
    fs::remove_all(dir);
}

TEST(LyapunovCommand, PositiveInBandChaosRegime) {
    EnsembleSpec spec;
    spec.n_sites = 100;
    spec.n_configs = 4;
    const auto est = largest_lyapunov(spec, -0.63, {2000, 10000, 0});
    EXPECT_GT(est.mean, 0.0);
    EXPECT_GT(est.mean - 2 * est.standard_error, 0.0);
}

TEST(LyapunovCommand, CsvHasStderrColumn) {
    Config c;
    c.beta_min = -0.70;
    c.beta_max = -0.69;
    c.n_sites = 20;
    c.n_configs = 2;
    c.lyap_transient = 10;
    c.lyap_steps = 20;
    const auto dir = scratch("lyap");
    run_experiment("lyapunov", c, dir);
    std::ifstream in(dir / "lyapunov.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "beta,lambda_max,stderr");
    EXPECT_EQ(read_csv(dir / "lyapunov.csv").size(), 2u);
    fs::remove_all(dir);
}

namespace {

/// Fraction of sites whose spins disagree between the two replicas after
/// `steps` micro-steps, per configuration.
std::vector<double> damaged_fraction(double beta, std::size_t n, std::size_t configs, int steps) {
    EnsembleSpec spec;
    spec.n_sites = n;
    spec.n_configs = configs;
    spec.params.beta = beta;
    std::vector<double> out;
    for (std::size_t c = 0; c < configs; ++c) {
        auto rs = make_replicas(init_random(spec, c), 2);
        perturb(rs, {n / 2}, 0.1);
        for (int t = 0; t < steps; ++t) rs.advance();
        const double xs = largest_fixed_point(spec.params).x_star;
        out.push_back(damage_coarse(rs, xs) / (2.0 * static_cast<double>(n)));
    }
    return out;
}

} // namespace

TEST(DamageCommand, SpreadsEverywhereInChaoticPhase) {
    for (double f : damaged_fraction(-0.63, 200, 5, 2000)) EXPECT_GT(f, 0.3);
}

TEST(DamageCommand, StaysLocalisedDeepInPersistentPhase) {
    for (double beta : {-0.73, -0.7771})
        for (double f : damaged_fraction(beta, 1000, 5, 5000)) EXPECT_LT(f, 0.1) << beta;
}

TEST(DamageCommand, PersistsAtCriticalPoint) {
    EnsembleSpec spec;
    spec.n_sites = 200;
    spec.n_configs = 5;
    DamageOptions opt;
    opt.t_max = 5000;
    const auto run = run_damage(spec, -0.6773, opt);
    for (double d : run.final_coarse) EXPECT_GT(d, 0.0);
    for (double d : run.final_fine) EXPECT_GT(d, 0.0);
}

TEST(DamageCommand, ZeroDeltaGivesZeroField) {
    Config c;
    c.n_sites = 30;
    c.n_configs = 1;
    c.t_max = 40;
    c.damage_delta = 0.0;
    const auto dir = scratch("dmg");
    run_experiment("damage", c, dir);
    std::ifstream in(dir / "damage_field.txt");
    double v = 0.0;
    int count = 0;
    while (in >> v) {
        EXPECT_EQ(v, 0.0);
        ++count;
    }
    EXPECT_EQ(count, 41 * 30);
    fs::remove_all(dir);
}

TEST(OffCriticalCommand, BranchesAreSeparateFamilies) {
    Config c;
    c.n_sites = 200;
    c.n_configs = 3;
    c.t_max = 2000;
    c.delta_list = {0.01, 0.02, 0.04};
    c.nu_par_grid = {1.7, 1.8, 0.1};
    const auto dir = scratch("offc");
    run_experiment("off-critical", c, dir);
    for (const char* branch : {"above", "below"}) {
        for (const auto& row : read_csv(dir / (std::string("collapse_F_") + branch + ".csv")))
            EXPECT_EQ(row[2].rfind(branch, 0), 0u);
    }
    // Above the transition F saturates; below it dies out.
    const auto above = read_series_csv(dir / "F_above_0.04.csv");
    const auto below = read_series_csv(dir / "F_below_0.04.csv");
    EXPECT_GT(above.values.back(), 0.01);
    EXPECT_EQ(below.values.back(), 0.0);
    fs::remove_all(dir);
}
