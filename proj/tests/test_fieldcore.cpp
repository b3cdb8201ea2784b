#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "chda/ensemble.hpp"
#include "chda/errors.hpp"
#include "chda/field_io.hpp"
#include "chda/rng.hpp"

using namespace chda;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    auto p = fs::temp_directory_path() / name;
    fs::remove(p);
    return p;
}

// Brute-force oracle: coverage probability of the sample variance of n iid
// N(0,1) draws falling inside [lo, hi]. Independent generator on purpose.
double variance_coverage_oracle(int n, double lo, double hi, int trials) {
    std::mt19937_64 gen(12345);
    std::normal_distribution<double> nd(0.0, 1.0);
    int inside = 0;
    for (int t = 0; t < trials; ++t) {
        double sum = 0.0, sum2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const double x = nd(gen);
            sum += x;
            sum2 += x * x;
        }
        const double var = (sum2 - sum * sum / n) / (n - 1);
        if (var >= lo && var <= hi) ++inside;
    }
    return static_cast<double>(inside) / trials;
}

}  // namespace

TEST_CASE("mean and deviations: two-member arithmetic") {
    GridSpec g{4, 4, 5.0, 5.0, 10.0};
    Ensemble e;
    e.members.emplace_back(g, 1.0);
    e.members.emplace_back(g, 3.0);

    auto [mean, dev] = ensemble_mean_and_deviations(e);
    for (double v : mean.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-15));
    for (Eigen::Index c = 0; c < dev.cols(); ++c) {
        CHECK(dev(0, c) == doctest::Approx(-1.0).epsilon(1e-15));
        CHECK(dev(1, c) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("mean and deviations: identical members give zero deviations") {
    GridSpec g{3, 5, 5.0, 5.0, 10.0};
    Ensemble e;
    for (int k = 0; k < 4; ++k) e.members.emplace_back(g, 2.5);
    auto [mean, dev] = ensemble_mean_and_deviations(e);
    CHECK(dev.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mean and deviations: insufficient ensemble") {
    GridSpec g{4, 4, 5.0, 5.0, 10.0};
    Ensemble e;
    e.members.emplace_back(g, 1.0);
    CHECK_THROWS_WITH_AS(ensemble_mean_and_deviations(e), "insufficient ensemble",
                         std::invalid_argument);
}

TEST_CASE("mean and deviations: per-cell variance matches chi-square bounds") {
    // Oracle first: with n=100, [0.6, 1.5] should cover well over 99% of
    // sample variances.
    const double coverage = variance_coverage_oracle(100, 0.6, 1.5, 20000);
    REQUIRE(coverage > 0.995);

    GridSpec g{64, 64, 5.0, 5.0, 10.0};
    RngStream rng(777, 0);
    Ensemble e;
    for (int m = 0; m < 100; ++m) {
        auto stream = rng.fork(static_cast<std::uint64_t>(m));
        LogPermField f(g);
        for (auto& v : f.values) v = stream.normal();
        e.members.push_back(std::move(f));
    }
    auto [mean, dev] = ensemble_mean_and_deviations(e);
    int inside = 0;
    for (Eigen::Index c = 0; c < dev.cols(); ++c) {
        const double var = dev.col(c).squaredNorm() / (dev.rows() - 1);
        if (var >= 0.6 && var <= 1.5) ++inside;
    }
    CHECK(static_cast<double>(inside) / dev.cols() >= 0.99);
}

TEST_CASE("mean and deviations: per-cell deviation sums vanish") {
    GridSpec g{8, 8, 5.0, 5.0, 10.0};
    RngStream rng(42, 0);
    Ensemble e;
    for (int m = 0; m < 33; ++m) {
        LogPermField f(g);
        for (auto& v : f.values) v = 2.0 + 1000.0 * rng.normal();
        e.members.push_back(std::move(f));
    }
    auto [mean, dev] = ensemble_mean_and_deviations(e);
    for (Eigen::Index c = 0; c < dev.cols(); ++c)
        CHECK(std::abs(dev.col(c).sum()) < 1e-12 * 1000.0);
}

TEST_CASE("field save/load round trip is bit-exact") {
    GridSpec g{64, 64, 5.0, 5.0, 10.0};
    RngStream rng(9, 1);
    LogPermField f(g);
    for (auto& v : f.values) v = 1.0 + 3.0 * rng.uniform();

    auto path = temp_file("chda_roundtrip.chda");
    save_field(f, path);
    LogPermField f2 = load_field(path);
    CHECK(f2.grid == f.grid);
    REQUIRE(f2.values.size() == f.values.size());
    CHECK(std::memcmp(f2.values.data(), f.values.data(), f.values.size() * 8) == 0);
    fs::remove(path);
}

TEST_CASE("field load: wrong magic is a format error") {
    auto path = temp_file("chda_badmagic.chda");
    std::ofstream(path, std::ios::binary) << "NOPE, not a field file";
    CHECK_THROWS_AS(load_field(path), FormatError);
    fs::remove(path);
}

TEST_CASE("field load: truncated payload is reported as such") {
    GridSpec g{64, 64, 5.0, 5.0, 10.0};
    LogPermField f(g, 2.0);
    auto path = temp_file("chda_trunc.chda");
    save_field(f, path);
    // Chop the last value: 64x64 header with 4095 payload values.
    fs::resize_file(path, fs::file_size(path) - 8);
    CHECK_THROWS_AS(load_field(path), TruncatedError);
    fs::remove(path);
}

TEST_CASE("field load: bad header dimensions are a dimension error") {
    GridSpec g{2, 2, 5.0, 5.0, 10.0};
    LogPermField f(g, 2.0);
    auto path = temp_file("chda_baddim.chda");
    save_field(f, path);
    // Corrupt nx (offset 6: magic 4 + version 2) to zero.
    std::fstream file(path, std::ios::in | std::ios::out | std::ios::binary);
    file.seekp(6);
    const char zeros[4] = {0, 0, 0, 0};
    file.write(zeros, 4);
    file.close();
    CHECK_THROWS_AS(load_field(path), DimensionError);
    fs::remove(path);
}

TEST_CASE("ensemble save/load round trip") {
    GridSpec g{8, 8, 5.0, 5.0, 10.0};
    RngStream rng(1234, 0);
    Ensemble e;
    e.seed = 1234;
    e.tag = "prior";
    for (int m = 0; m < 5; ++m) {
        LogPermField f(g);
        for (auto& v : f.values) v = rng.normal();
        e.members.push_back(std::move(f));
    }
    auto path = temp_file("chda_ens.chen");
    save_ensemble(e, path);
    Ensemble e2 = load_ensemble(path);
    REQUIRE(e2.size() == e.size());
    for (std::size_t m = 0; m < e.size(); ++m) {
        CHECK(e2.members[m].grid == e.members[m].grid);
        CHECK(std::memcmp(e2.members[m].values.data(), e.members[m].values.data(),
                          e.members[m].values.size() * 8) == 0);
    }
    fs::remove(path);
}

TEST_CASE("csv export carries the documented header") {
    GridSpec g{2, 2, 5.0, 5.0, 10.0};
    LogPermField f(g, 3.0);
    auto path = temp_file("chda_field.csv");
    export_field_csv(f, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "i,j,log10_k_mD");
    std::string row;
    std::getline(in, row);
    CHECK(row == "0,0,3");
    fs::remove(path);
}

TEST_CASE("rng: same fork label gives identical streams") {
    RngStream parent(99, 7);
    auto a1 = parent.fork("a");
    auto a2 = parent.fork("a");
    for (int k = 0; k < 100; ++k) CHECK(a1.next_u64() == a2.next_u64());
}

TEST_CASE("rng: distinct fork labels are decorrelated") {
    RngStream parent(2024, 0);
    auto a = parent.fork("a");
    auto b = parent.fork("b");
    const int n = 10000;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int k = 0; k < n; ++k) {
        const double x = a.uniform();
        const double y = b.uniform();
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double va = saa / n - (sa / n) * (sa / n);
    const double vb = sbb / n - (sb / n) * (sb / n);
    const double rho = cov / std::sqrt(va * vb);
    CHECK(std::abs(rho) < 0.05);
}

TEST_CASE("rng: fork chains are reproducible and restorable") {
    RngStream r1(5, 0);
    auto c1 = r1.fork("x").fork("y").fork("z");
    RngStream r2(5, 0);
    auto c2 = r2.fork("x").fork("y").fork("z");
    for (int k = 0; k < 50; ++k) CHECK(c1.next_u64() == c2.next_u64());

    // Restore mid-sequence.
    auto snap = RngStream::restore(c1.seed(), c1.stream_id(), c1.counter());
    for (int k = 0; k < 50; ++k) CHECK(c1.next_u64() == snap.next_u64());
}

TEST_CASE("rng: normal draws have expected moments") {
    RngStream r(31337, 0);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}
