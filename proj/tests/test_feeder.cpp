#include <doctest.h>

#include <fstream>

#include "ofo/feeder.hpp"
#include "reference.hpp"

using namespace ofo;

namespace {

FeederModel two_bus() { return load_feeder(ofo_test::feeder_path("two_bus.json")); }

FeederModel chain(int n, double r = 0.01, double x = 0.01) {
    FeederModel f;
    for (int i = 0; i < n; ++i)
        f.buses.push_back({i, i == 0 ? BusKind::Slack : BusKind::Load, false});
    for (int i = 1; i < n; ++i) f.lines.push_back({i - 1, i, r, x});
    return f;
}

} // namespace

TEST_CASE("two-bus admittance entries") {
    const Eigen::MatrixXcd y = build_admittance(two_bus());
    const std::complex<double> off = -1.0 / std::complex<double>(0.01, 0.01);
    CHECK(std::abs(y(0, 1) - off) < 1e-12);
    CHECK(std::abs(y(0, 1) - std::complex<double>(-50.0, 50.0)) < 1e-9);
    CHECK(std::abs(y(0, 0) - std::complex<double>(50.0, -50.0)) < 1e-9);
}

TEST_CASE("admittance is symmetric with zero row sums") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const FeederModel f = ofo_test::random_radial_feeder(2 + trial % 12, 2, rng);
        const Eigen::MatrixXcd y = build_admittance(f);
        CHECK((y - y.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(y.rowwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("equal-impedance chain doubles the interior diagonal") {
    const Eigen::MatrixXcd y = build_admittance(chain(3));
    CHECK(std::abs(y(1, 1) - 2.0 * y(0, 0)) < 1e-12);
    CHECK(std::abs(y(2, 2) - y(0, 0)) < 1e-12);
}

TEST_CASE("feeder validation rejects structural defects") {
    SUBCASE("duplicate line") {
        FeederModel f = chain(3);
        f.lines.push_back({1, 0, 0.02, 0.02});
        CHECK_THROWS_AS(build_admittance(f), ValidationError);
    }
    SUBCASE("disconnected graph") {
        FeederModel f = chain(4);
        f.lines.erase(f.lines.begin() + 1);
        f.lines.push_back({2, 3, 0.01, 0.01});
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SUBCASE("two slacks") {
        FeederModel f = chain(3);
        f.buses[1].kind = BusKind::Slack;
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SUBCASE("zero impedance line") {
        FeederModel f = chain(3);
        f.lines[0].r_pu = 0.0;
        f.lines[0].x_pu = 0.0;
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SUBCASE("negative resistance") {
        FeederModel f = chain(3);
        f.lines[0].r_pu = -0.01;
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SUBCASE("duplicate bus id") {
        FeederModel f = chain(3);
        f.buses[2].id = 1;
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
}

TEST_CASE("vector layout dimensions") {
    const FeederModel f = load_feeder(ofo_test::feeder_path("radial15.json"));
    CHECK(f.n_bus() == 15);
    CHECK(f.n_u() == 9); // slack + 4 active + 4 reactive
    CHECK(f.n_y() == 14);
    CHECK(f.n_d() == 28);
    CHECK(f.der_positions().size() == 4);
}

TEST_CASE("perturb_admittance") {
    const FeederModel f = load_feeder(ofo_test::feeder_path("chain6.json"));
    std::vector<int> all(f.lines.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

    SUBCASE("zero fraction is the identity") {
        const FeederModel p = perturb_admittance(f, all, 0.0, 99);
        for (size_t i = 0; i < f.lines.size(); ++i) {
            CHECK(p.lines[i].r_pu == f.lines[i].r_pu);
            CHECK(p.lines[i].x_pu == f.lines[i].x_pu);
        }
    }
    SUBCASE("perturbed impedances stay within the fraction") {
        const FeederModel p = perturb_admittance(f, all, 0.2, 99);
        bool any_changed = false;
        for (size_t i = 0; i < f.lines.size(); ++i) {
            const double fr = p.lines[i].r_pu / f.lines[i].r_pu;
            const double fx = p.lines[i].x_pu / f.lines[i].x_pu;
            CHECK(fr == doctest::Approx(fx)); // one factor per line
            CHECK(fr >= 0.8);
            CHECK(fr <= 1.2);
            any_changed |= fr != 1.0;
        }
        CHECK(any_changed);
    }
    SUBCASE("same seed reproduces, unselected lines untouched") {
        const std::vector<int> some{1, 3};
        const FeederModel a = perturb_admittance(f, some, 0.2, 7);
        const FeederModel b = perturb_admittance(f, some, 0.2, 7);
        for (size_t i = 0; i < f.lines.size(); ++i) {
            CHECK(a.lines[i].r_pu == b.lines[i].r_pu);
            CHECK(a.lines[i].x_pu == b.lines[i].x_pu);
        }
        CHECK(a.lines[0].r_pu == f.lines[0].r_pu);
        CHECK(a.lines[2].r_pu == f.lines[2].r_pu);
        CHECK(a.lines[4].r_pu == f.lines[4].r_pu);
    }
    SUBCASE("unknown line id") {
        const std::vector<int> bad{12};
        CHECK_THROWS_AS(perturb_admittance(f, bad, 0.2, 1), ValidationError);
    }
}

TEST_CASE("feeder file with unknown key is rejected") {
    namespace fs = std::filesystem;
    const fs::path tmp = fs::temp_directory_path() / "ofo_bad_feeder.json";
    std::ofstream(tmp) << R"({"buses":[{"id":0,"kind":"slack"},{"id":1,"kind":"load"}],)"
                       << R"("lines":[{"from":0,"to":1,"r_pu":0.01,"x_pu":0.01}],)"
                       << R"("shunts":[]})";
    CHECK_THROWS_AS(load_feeder(tmp), ValidationError);
    fs::remove(tmp);
}
