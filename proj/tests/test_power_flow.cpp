#include <doctest.h>

#include <algorithm>

#include "ofo/power_flow.hpp"
#include "reference.hpp"

using namespace ofo;

namespace {

Plant two_bus_plant() {
    return Plant(load_feeder(ofo_test::feeder_path("two_bus.json")));
}

// u = [slack, p, q] on the two-bus feeder
Eigen::Vector3d make_u(double v0, double p, double q) { return {v0, p, q}; }
Eigen::Vector2d make_d(double p, double q) { return {p, q}; }

} // namespace

TEST_CASE("zero-injection fixed points") {
    const Plant plant = two_bus_plant();
    const Eigen::VectorXd y1 = plant.solve(make_u(1.0, 0, 0), make_d(0, 0));
    CHECK(y1(0) == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::VectorXd y2 = plant.solve(make_u(1.02, 0, 0), make_d(0, 0));
    CHECK(y2(0) == doctest::Approx(1.02).epsilon(1e-12));
}

TEST_CASE("two-bus solution matches the closed form") {
    const Plant plant = two_bus_plant();
    const std::complex<double> z(0.01, 0.01);

    // the hand-solved 0.1 + 0.1j consumption case
    const Eigen::VectorXd y = plant.solve(make_u(1.0, 0, 0), make_d(-0.1, -0.1));
    CHECK(y(0) == doctest::Approx(0.9980).epsilon(1e-4));
    CHECK(y(0) == doctest::Approx(std::abs(ofo_test::two_bus_voltage(
                      1.0, z, {-0.1, -0.1}))).epsilon(1e-10));

    // randomized consumptions and DER injections against the closed form
    Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        const double v0 = rng.uniform(0.95, 1.05);
        const double lp = rng.uniform(-0.5, 0.1);
        const double lq = rng.uniform(-0.3, 0.1);
        const double gp = rng.uniform(0.0, 0.3);
        const double gq = rng.uniform(-0.2, 0.2);
        const std::complex<double> s(lp + gp, lq + gq);
        const Eigen::VectorXd got = plant.solve(make_u(v0, gp, gq), make_d(lp, lq));
        const double want = std::abs(ofo_test::two_bus_voltage(v0, z, s));
        CHECK(got(0) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("power flow is deterministic and within tolerance") {
    const Plant plant(load_feeder(ofo_test::feeder_path("radial15.json")));
    Rng rng(21);
    Eigen::VectorXd u(plant.n_u()), d(plant.n_d());
    for (int k = 0; k < 20; ++k) {
        u(0) = rng.uniform(0.98, 1.02);
        for (int i = 1; i < plant.n_u(); ++i) u(i) = rng.uniform(-0.05, 0.15);
        for (int i = 0; i < plant.n_d(); ++i) d(i) = rng.uniform(-0.1, 0.0);
        const Eigen::VectorXd a = plant.solve(u, d);
        const Eigen::VectorXd b = plant.solve(u, d);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
        CHECK(plant.max_mismatch(u, d) <= 1e-9);
        CHECK(a.minCoeff() > 0.0);
    }
}

TEST_CASE("power flow error paths") {
    const Plant plant = two_bus_plant();
    CHECK_THROWS_AS(plant.solve(Eigen::Vector2d(1.0, 0.0), make_d(0, 0)),
                    ValidationError);
    CHECK_THROWS_AS(plant.solve(make_u(1, 0, 0), Eigen::Vector3d(0, 0, 0)),
                    ValidationError);
    CHECK_THROWS_AS(plant.solve(make_u(-1.0, 0, 0), make_d(0, 0)), ValidationError);
    // far beyond the nose point of a z = 0.01+0.01j line
    CHECK_THROWS_AS(plant.solve(make_u(1.0, 0, 0), make_d(-30.0, -30.0)),
                    NonConvergence);
}

TEST_CASE("true sensitivity at the zero-injection point") {
    const Plant plant = two_bus_plant();
    const Eigen::MatrixXd h =
        plant.sensitivity(make_u(1.0, 0, 0), make_d(0, 0));

    // d|v|/dp is the line resistance at zero injection, d|v|/dv0 is one
    CHECK(h(0, 1) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(h(0, 0) == doctest::Approx(1.0).epsilon(1e-9));

    // independent derivative of the closed form
    const std::complex<double> z(0.01, 0.01);
    const double delta = 1e-6;
    const double dvdp = (std::abs(ofo_test::two_bus_voltage(1.0, z, {delta, 0})) -
                         std::abs(ofo_test::two_bus_voltage(1.0, z, {-delta, 0}))) /
                        (2 * delta);
    CHECK(h(0, 1) == doctest::Approx(dvdp).epsilon(1e-5));
}

TEST_CASE("sensitivity agrees with the linearization at the same point") {
    const Plant plant(load_feeder(ofo_test::feeder_path("chain6.json")));
    Eigen::VectorXd u = plant.zero_injection_input();
    u(1) = 0.05;
    Eigen::VectorXd d = Eigen::VectorXd::Constant(plant.n_d(), -0.02);
    const Eigen::MatrixXd h = plant.sensitivity(u, d);
    const LinearModel lin = plant.linearize(u, d);
    CHECK((h - lin.H0).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("linearization at the zero-injection point") {
    const Plant plant = two_bus_plant();
    const Eigen::VectorXd u_op = plant.zero_injection_input();
    const Eigen::VectorXd d_op = Eigen::VectorXd::Zero(plant.n_d());
    const LinearModel lin = plant.linearize(u_op, d_op);

    // offset with the slack column excluded from the anchor product is the
    // 1 p.u. flat profile; the Taylor anchor itself reproduces h exactly
    const Eigen::VectorXd offset = lin.y0 + lin.H0.col(0) * u_op(0);
    CHECK((offset.array() - 1.0).abs().maxCoeff() < 1e-9);
    const Eigen::VectorXd predicted = lin.H0 * u_op + lin.D0 * d_op + lin.y0;
    CHECK((predicted - plant.solve(u_op, d_op)).cwiseAbs().maxCoeff() < 1e-12);

    // disturbance sensitivity to active load is the line resistance
    CHECK(lin.D0(0, 0) == doctest::Approx(0.01).epsilon(1e-3));
}

TEST_CASE("FD Jacobian passes an independent forward-difference check") {
    const Plant plant(load_feeder(ofo_test::feeder_path("chain6.json")));
    Eigen::VectorXd u = plant.zero_injection_input();
    u(1) = 0.03;
    u(3) = -0.02;
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(plant.n_d(), -0.04);

    const Eigen::MatrixXd h_central = plant.sensitivity(u, d);
    Eigen::MatrixXd h_forward(plant.n_y(), plant.n_u());
    const double step = 1e-5;
    const Eigen::VectorXd y0 = plant.solve(u, d);
    for (int k = 0; k < plant.n_u(); ++k) {
        Eigen::VectorXd up = u;
        up(k) += step;
        h_forward.col(k) = (plant.solve(up, d) - y0) / step;
    }
    CHECK((h_central - h_forward).norm() / h_central.norm() < 1e-4);
}

TEST_CASE("monotone load property on radial feeders") {
    for (const char* name : {"two_bus.json", "chain6.json"}) {
        const Plant plant(load_feeder(ofo_test::feeder_path(name)));
        Rng rng(31);
        const int n_load = plant.n_d() / 2;
        for (int trial = 0; trial < 25; ++trial) {
            Eigen::VectorXd u = plant.zero_injection_input();
            Eigen::VectorXd d(plant.n_d());
            for (int i = 0; i < plant.n_d(); ++i) d(i) = rng.uniform(-0.08, 0.0);
            const Eigen::VectorXd base = plant.solve(u, d);
            const int bus = static_cast<int>(rng.uniform() * n_load);
            Eigen::VectorXd d2 = d;
            d2(bus) -= 0.05; // more consumption
            const Eigen::VectorXd deeper = plant.solve(u, d2);
            CHECK((deeper - base).maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("linearization error is second order") {
    const Plant plant = two_bus_plant();
    const Eigen::VectorXd u_op = make_u(1.0, 0.05, 0.0);
    const Eigen::VectorXd d_op = make_d(-0.1, -0.05);
    const LinearModel lin = plant.linearize(u_op, d_op);
    const Eigen::VectorXd y_op = plant.solve(u_op, d_op);

    Eigen::Vector3d direction(0.0, 1.0, 0.5);
    direction.normalize();
    std::vector<double> ratios;
    for (double step : {1e-2, 5e-3, 2e-3, 1e-3}) {
        const Eigen::VectorXd du = step * direction;
        const Eigen::VectorXd y = plant.solve(u_op + du, d_op);
        const double err = (y - y_op - lin.H0 * du).norm();
        ratios.push_back(err / (step * step));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo < 3.0); // stable quadratic ratio over a decade of steps
}
