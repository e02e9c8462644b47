#include <doctest.h>

#include "ofo/estimator.hpp"
#include "reference.hpp"

using namespace ofo;

namespace {

NoiseModel noise(double p1, double p2, double m1, double m2, double m3) {
    NoiseModel n;
    n.sigma_p1 = p1;
    n.sigma_p2 = p2;
    n.sigma_m1 = m1;
    n.sigma_m2 = m2;
    n.sigma_m3 = m3;
    return n;
}

Eigen::VectorXd random_vec(int n, Rng& rng, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * rng.gaussian();
    return v;
}

} // namespace

TEST_CASE("noise covariances follow the |du| polynomials") {
    Eigen::VectorXd du(1);
    du << 0.1;
    CHECK(noise(0, 1e-4, 0, 0, 1).process_var(du) == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(noise(0, 1e-4, 0, 0, 1).measurement_var(du) == doctest::Approx(1e-4).epsilon(1e-12));

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    CHECK(noise(2e-7, 1e-4, 1e-6, 0, 1).process_var(zero) == 2e-7);
    CHECK(noise(2e-7, 1e-4, 1e-6, 0, 1).measurement_var(zero) == 1e-6);

    // constant in du when only the offsets are set
    const NoiseModel flat = noise(1e-8, 0, 1e-6, 0, 1e-2);
    CHECK(flat.process_var(zero) == flat.process_var(Eigen::VectorXd::Ones(3)));

    // strictly increasing in |du| when sigma_m2 > 0
    const NoiseModel rising = noise(0, 1e-4, 0, 1e-3, 0);
    double prev = 0.0;
    for (double s : {0.1, 0.2, 0.5, 1.0}) {
        Eigen::VectorXd v(1);
        v << s;
        const double cur = rising.measurement_var(v);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("noise model validation") {
    CHECK_THROWS_AS(noise(0, 0, 0, 0, 1).validate(), ValidationError);
    CHECK_THROWS_AS(noise(0, 1, 0, 0, 0).validate(), ValidationError);
    CHECK_THROWS_AS(noise(-1e-9, 1, 0, 0, 1).validate(), ValidationError);
    CHECK_NOTHROW(noise(0, 1e-4, 0, 0, 1e-2).validate());
}

TEST_CASE("scalar Kalman step by hand") {
    // h=0, Sigma=1, sigma_m=1, sigma_p=0, du=1, dy=2 -> h'=1, Sigma'=0.5
    SensitivityEstimate est(Eigen::MatrixXd::Zero(1, 1), CovarianceKind::Full, 1.0,
                            noise(1e-30, 0, 1, 0, 0));
    Eigen::VectorXd du(1), dy(1);
    du << 1.0;
    dy << 2.0;
    est.update(du, dy);
    CHECK(est.vec()(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.covariance_full()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    // continuation: predict through the updated estimate
    Eigen::VectorXd probe(1);
    probe << 2.0;
    CHECK(est.predict_dy(probe)(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("zero increment freezes the estimate and inflates covariance") {
    for (CovarianceKind kind : {CovarianceKind::Full, CovarianceKind::KroneckerIso}) {
        SensitivityEstimate est(Eigen::MatrixXd::Ones(2, 2), kind, 0.1,
                                noise(1e-6, 1e-4, 0, 0, 1e-2));
        const Eigen::VectorXd h_before = est.vec();
        const double trace_before = est.covariance_trace();
        est.update(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2));
        CHECK((est.vec() - h_before).norm() == 0.0);
        CHECK(est.covariance_trace() ==
              doctest::Approx(trace_before + 1e-6 * 4).epsilon(1e-12));
    }
}

TEST_CASE("predict_dy basics") {
    SensitivityEstimate est(Eigen::MatrixXd::Identity(3, 3),
                            CovarianceKind::KroneckerIso, 0.1, noise(0, 1e-4, 0, 0, 1e-2));
    CHECK(est.predict_dy(Eigen::VectorXd::Zero(3)).norm() == 0.0);
    Eigen::VectorXd du(3);
    du << 1.0, -2.0, 0.5;
    CHECK((est.predict_dy(du) - du).norm() == 0.0);
    CHECK_THROWS_AS(est.predict_dy(Eigen::VectorXd::Zero(2)), ValidationError);
}

TEST_CASE("noiseless identification reaches the true sensitivity") {
    Rng rng(11);
    const int nu = 3, ny = 2;
    Eigen::MatrixXd h_true(ny, nu);
    h_true << 0.4, -0.2, 0.1, 0.05, 0.3, -0.15;

    SensitivityEstimate est(Eigen::MatrixXd::Zero(ny, nu), CovarianceKind::Full, 1.0,
                            noise(1e-30, 0, 1e-16, 0, 0));
    std::vector<Eigen::VectorXd> dus, dys;
    for (int k = 0; k < nu; ++k) {
        Eigen::VectorXd du = Eigen::VectorXd::Zero(nu);
        du(k) = 1.0; // linearly independent probes
        const Eigen::VectorXd dy = h_true * du;
        est.update(du, dy);
        dus.push_back(du);
        dys.push_back(dy);
    }
    CHECK((est.matrix() - h_true).norm() < 1e-6);
    CHECK((est.matrix() - ofo_test::batch_least_squares(dus, dys)).norm() < 1e-6);
}

TEST_CASE("backend equivalence on randomized instances") {
    Rng rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        const int nu = 1 + static_cast<int>(rng.uniform() * 4);
        const int ny = 1 + static_cast<int>(rng.uniform() * 4);
        const double sigma0 = rng.uniform(0.05, 0.5);
        const NoiseModel nm = noise(1e-7, 1e-4, 1e-8, 0, 1e-2);
        const Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(ny, nu);

        SensitivityEstimate full(h0, CovarianceKind::Full, sigma0, nm);
        SensitivityEstimate kron(h0, CovarianceKind::KroneckerIso, sigma0, nm);
        for (int step = 0; step < 50; ++step) {
            const Eigen::VectorXd du = random_vec(nu, rng, 0.1);
            const Eigen::VectorXd dy = random_vec(ny, rng, 0.1);
            full.update(du, dy);
            kron.update(du, dy);
            REQUIRE((full.vec() - kron.vec()).cwiseAbs().maxCoeff() < 1e-10);
            REQUIRE((full.covariance_full() - kron.covariance_full())
                        .cwiseAbs()
                        .maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("covariance stays symmetric positive semidefinite") {
    Rng rng(41);
    for (CovarianceKind kind : {CovarianceKind::Full, CovarianceKind::KroneckerIso}) {
        SensitivityEstimate est(Eigen::MatrixXd::Zero(3, 4), kind, 0.2,
                                noise(0, 1e-4, 0, 0, 1e-2));
        for (int step = 0; step < 200; ++step) {
            est.update(random_vec(4, rng, 0.05), random_vec(3, rng, 0.05));
            const Eigen::MatrixXd cov = est.covariance_full();
            REQUIRE((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            REQUIRE(est.min_covariance_eigenvalue() >= -1e-12);
        }
    }
}

TEST_CASE("static truth: error shrinks below 1% under persistent excitation") {
    Rng rng(53);
    const int nu = 4, ny = 3;
    Eigen::MatrixXd h_true(ny, nu);
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nu; ++j) h_true(i, j) = rng.uniform(-0.5, 0.5);

    const NoiseModel nm = noise(1e-30, 0, 0, 0, 1e-2); // sigma_p = 0
    SensitivityEstimate est(Eigen::MatrixXd::Zero(ny, nu), CovarianceKind::KroneckerIso,
                            0.5, nm);
    for (int step = 0; step < 500; ++step) {
        const Eigen::VectorXd du = random_vec(nu, rng, 0.1);
        Eigen::VectorXd dy = h_true * du;
        const double sd = std::sqrt(nm.measurement_var(du));
        for (int i = 0; i < ny; ++i) dy(i) += sd * rng.gaussian();
        est.update(du, dy);
    }
    CHECK((est.matrix() - h_true).norm() / h_true.norm() < 0.01);
}

TEST_CASE("estimation is independent of the input policy") {
    // identical recorded streams produce identical estimates, regardless of
    // what generated them
    Rng rng(61);
    std::vector<Eigen::VectorXd> dus, dys;
    for (int k = 0; k < 40; ++k) {
        dus.push_back(random_vec(3, rng, 0.1));
        dys.push_back(random_vec(2, rng, 0.1));
    }
    const NoiseModel nm = noise(0, 1e-4, 0, 0, 1e-2);
    SensitivityEstimate a(Eigen::MatrixXd::Zero(2, 3), CovarianceKind::KroneckerIso, 0.1, nm);
    SensitivityEstimate b(Eigen::MatrixXd::Zero(2, 3), CovarianceKind::KroneckerIso, 0.1, nm);
    for (size_t k = 0; k < dus.size(); ++k) a.update(dus[k], dys[k]);
    for (size_t k = 0; k < dus.size(); ++k) b.update(dus[k], dys[k]);
    CHECK((a.vec() - b.vec()).norm() == 0.0);
    CHECK((a.covariance_full() - b.covariance_full()).norm() == 0.0);
}

TEST_CASE("excitation window and persistency rank") {
    SUBCASE("basis vectors reach full rank") {
        ExcitationWindow w(3, 3);
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
            e(k) = 1.0;
            w.push(e);
        }
        const PersistencyResult r = persistency_rank(w);
        CHECK(r.rank == 3);
        CHECK(r.excited);
    }
    SUBCASE("repeated vector is rank one") {
        ExcitationWindow w(3, 5);
        Eigen::VectorXd v(3);
        v << 1.0, 2.0, -1.0;
        for (int k = 0; k < 5; ++k) w.push(v);
        const PersistencyResult r = persistency_rank(w);
        CHECK(r.rank == 1);
        CHECK_FALSE(r.excited);
    }
    SUBCASE("all-zero window has rank zero") {
        ExcitationWindow w(2, 2);
        w.push(Eigen::VectorXd::Zero(2));
        w.push(Eigen::VectorXd::Zero(2));
        const PersistencyResult r = persistency_rank(w);
        CHECK(r.rank == 0);
        CHECK_FALSE(r.excited);
    }
    SUBCASE("continuous samples are excited with probability one") {
        Rng rng(71);
        int excited = 0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            ExcitationWindow w(4, 4);
            for (int k = 0; k < 4; ++k) w.push(random_vec(4, rng));
            if (persistency_rank(w).excited) ++excited;
        }
        CHECK(excited == trials);
    }
    SUBCASE("window evicts oldest entries") {
        ExcitationWindow w(2, 2);
        Eigen::VectorXd a(2), b(2), c(2);
        a << 1, 0;
        b << 0, 1;
        c << 2, 2;
        w.push(a);
        w.push(b);
        w.push(c);
        CHECK(w.size() == 2);
        CHECK(w.stacked().col(0) == c); // newest first
        CHECK(w.stacked().col(1) == b);
    }
    SUBCASE("capacity below the dimension is rejected") {
        CHECK_THROWS_AS(ExcitationWindow(3, 2), ValidationError);
    }
}

TEST_CASE("covariance trace plateaus under process noise") {
    // process noise keeps re-inflating what the gain removes; the trace
    // settles at a positive equilibrium instead of collapsing or growing
    Rng rng(83);
    const int nu = 3, ny = 3;
    SensitivityEstimate est(Eigen::MatrixXd::Zero(ny, nu), CovarianceKind::KroneckerIso,
                            0.01, noise(0, 3e-8, 1e-4, 0, 1e-2));
    std::vector<double> traces;
    const Eigen::MatrixXd h_true = Eigen::MatrixXd::Identity(ny, nu);
    const int steps = 5000;
    for (int step = 0; step < steps; ++step) {
        const Eigen::VectorXd du = random_vec(nu, rng, 0.1);
        est.update(du, h_true * du);
        traces.push_back(est.covariance_trace());
    }
    // relative change of the windowed mean over the final 20%
    const auto mean_over = [&](int from, int to) {
        double s = 0.0;
        for (int t = from; t < to; ++t) s += traces[t];
        return s / (to - from);
    };
    const double first_half = mean_over(steps * 8 / 10, steps * 9 / 10);
    const double second_half = mean_over(steps * 9 / 10, steps);
    CHECK(second_half > 0.0);
    CHECK(std::abs(second_half - first_half) / second_half < 1e-3);
}
