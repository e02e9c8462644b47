#pragma once

#include <deque>

#include <Eigen/Dense>

#include "ofo/errors.hpp"

namespace ofo {

/// State-dependent noise covariances of the sensitivity random walk.
/// Both covariances are isotropic:
///   process      sigma_p = sigma_p1 + sigma_p2 |du|^2
///   measurement  sigma_m = sigma_m1 + sigma_m2 |du|^2 + sigma_m3 |du|^4
/// At least one process and one measurement coefficient must be positive so
/// the covariances stay positive definite whenever |du| > 0.
struct NoiseModel {
    double sigma_p1 = 0.0;
    double sigma_p2 = 1e-4;
    double sigma_m1 = 0.0;
    double sigma_m2 = 0.0;
    double sigma_m3 = 1e-2;

    void validate() const;
    double process_var(const Eigen::VectorXd& du) const;
    double measurement_var(const Eigen::VectorXd& du) const;
};

enum class CovarianceKind { Full, KroneckerIso };

/// Recursive least-squares estimate of the vectorized sensitivity
/// h = vec(H), H being n_y x n_u, updated from (du, dy) pairs as a Kalman
/// filter with regressor U = du^T (x) I:
///
///   K     = S U^T (sigma_m I + U S U^T)^-1
///   h_hat <- h_hat + K (dy - U h_hat)
///   S     <- (I - K U) S + sigma_p I
///
/// Two covariance backends store S. Full keeps the (n_y n_u)^2 matrix.
/// KroneckerIso keeps the n_u-sided factor A of S = A (x) I, which the
/// isotropic update preserves:
///
///   A <- A - (A du)(A du)^T / (sigma_m + du^T A du) + sigma_p I
///
/// with the gain applied row-wise to H. Both symmetrize after each step.
class SensitivityEstimate {
public:
    SensitivityEstimate(const Eigen::MatrixXd& h0, CovarianceKind kind,
                        double sigma0, NoiseModel noise);

    int ny() const { return ny_; }
    int nu() const { return nu_; }
    CovarianceKind kind() const { return kind_; }
    const NoiseModel& noise() const { return noise_; }

    /// Column-wise vectorization of the current estimate.
    const Eigen::VectorXd& vec() const { return h_; }
    /// Matrix view H (n_y x n_u); reshape of vec().
    Eigen::MatrixXd matrix() const;
    /// Predicted output change H du.
    Eigen::VectorXd predict_dy(const Eigen::VectorXd& du) const;

    /// One Kalman step with the pair (du, dy). A zero du leaves h_hat
    /// untouched and only inflates the covariance by sigma_p1.
    void update(const Eigen::VectorXd& du, const Eigen::VectorXd& dy);

    double covariance_trace() const;
    /// Expanded (n_y n_u)^2 covariance; intended for tests and diagnostics.
    Eigen::MatrixXd covariance_full() const;
    double min_covariance_eigenvalue() const;

private:
    void update_full(const Eigen::VectorXd& du, const Eigen::VectorXd& dy,
                     double sm, double sp);
    void update_kron(const Eigen::VectorXd& du, const Eigen::VectorXd& dy,
                     double sm, double sp);

    int ny_ = 0;
    int nu_ = 0;
    CovarianceKind kind_ = CovarianceKind::KroneckerIso;
    Eigen::VectorXd h_;
    Eigen::MatrixXd cov_; // Full: (ny nu)^2, KroneckerIso: nu x nu factor A
    NoiseModel noise_;
};

/// Ring buffer of the most recent input increments, newest first.
class ExcitationWindow {
public:
    ExcitationWindow(int dim, int capacity);

    int dim() const { return dim_; }
    int capacity() const { return capacity_; }
    int size() const { return static_cast<int>(entries_.size()); }

    void push(const Eigen::VectorXd& du);
    /// Stacked dim x size matrix, newest increment in column 0.
    Eigen::MatrixXd stacked() const;

private:
    int dim_;
    int capacity_;
    std::deque<Eigen::VectorXd> entries_;
};

struct PersistencyResult {
    int rank = 0;
    bool excited = false;
};

/// Numerical rank of the stacked increments (singular values above
/// rank_tol times the largest); excited when the window spans the full
/// input space.
PersistencyResult persistency_rank(const ExcitationWindow& window,
                                   double rank_tol = 1e-8);

} // namespace ofo
