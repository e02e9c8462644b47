#include "ofo/estimator.hpp"

#include <string>

namespace ofo {

void NoiseModel::validate() const {
    for (double v : {sigma_p1, sigma_p2, sigma_m1, sigma_m2, sigma_m3})
        if (v < 0.0 || !std::isfinite(v))
            throw ValidationError("noise coefficients must be finite and >= 0");
    if (sigma_p1 <= 0.0 && sigma_p2 <= 0.0)
        throw ValidationError("at least one process-noise coefficient must be positive");
    if (sigma_m1 <= 0.0 && sigma_m2 <= 0.0 && sigma_m3 <= 0.0)
        throw ValidationError("at least one measurement-noise coefficient must be positive");
}

double NoiseModel::process_var(const Eigen::VectorXd& du) const {
    const double n2 = du.squaredNorm();
    return sigma_p1 + sigma_p2 * n2;
}

double NoiseModel::measurement_var(const Eigen::VectorXd& du) const {
    const double n2 = du.squaredNorm();
    return sigma_m1 + sigma_m2 * n2 + sigma_m3 * n2 * n2;
}

SensitivityEstimate::SensitivityEstimate(const Eigen::MatrixXd& h0,
                                         CovarianceKind kind, double sigma0,
                                         NoiseModel noise)
    : ny_(static_cast<int>(h0.rows())),
      nu_(static_cast<int>(h0.cols())),
      kind_(kind),
      noise_(noise) {
    noise_.validate();
    if (ny_ < 1 || nu_ < 1)
        throw ValidationError("sensitivity estimate needs ny, nu >= 1");
    if (!(sigma0 > 0.0))
        throw ValidationError("sigma0 must be positive");
    h_ = Eigen::Map<const Eigen::VectorXd>(h0.data(), ny_ * nu_);
    const double var0 = sigma0 * sigma0;
    if (kind_ == CovarianceKind::Full)
        cov_ = var0 * Eigen::MatrixXd::Identity(ny_ * nu_, ny_ * nu_);
    else
        cov_ = var0 * Eigen::MatrixXd::Identity(nu_, nu_);
}

Eigen::MatrixXd SensitivityEstimate::matrix() const {
    return Eigen::Map<const Eigen::MatrixXd>(h_.data(), ny_, nu_);
}

Eigen::VectorXd SensitivityEstimate::predict_dy(const Eigen::VectorXd& du) const {
    if (du.size() != nu_)
        throw ValidationError("predict_dy: expected du of size " + std::to_string(nu_));
    return matrix() * du;
}

void SensitivityEstimate::update(const Eigen::VectorXd& du, const Eigen::VectorXd& dy) {
    if (du.size() != nu_ || dy.size() != ny_)
        throw ValidationError("kalman update: dimension mismatch (du " +
                              std::to_string(du.size()) + ", dy " +
                              std::to_string(dy.size()) + ")");
    if (!du.allFinite() || !dy.allFinite())
        throw ValidationError("kalman update: non-finite du or dy");

    const double sp = noise_.process_var(du);
    const double sm = noise_.measurement_var(du);

    // Zero regressor: the gain vanishes, only the process noise acts.
    if (du.isZero(0.0)) {
        if (kind_ == CovarianceKind::Full)
            cov_ += noise_.sigma_p1 * Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols());
        else
            cov_ += noise_.sigma_p1 * Eigen::MatrixXd::Identity(nu_, nu_);
        return;
    }

    if (kind_ == CovarianceKind::Full)
        update_full(du, dy, sm, sp);
    else
        update_kron(du, dy, sm, sp);
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
}

void SensitivityEstimate::update_full(const Eigen::VectorXd& du,
                                      const Eigen::VectorXd& dy, double sm,
                                      double sp) {
    const int n = ny_ * nu_;
    // U = du^T (x) I, ny x n
    Eigen::MatrixXd u_delta = Eigen::MatrixXd::Zero(ny_, n);
    for (int j = 0; j < nu_; ++j)
        u_delta.block(0, j * ny_, ny_, ny_).diagonal().setConstant(du(j));

    const Eigen::MatrixXd cov_ut = cov_ * u_delta.transpose(); // n x ny
    Eigen::MatrixXd innov_cov = u_delta * cov_ut;              // ny x ny
    innov_cov.diagonal().array() += sm;

    Eigen::LLT<Eigen::MatrixXd> llt(innov_cov);
    if (llt.info() != Eigen::Success)
        throw ValidationError("kalman update: singular innovation covariance");

    const Eigen::MatrixXd gain = llt.solve(cov_ut.transpose()).transpose(); // n x ny
    h_ += gain * (dy - u_delta * h_);
    cov_ = (Eigen::MatrixXd::Identity(n, n) - gain * u_delta) * cov_;
    cov_.diagonal().array() += sp;
}

void SensitivityEstimate::update_kron(const Eigen::VectorXd& du,
                                      const Eigen::VectorXd& dy, double sm,
                                      double sp) {
    const Eigen::VectorXd a_du = cov_ * du;
    const double denom = sm + du.dot(a_du);
    if (!(denom > 0.0))
        throw ValidationError("kalman update: singular innovation covariance");

    const Eigen::VectorXd gain_row = a_du / denom; // n_u, shared by all outputs
    Eigen::Map<Eigen::MatrixXd> h_mat(h_.data(), ny_, nu_);
    const Eigen::VectorXd innovation = dy - h_mat * du;
    h_mat.noalias() += innovation * gain_row.transpose();

    cov_ -= (a_du * a_du.transpose()) / denom;
    cov_.diagonal().array() += sp;
}

double SensitivityEstimate::covariance_trace() const {
    if (kind_ == CovarianceKind::Full) return cov_.trace();
    return static_cast<double>(ny_) * cov_.trace();
}

Eigen::MatrixXd SensitivityEstimate::covariance_full() const {
    if (kind_ == CovarianceKind::Full) return cov_;
    const int n = ny_ * nu_;
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < nu_; ++i)
        for (int j = 0; j < nu_; ++j)
            full.block(i * ny_, j * ny_, ny_, ny_).diagonal().setConstant(cov_(i, j));
    return full;
}

double SensitivityEstimate::min_covariance_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
    const double factor_min = es.eigenvalues().minCoeff();
    return factor_min; // eigenvalues of A (x) I are those of A, ny-fold
}

ExcitationWindow::ExcitationWindow(int dim, int capacity)
    : dim_(dim), capacity_(capacity) {
    if (dim < 1) throw ValidationError("excitation window: dim must be >= 1");
    if (capacity < dim)
        throw ValidationError("excitation window: capacity " + std::to_string(capacity) +
                              " below input dimension " + std::to_string(dim));
}

void ExcitationWindow::push(const Eigen::VectorXd& du) {
    if (du.size() != dim_)
        throw ValidationError("excitation window: increment has wrong dimension");
    entries_.push_front(du);
    if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_back();
}

Eigen::MatrixXd ExcitationWindow::stacked() const {
    Eigen::MatrixXd m(dim_, size());
    for (int i = 0; i < size(); ++i) m.col(i) = entries_[i];
    return m;
}

PersistencyResult persistency_rank(const ExcitationWindow& window, double rank_tol) {
    if (window.size() < 1)
        throw ValidationError("persistency rank needs at least one increment");
    const Eigen::MatrixXd m = window.stacked();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sigma = svd.singularValues();
    PersistencyResult out;
    if (sigma.size() == 0 || sigma(0) <= 0.0) return out;
    for (int i = 0; i < sigma.size(); ++i)
        if (sigma(i) > rank_tol * sigma(0)) ++out.rank;
    out.excited = (out.rank == window.dim());
    return out;
}

} // namespace ofo
