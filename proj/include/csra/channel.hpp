#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace csra {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;  // one entry per channel

// Alpha-beta-gamma pathloss: PL = 10*alpha*log10(d/1m) + beta + 10*gamma*log10(f/1GHz).
inline double pathloss_db(double d_m, double f_ghz, double alpha, double beta, double gamma) {
    if (d_m <= 0.0 || f_ghz <= 0.0)
        throw std::domain_error("pathloss_db: distance and frequency must be positive");
    return 10.0 * alpha * std::log10(d_m) + beta + 10.0 * gamma * std::log10(f_ghz);
}

// h = zeta * 10^(-(PL + S)/10), with zeta the unit-variance fading draw.
inline Complex channel_gain(double pl_db, double shadow_db, Complex fading) {
    return fading * std::pow(10.0, -(pl_db + shadow_db) / 10.0);
}

// Zero-mean Gaussian random field with exponential autocorrelation
// exp(-d/d_corr), realized on a regular grid and bilinearly interpolated.
// Grid values come from the Cholesky factor of the exact grid covariance,
// so correlations between grid nodes are exact.
class ShadowingField {
public:
    ShadowingField() = default;

    double at(double x, double y) const {
        if (values_.empty()) return 0.0;
        const double gx = std::clamp((x - x0_) / spacing_, 0.0, static_cast<double>(nx_ - 1));
        const double gy = std::clamp((y - y0_) / spacing_, 0.0, static_cast<double>(ny_ - 1));
        const int ix = std::min(static_cast<int>(gx), nx_ - 2);
        const int iy = std::min(static_cast<int>(gy), ny_ - 2);
        const double fx = gx - ix;
        const double fy = gy - iy;
        const double v00 = value(ix, iy), v10 = value(ix + 1, iy);
        const double v01 = value(ix, iy + 1), v11 = value(ix + 1, iy + 1);
        return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 +
               (1 - fx) * fy * v01 + fx * fy * v11;
    }

private:
    friend class ShadowingModel;
    double x0_ = 0.0, y0_ = 0.0, spacing_ = 1.0;
    int nx_ = 0, ny_ = 0;
    std::vector<double> values_;

    double value(int ix, int iy) const {
        return values_[static_cast<std::size_t>(iy) * nx_ + ix];
    }
};

// Owns the (expensive) Cholesky factor of the grid covariance; sampling a
// field realization is then one matrix-vector product. One model per
// deployment geometry, one field per run.
class ShadowingModel {
public:
    ShadowingModel(double width_m, double height_m, double sigma_db, double d_corr_m,
                   double spacing_m = 1.0)
        : sigma_(sigma_db) {
        if (sigma_db < 0.0) throw std::domain_error("ShadowingModel: sigma_s < 0");
        if (d_corr_m <= 0.0) throw std::domain_error("ShadowingModel: d_corr <= 0");
        // Keep the grid small enough that the one-time factorization stays cheap.
        const double min_spacing = std::sqrt(width_m * height_m / 2400.0);
        spacing_ = std::max(spacing_m, min_spacing);
        nx_ = static_cast<int>(std::floor(width_m / spacing_)) + 1;
        ny_ = static_cast<int>(std::floor(height_m / spacing_)) + 1;
        if (sigma_ == 0.0) return;

        const int n = nx_ * ny_;
        Eigen::MatrixXd cov(n, n);
        for (int a = 0; a < n; ++a) {
            const double ax = (a % nx_) * spacing_, ay = (a / nx_) * spacing_;
            for (int b = 0; b <= a; ++b) {
                const double bx = (b % nx_) * spacing_, by = (b / nx_) * spacing_;
                const double d = std::hypot(ax - bx, ay - by);
                const double c = sigma_ * sigma_ * std::exp(-d / d_corr_m);
                cov(a, b) = c;
                cov(b, a) = c;
            }
            cov(a, a) += 1e-10 * sigma_ * sigma_;
        }
        chol_ = cov.llt().matrixL();
    }

    ShadowingField sample(std::mt19937_64& rng) const {
        ShadowingField f;
        f.spacing_ = spacing_;
        f.nx_ = nx_;
        f.ny_ = ny_;
        const int n = nx_ * ny_;
        f.values_.assign(static_cast<std::size_t>(n), 0.0);
        if (sigma_ == 0.0) return f;
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = gauss(rng);
        Eigen::VectorXd v = chol_ * z;
        for (int i = 0; i < n; ++i) f.values_[static_cast<std::size_t>(i)] = v(i);
        return f;
    }

    double spacing() const { return spacing_; }

private:
    double sigma_;
    double spacing_ = 1.0;
    int nx_ = 0, ny_ = 0;
    Eigen::MatrixXd chol_;
};

// Shadowing of the link a<->b: the field sampled at the link midpoint.
// Links with nearby midpoints then shadow alike, with the field's spatial
// autocorrelation.
inline double shadowing_at(double ax, double ay, double bx, double by,
                           const ShadowingField& field) {
    return field.at(0.5 * (ax + bx), 0.5 * (ay + by));
}

// Complex AWGN vector with unit power per entry.
inline ComplexVec awgn(int M, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    ComplexVec out(static_cast<std::size_t>(M));
    for (auto& v : out) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v = Complex(re, im);
    }
    return out;
}

// Rayleigh fading draw, CN(0,1) per channel.
inline ComplexVec fading_vector(int M, std::mt19937_64& rng) {
    return awgn(M, rng);
}

// Aggregated pilot at the CAP: y = sum_n sqrt(eta) diag(h_n) x_n + noise.
inline ComplexVec aggregate_pilot(const std::vector<ComplexVec>& gains,
                                  const std::vector<ComplexVec>& pilots,
                                  double snr_linear, const ComplexVec& noise) {
    if (gains.size() != pilots.size())
        throw std::invalid_argument("aggregate_pilot: gains/pilots size mismatch");
    const std::size_t M = noise.size();
    ComplexVec y(noise);
    const double amp = std::sqrt(snr_linear);
    for (std::size_t n = 0; n < gains.size(); ++n) {
        if (gains[n].size() != M || pilots[n].size() != M)
            throw std::invalid_argument("aggregate_pilot: vector dimension mismatch");
        for (std::size_t m = 0; m < M; ++m) y[m] += amp * gains[n][m] * pilots[n][m];
    }
    return y;
}

// CS signal as observed by one LAP: y_n = sqrt(eta) diag(h_n) y + noise.
inline ComplexVec broadcast_cs(const ComplexVec& y, const ComplexVec& gain,
                               double snr_linear, const ComplexVec& noise) {
    if (y.size() != gain.size() || y.size() != noise.size())
        throw std::invalid_argument("broadcast_cs: vector dimension mismatch");
    ComplexVec out(y.size());
    const double amp = std::sqrt(snr_linear);
    for (std::size_t m = 0; m < y.size(); ++m) out[m] = amp * gain[m] * y[m] + noise[m];
    return out;
}

}  // namespace csra
