#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace dsm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Three-index array with the upper index first: t(k, i, j) = t^k_ij.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(int n) : n_(n), v_(static_cast<size_t>(n) * n * n, 0.0) {}

    int dim() const { return n_; }
    double& operator()(int k, int i, int j) { return v_[idx(k, i, j)]; }
    double operator()(int k, int i, int j) const { return v_[idx(k, i, j)]; }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    Vec flat() const { return Eigen::Map<const Vec>(v_.data(), static_cast<Eigen::Index>(v_.size())); }
    static Tensor3 from_flat(int n, const Vec& f) {
        Tensor3 t(n);
        std::copy(f.data(), f.data() + f.size(), t.v_.begin());
        return t;
    }

    Tensor3 operator-(const Tensor3& o) const {
        Tensor3 r(n_);
        for (size_t i = 0; i < v_.size(); ++i) r.v_[i] = v_[i] - o.v_[i];
        return r;
    }

private:
    size_t idx(int k, int i, int j) const { return (static_cast<size_t>(k) * n_ + i) * n_ + j; }
    int n_ = 0;
    std::vector<double> v_;
};

/// Four-index array r(l, k, i, j) = Ω^l_kij.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int n) : n_(n), v_(static_cast<size_t>(n) * n * n * n, 0.0) {}
    int dim() const { return n_; }
    double& operator()(int l, int k, int i, int j) { return v_[((static_cast<size_t>(l) * n_ + k) * n_ + i) * n_ + j]; }
    double operator()(int l, int k, int i, int j) const { return v_[((static_cast<size_t>(l) * n_ + k) * n_ + i) * n_ + j]; }
    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    int n_ = 0;
    std::vector<double> v_;
};

inline Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }
inline Mat unflatten(const Vec& v, int n) { return Eigen::Map<const Mat>(v.data(), n, n); }

} // namespace dsm
