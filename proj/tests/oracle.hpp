#pragma once

// Dense reference computations for the tests. Everything here works on plain
// vectors and Eigen matrices and never calls into the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Vec to_vec(const std::vector<cplx>& v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

inline std::vector<cplx> to_std(const Vec& v) {
    std::vector<cplx> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
    return out;
}

/// (e^{t l} - 1)/l evaluated in long double, or t when l = 0.
inline cplx hold_entry(cplx l, double t) {
    if (l == cplx{0.0, 0.0}) return t;
    const std::complex<long double> ll(l.real(), l.imag());
    const auto e = std::exp(static_cast<long double>(t) * ll) - 1.0L;
    const auto q = e / ll;
    return {static_cast<double>(q.real()), static_cast<double>(q.imag())};
}

inline cplx exp_minus_one(cplx z) {
    const std::complex<long double> zz(z.real(), z.imag());
    const auto e = std::exp(zz) - 1.0L;
    return {static_cast<double>(e.real()), static_cast<double>(e.imag())};
}

inline Mat diag(const std::vector<cplx>& d) { return to_vec(d).asDiagonal(); }

/// diag(e^{tau l_n}) + s f^T with s_n = (e^{tau l_n} - 1)/l_n b_n.
inline Mat delta_matrix(const std::vector<cplx>& lam, const std::vector<cplx>& b, const std::vector<cplx>& f,
                        double tau) {
    const auto n = static_cast<Eigen::Index>(lam.size());
    Mat m = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const cplx s = hold_entry(lam[ii], tau) * b[ii];
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = s * f[static_cast<std::size_t>(j)];
        m(i, i) += std::exp(tau * lam[ii]);
    }
    return m;
}

/// diag(l) + b f^T
inline Mat closed_loop_generator(const std::vector<cplx>& lam, const std::vector<cplx>& b, const std::vector<cplx>& f) {
    Mat m = to_vec(b) * to_vec(f).transpose();
    for (std::size_t i = 0; i < lam.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += lam[i];
    return m;
}

inline Vec solve(const Mat& m, const Vec& x) { return m.fullPivLu().solve(x); }

/// (z I - M)^{-1} x
inline Vec resolvent(const Mat& m, cplx z, const Vec& x) {
    Mat a = -m;
    a.diagonal().array() += z;
    return solve(a, x);
}

inline std::vector<cplx> eigenvalues(const Mat& m) {
    Eigen::ComplexEigenSolver<Mat> es(m, false);
    return to_std(es.eigenvalues());
}

inline double spectral_radius(const Mat& m) {
    double r = 0.0;
    for (const auto& e : eigenvalues(m)) r = std::max(r, std::abs(e));
    return r;
}

inline double largest_singular_value(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

/// ||(i w I - M)^{-1}||_2
inline double resolvent_norm(const Mat& m, double w) {
    Mat a = -m;
    a.diagonal().array() += cplx{0.0, w};
    return largest_singular_value(a.inverse());
}

inline double rel_err(const Vec& got, const Vec& want) {
    const double d = (got - want).norm();
    const double s = want.norm();
    return s > 0.0 ? d / s : d;
}

/// Each target paired with the closest unused eigenvalue; max pair distance.
inline double matched_max_error(std::vector<cplx> got, const std::vector<cplx>& want) {
    double worst = 0.0;
    for (const auto& w : want) {
        auto it = std::min_element(got.begin(), got.end(),
                                   [&](const cplx& a, const cplx& b) { return std::abs(a - w) < std::abs(b - w); });
        if (it == got.end()) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(*it - w));
        got.erase(it);
    }
    return worst;
}

} // namespace oracle
