#pragma once

// Small dense-matrix numerics for systems of a handful of states: arithmetic,
// LU solves, zero-order-hold discretization, the discrete algebraic Riccati
// equation, and spectral radius.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/error.hpp"

namespace steerkit::numkit {

/// Dense row-major real matrix. Always at least 1x1.
class Mat {
public:
    Mat() : Mat(1, 1) {}

    Mat(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols) {
        if (rows == 0 || cols == 0) throw InputError("Mat: dimensions must be >= 1");
        data_.assign(rows * cols, fill);
    }

    Mat(std::size_t rows, std::size_t cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0) throw InputError("Mat: dimensions must be >= 1");
        if (data_.size() != rows * cols) throw InputError("Mat: data length does not match rows*cols");
        if (!all_finite()) throw InputError("Mat: non-finite entry");
    }

    Mat(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        if (rows_ == 0 || cols_ == 0) throw InputError("Mat: dimensions must be >= 1");
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw InputError("Mat: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        if (!all_finite()) throw InputError("Mat: non-finite entry");
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }

    static Mat diag(std::span<const double> d) {
        Mat m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static Mat column(std::span<const double> v) { return Mat(v.size(), 1, std::vector<double>(v.begin(), v.end())); }
    static Mat row(std::span<const double> v) { return Mat(1, v.size(), std::vector<double>(v.begin(), v.end())); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }

    Mat transposed() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    // Scaled by the largest entry so huge iterates do not overflow.
    double frobenius_norm() const {
        const double m = max_abs();
        if (m == 0.0 || !std::isfinite(m)) return m;
        double s = 0.0;
        for (double v : data_) s += (v / m) * (v / m);
        return m * std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Mat symmetrized() const {
        Mat s = *this;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
        return s;
    }

    /// Copies `src` into this matrix with its top-left corner at (r0, c0).
    void set_block(std::size_t r0, std::size_t c0, const Mat& src) {
        if (r0 + src.rows_ > rows_ || c0 + src.cols_ > cols_) throw InputError("Mat::set_block: out of range");
        for (std::size_t i = 0; i < src.rows_; ++i)
            for (std::size_t j = 0; j < src.cols_; ++j) (*this)(r0 + i, c0 + j) = src(i, j);
    }

    Mat block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const {
        if (r0 + rows > rows_ || c0 + cols > cols_) throw InputError("Mat::block: out of range");
        Mat b(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }

    Mat& operator+=(const Mat& o) {
        check_same(o, "+");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        check_same(o, "-");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Mat& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, double s) { return a *= s; }
    friend Mat operator*(double s, Mat a) { return a *= s; }
    friend Mat operator-(Mat a) { return a *= -1.0; }

    friend Mat operator*(const Mat& a, const Mat& b) {
        if (a.cols_ != b.rows_)
            throw InputError("Mat: product dimension mismatch " + a.shape() + " * " + b.shape());
        Mat c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend bool operator==(const Mat&, const Mat&) = default;

    std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

private:
    void check_same(const Mat& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw InputError(std::string("Mat: operand shapes differ for ") + op + " (" + shape() + " vs " + o.shape() + ")");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Linear time-invariant system. dt == 0 marks continuous time.
struct StateSpace {
    Mat A;
    Mat B;
    Mat C;
    double dt = 0.0;

    std::size_t states() const { return A.rows(); }
    std::size_t inputs() const { return B.cols(); }
    bool is_discrete() const { return dt > 0.0; }

    void validate() const {
        if (!A.is_square()) throw InputError("StateSpace: A must be square, got " + A.shape());
        if (B.rows() != A.rows()) throw InputError("StateSpace: B rows must equal A rows");
        if (C.cols() != A.cols()) throw InputError("StateSpace: C cols must equal A cols");
        if (!(dt >= 0.0) || !std::isfinite(dt)) throw InputError("StateSpace: dt must be finite and >= 0");
        if (!A.all_finite() || !B.all_finite() || !C.all_finite()) throw NumericError("StateSpace: non-finite entry");
    }
};

namespace detail {

inline void require_finite(const Mat& m, const char* what) {
    if (!m.all_finite()) throw NumericError(std::string(what) + ": non-finite entry");
}

// Norm-1 (max column sum).
inline double norm1(const Mat& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
inline Mat expm(const Mat& a) {
    if (!a.is_square()) throw InputError("expm: matrix must be square");
    detail::require_finite(a, "expm");
    const std::size_t n = a.rows();
    int squarings = 0;
    const double nrm = detail::norm1(a);
    if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    const Mat scaled = a * std::ldexp(1.0, -squarings);

    // ||scaled|| <= 0.5, so 20 terms leave a remainder far below eps.
    Mat result = Mat::identity(n);
    Mat term = Mat::identity(n);
    for (int k = 1; k <= 20; ++k) {
        term = term * scaled;
        term *= 1.0 / k;
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    detail::require_finite(result, "expm");
    return result;
}

/// Zero-order-hold discretization. Ad = e^{A dt}, Bd = int_0^dt e^{A t} dt B,
/// both read off the exponential of the augmented matrix [[A, B], [0, 0]] dt.
inline StateSpace c2d(const StateSpace& sys, double dt) {
    sys.validate();
    if (sys.dt != 0.0) throw InputError("c2d: system is already discrete");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("c2d: dt must be positive");
    const std::size_t n = sys.states();
    const std::size_t m = sys.inputs();
    Mat aug(n + m, n + m);
    aug.set_block(0, 0, sys.A * dt);
    aug.set_block(0, n, sys.B * dt);
    const Mat e = expm(aug);
    return StateSpace{e.block(0, 0, n, n), e.block(0, n, n, m), sys.C, dt};
}

/// LU factorization with partial pivoting, kept for repeated solves.
class LuDecomposition {
public:
    explicit LuDecomposition(const Mat& a) : lu_(a), perm_(a.rows()) {
        if (!a.is_square()) throw InputError("mat_solve: A must be square, got " + a.shape());
        detail::require_finite(a, "mat_solve");
        const std::size_t n = a.rows();
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
        const double scale = std::max(a.max_abs(), 1e-300);
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
            if (std::abs(lu_(p, k)) <= 1e-14 * scale)
                throw NumericError("mat_solve: matrix is singular to working precision");
            if (p != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(p, j), lu_(k, j));
                std::swap(perm_[p], perm_[k]);
            }
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) / lu_(k, k);
                lu_(i, k) = f;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    Mat solve(const Mat& b) const {
        const std::size_t n = lu_.rows();
        if (b.rows() != n) throw InputError("mat_solve: B rows must equal A rows");
        Mat x(n, b.cols());
        for (std::size_t c = 0; c < b.cols(); ++c) {
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                double s = b(perm_[i], c);
                for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * y[j];
                y[i] = s;
            }
            for (std::size_t i = n; i-- > 0;) {
                double s = y[i];
                for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x(j, c);
                x(i, c) = s / lu_(i, i);
            }
        }
        detail::require_finite(x, "mat_solve");
        return x;
    }

private:
    Mat lu_;
    std::vector<std::size_t> perm_;
};

/// Solves A X = B.
inline Mat mat_solve(const Mat& a, const Mat& b) {
    detail::require_finite(b, "mat_solve");
    return LuDecomposition(a).solve(b);
}

inline Mat inverse(const Mat& a) { return mat_solve(a, Mat::identity(a.rows())); }

struct DareOptions {
    double step_tol = 1e-12;   // relative: ||X_{k+1} - X_k|| <= step_tol (1 + ||X_k||)
    int max_iterations = 100000;
};

/// Left side of the discrete algebraic Riccati equation evaluated at X.
inline Mat dare_residual(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& x) {
    const Mat at = a.transposed();
    const Mat bt_x = b.transposed() * x;
    const Mat gain_core = mat_solve(r + bt_x * b, bt_x * a);
    return at * x * a - x + q - at * x * b * gain_core;
}

/// Stabilizing solution of  A'XA - X + Q - A'XB (R + B'XB)^-1 B'XA = 0 by
/// fixed-point Riccati iteration from X0 = Q.
inline Mat solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const DareOptions& opt = {}) {
    if (!a.is_square()) throw InputError("solve_dare: A must be square");
    const std::size_t n = a.rows();
    if (b.rows() != n) throw InputError("solve_dare: B rows must equal A rows");
    if (q.rows() != n || q.cols() != n) throw InputError("solve_dare: Q must be n x n");
    if (r.rows() != b.cols() || r.cols() != b.cols()) throw InputError("solve_dare: R must be m x m");
    for (const Mat* m : {&a, &b, &q, &r}) detail::require_finite(*m, "solve_dare");
    if ((q - q.transposed()).max_abs() > 1e-12 * (1.0 + q.max_abs())) throw InputError("solve_dare: Q must be symmetric");
    if ((r - r.transposed()).max_abs() > 1e-12 * (1.0 + r.max_abs())) throw InputError("solve_dare: R must be symmetric");
    try {
        (void)LuDecomposition(r);
    } catch (const NumericError&) {
        throw NumericError("solve_dare: R is not invertible");
    }

    const Mat at = a.transposed();
    const Mat bt = b.transposed();
    Mat x = q;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Mat bt_x = bt * x;
        const Mat gain_core = mat_solve(r + bt_x * b, bt_x * a);
        Mat next = (at * x * a + q - at * x * b * gain_core).symmetrized();
        if (!next.all_finite()) throw NumericError("solve_dare: Riccati iteration diverged (unstabilizable pair)");
        const double step = (next - x).frobenius_norm();
        x = std::move(next);
        if (step <= opt.step_tol * (1.0 + x.frobenius_norm())) return x;
    }
    throw NumericError("solve_dare: Riccati iteration did not converge (unstabilizable pair or ill-conditioned data)");
}

/// Optimal state-feedback gain K = (R + B'XB)^-1 B'XA for u = -K x.
inline Mat lqr_gain(const Mat& a, const Mat& b, const Mat& r, const Mat& x) {
    const Mat bt_x = b.transposed() * x;
    return mat_solve(r + bt_x * b, bt_x * a);
}

/// All eigenvalues: elimination to Hessenberg form, then Francis double-shift
/// QR sweeps with deflation.
inline std::vector<std::complex<double>> eigenvalues(const Mat& m) {
    if (!m.is_square()) throw InputError("eigenvalues: matrix must be square, got " + m.shape());
    detail::require_finite(m, "eigenvalues");
    const int n = static_cast<int>(m.rows());
    Mat h = m;
    // 1-based view keeps the index arithmetic of the classic algorithm readable.
    auto a = [&h](int i, int j) -> double& { return h(i - 1, j - 1); };

    for (int mm = 2; mm < n; ++mm) {
        double x = 0.0;
        int i = mm;
        for (int j = mm; j <= n; ++j)
            if (std::abs(a(j, mm - 1)) > std::abs(x)) {
                x = a(j, mm - 1);
                i = j;
            }
        if (i != mm) {
            for (int j = mm - 1; j <= n; ++j) std::swap(a(i, j), a(mm, j));
            for (int j = 1; j <= n; ++j) std::swap(a(j, i), a(j, mm));
        }
        if (x != 0.0) {
            for (i = mm + 1; i <= n; ++i) {
                double y = a(i, mm - 1);
                if (y != 0.0) {
                    y /= x;
                    a(i, mm - 1) = y;
                    for (int j = mm; j <= n; ++j) a(i, j) -= y * a(mm, j);
                    for (int j = 1; j <= n; ++j) a(j, mm) += y * a(j, i);
                }
            }
        }
    }
    for (int i = 3; i <= n; ++i)
        for (int j = 1; j <= i - 2; ++j) a(i, j) = 0.0;

    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    auto sign = [](double v, double s) { return s >= 0.0 ? std::abs(v) : -std::abs(v); };
    double anorm = 0.0;
    for (int i = 1; i <= n; ++i)
        for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a(i, j));
    int nn = n;
    double t = 0.0;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) + s == s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                w[nn - 1] = {x + t, 0.0};
                --nn;
            } else {
                double y = a(nn - 1, nn - 1);
                double ww = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + ww;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign(z, p);
                        const double r1 = x + z;
                        const double r2 = z != 0.0 ? x - ww / z : r1;
                        w[nn - 2] = {r1, 0.0};
                        w[nn - 1] = {r2, 0.0};
                    } else {
                        w[nn - 2] = {x + p, z};
                        w[nn - 1] = {x + p, -z};
                    }
                    nn -= 2;
                } else {
                    if (its == 60) throw NumericError("eigenvalues: QR iteration did not converge");
                    if (its == 10 || its == 20 || its == 40) {
                        t += x;
                        for (int i = 1; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    int mm = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; mm >= l; --mm) {
                        z = a(mm, mm);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - ww) / a(mm + 1, mm) + a(mm, mm + 1);
                        q = a(mm + 1, mm + 1) - z - r - s;
                        r = a(mm + 2, mm + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (mm == l) break;
                        const double u = std::abs(a(mm, mm - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(mm - 1, mm - 1)) + std::abs(z) + std::abs(a(mm + 1, mm + 1)));
                        if (u + v == v) break;
                    }
                    for (int i = mm + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != mm + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = mm; k <= nn - 1; ++k) {
                        if (k != mm) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign(std::sqrt(p * p + q * q + r * r), p);
                        if (s != 0.0) {
                            if (k == mm) {
                                if (l != mm) a(k, k - 1) = -a(k, k - 1);
                            } else {
                                a(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = a(k, j) + q * a(k + 1, j);
                                if (k != nn - 1) {
                                    p += r * a(k + 2, j);
                                    a(k + 2, j) -= p * z;
                                }
                                a(k + 1, j) -= p * y;
                                a(k, j) -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * a(i, k) + y * a(i, k + 1);
                                if (k != nn - 1) {
                                    p += z * a(i, k + 2);
                                    a(i, k + 2) -= p * r;
                                }
                                a(i, k + 1) -= p * q;
                                a(i, k) -= p;
                            }
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return w;
}

inline double spectral_radius(const Mat& a) {
    double rho = 0.0;
    for (const auto& lambda : eigenvalues(a)) rho = std::max(rho, std::abs(lambda));
    return rho;
}

}  // namespace steerkit::numkit
