#include "cdfuse/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "cdfuse/errors.hpp"

namespace cdfuse {

namespace {

double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth,
                          int initial_panels) {
    if (a == b) return 0.0;
    int n = std::max(1, initial_panels);
    double h = (b - a) / n;
    double ptol = tol / n;
    double total = 0.0;
    double x0 = a, f0 = f(a);
    for (int i = 0; i < n; ++i) {
        double x1 = (i == n - 1) ? b : a + (i + 1) * h;
        double xm = 0.5 * (x0 + x1);
        double fm = f(xm), f1 = f(x1);
        double whole = simpson(f0, fm, f1, x1 - x0);
        total += adapt(f, x0, x1, f0, fm, f1, whole, ptol, max_depth);
        x0 = x1;
        f0 = f1;
    }
    return total;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int panels) {
    static const double xs[8] = {
        0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
        0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
        0.9445750230732326, 0.9894009349916499};
    static const double ws[8] = {
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
        0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
        0.0622535239386479, 0.0271524594117541};
    double total = 0.0;
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double c = a + (p + 0.5) * h;
        double acc = 0.0;
        for (int i = 0; i < 8; ++i)
            acc += ws[i] * (f(c + 0.5 * h * xs[i]) + f(c - 0.5 * h * xs[i]));
        total += acc * 0.5 * h;
    }
    return total;
}

namespace {

using Vec = std::vector<double>;
using Fn = std::function<Vec(const Vec&)>;

double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

Vec exp_vec(const Vec& y) {
    Vec p(y.size());
    for (size_t i = 0; i < y.size(); ++i) p[i] = std::exp(y[i]);
    return p;
}

// Residual evaluation that turns any numeric failure inside the model
// (divergent series, infeasible point) into a rejected step.
bool try_eval(const Fn& F, const Vec& y, Vec& out) {
    try {
        out = F(exp_vec(y));
        for (double v : out)
            if (!std::isfinite(v)) return false;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_linear(std::vector<Vec> A, Vec b, Vec& x) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int row = col + 1; row < n; ++row)
            if (std::fabs(A[row][col]) > std::fabs(A[piv][col])) piv = row;
        if (std::fabs(A[piv][col]) < 1e-300) return false;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (int row = col + 1; row < n; ++row) {
            double f = A[row][col] / A[col][col];
            for (int k = col; k < n; ++k) A[row][k] -= f * A[col][k];
            b[row] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int row = n - 1; row >= 0; --row) {
        double s = b[row];
        for (int k = row + 1; k < n; ++k) s -= A[row][k] * x[k];
        x[row] = s / A[row][row];
    }
    return true;
}

// Nelder-Mead on the squared residual norm; used only when Newton stalls.
Vec nelder_mead(const Fn& F, Vec y0, int iters) {
    const int n = static_cast<int>(y0.size());
    auto g = [&](const Vec& y) {
        Vec r;
        return try_eval(F, y, r) ? norm2(r) : 1e100;
    };
    std::vector<Vec> pts(n + 1, y0);
    Vec vals(n + 1);
    for (int i = 1; i <= n; ++i) pts[i][i - 1] += 0.05;
    for (int i = 0; i <= n; ++i) vals[i] = g(pts[i]);
    for (int it = 0; it < iters; ++it) {
        int lo = 0, hi = 0, hi2 = 0;
        for (int i = 1; i <= n; ++i) {
            if (vals[i] < vals[lo]) lo = i;
            if (vals[i] > vals[hi]) hi = i;
        }
        for (int i = 0; i <= n; ++i)
            if (i != hi && vals[i] > vals[hi2]) hi2 = i;
        if (vals[lo] < 1e-24) break;
        Vec centroid(n, 0.0);
        for (int i = 0; i <= n; ++i)
            if (i != hi)
                for (int j = 0; j < n; ++j) centroid[j] += pts[i][j] / n;
        auto blend = [&](double t) {
            Vec p(n);
            for (int j = 0; j < n; ++j)
                p[j] = centroid[j] + t * (pts[hi][j] - centroid[j]);
            return p;
        };
        Vec refl = blend(-1.0);
        double fr = g(refl);
        if (fr < vals[lo]) {
            Vec expd = blend(-2.0);
            double fe = g(expd);
            if (fe < fr) { pts[hi] = expd; vals[hi] = fe; }
            else { pts[hi] = refl; vals[hi] = fr; }
        } else if (fr < vals[hi2]) {
            pts[hi] = refl; vals[hi] = fr;
        } else {
            Vec con = blend(0.5);
            double fc = g(con);
            if (fc < vals[hi]) { pts[hi] = con; vals[hi] = fc; }
            else {
                for (int i = 0; i <= n; ++i) {
                    if (i == lo) continue;
                    for (int j = 0; j < n; ++j)
                        pts[i][j] = 0.5 * (pts[i][j] + pts[lo][j]);
                    vals[i] = g(pts[i]);
                }
            }
        }
    }
    int lo = 0;
    for (int i = 1; i <= n; ++i)
        if (vals[i] < vals[lo]) lo = i;
    return pts[lo];
}

bool newton_pass(const Fn& F, Vec& y, Vec& r, double tol, int max_iter) {
    const int n = static_cast<int>(y.size());
    for (int iter = 0; iter < max_iter; ++iter) {
        if (max_abs(r) < tol) return true;
        std::vector<Vec> J(n, Vec(n));
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            double h = 1e-6;
            Vec y2 = y, r2;
            y2[j] += h;
            if (!try_eval(F, y2, r2)) {
                y2[j] = y[j] - h;
                h = -h;
                ok = try_eval(F, y2, r2);
            }
            if (ok)
                for (int i = 0; i < n; ++i) J[i][j] = (r2[i] - r[i]) / h;
        }
        if (!ok) return false;
        std::vector<Vec> A(n, Vec(n));
        Vec rhs(n), dy;
        for (int i = 0; i < n; ++i) {
            rhs[i] = -r[i];
            for (int j = 0; j < n; ++j) A[i][j] = J[i][j];
        }
        if (!solve_linear(A, rhs, dy)) return false;
        double base = norm2(r);
        double lambda = 1.0;
        bool stepped = false;
        while (lambda > 1e-12) {
            Vec y2(n), r2;
            for (int j = 0; j < n; ++j) y2[j] = y[j] + lambda * dy[j];
            if (try_eval(F, y2, r2) && norm2(r2) < base) {
                y = y2;
                r = r2;
                stepped = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!stepped) return false;
    }
    return max_abs(r) < tol;
}

} // namespace

std::vector<double> solve_moments(const Fn& F, Vec start, double tol,
                                  int max_iter) {
    Vec y(start.size());
    for (size_t i = 0; i < start.size(); ++i) {
        if (!(start[i] > 0.0))
            throw FitError("solve_moments: start values must be positive");
        y[i] = std::log(start[i]);
    }
    Vec r;
    if (!try_eval(F, y, r))
        throw FitError("solve_moments: residuals undefined at start point");
    if (!newton_pass(F, y, r, tol, max_iter)) {
        y = nelder_mead(F, y, 2000);
        if (!try_eval(F, y, r))
            throw FitError("solve_moments: fallback landed on invalid point");
        newton_pass(F, y, r, tol, max_iter);
    }
    if (max_abs(r) >= tol) {
        std::ostringstream msg;
        msg << "solve_moments: no convergence, residuals (";
        for (size_t i = 0; i < r.size(); ++i)
            msg << (i ? ", " : "") << r[i];
        msg << ")";
        throw FitError(msg.str());
    }
    return exp_vec(y);
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = a + (b - a) * i / (n - 1);
    return g;
}

double trapz(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (size_t i = 1; i < x.size(); ++i)
        s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

std::vector<double> cumtrapz(const std::vector<double>& x,
                             const std::vector<double>& y) {
    std::vector<double> c(x.size(), 0.0);
    for (size_t i = 1; i < x.size(); ++i)
        c[i] = c[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return c;
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys,
              double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    size_t i = it - xs.begin();
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

double interp_inverse(const std::vector<double>& xs,
                      const std::vector<double>& ys, double y) {
    if (y <= ys.front()) return xs.front();
    if (y >= ys.back()) return xs.back();
    auto it = std::upper_bound(ys.begin(), ys.end(), y);
    size_t i = it - ys.begin();
    double denom = ys[i] - ys[i - 1];
    if (denom <= 0.0) return xs[i];
    double t = (y - ys[i - 1]) / denom;
    return xs[i - 1] + t * (xs[i] - xs[i - 1]);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 4;
    if (const char* env = std::getenv("CDFUSE_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    int workers = std::min(n, hw);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace cdfuse
